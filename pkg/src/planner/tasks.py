import logging

from celery import shared_task

from planner.bench import ExperimentConfig, run_experiment
from planner.models import ExperimentRun


logger = logging.getLogger(__name__)


@shared_task
def run_experiment_task(config: dict) -> int:
    """Runs an experiment from its JSON config and stores the table; returns the run id."""
    cfg = ExperimentConfig.model_validate(config)
    table = run_experiment(cfg)
    run = ExperimentRun.objects.record(table, config=cfg.model_dump(mode="json"), seed=cfg.seed)
    logger.info("Experiment %s stored as run %d", cfg.experiment, run.pk)
    return run.pk
