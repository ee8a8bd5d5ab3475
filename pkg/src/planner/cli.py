"""
Command line surface of the planner.

``python manage.py planner <subcommand>`` is the usual entry point;
``main(argv)`` runs the same command in-process and returns its exit code.

Exit codes: 0 success, 1 no plan or failed episode, 2 usage or
configuration error, 3 I/O error. Results go to stdout, diagnostics to
stderr.
"""
import json
import logging
import os
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Optional

import django
from django.apps import apps
from django.conf import settings
from django.core.management import CommandError
from pydantic import ValidationError

from planner.bench import ExperimentConfig, run_experiment, write_regression_set
from planner.episodes import TraceWriter, run_episode
from planner.exceptions import PlannerError, SearchError
from planner.features import FeatureScorer
from planner.grounding import load_ground_problem
from planner.perception import (
    dump_scenario,
    generate_adaptability,
    load_library,
    load_scenario,
    load_tool_registry,
    sense,
)
from planner.reports import emit_report, render
from planner.schemas import ScoreParams
from planner.search import SearchConfig, feature_guided_search
from planner.utils import TASK_TOOLS, resolve_path, task_assets


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_INTERNAL = 3

SUBCOMMANDS = ("validate", "plan", "episode", "bench", "generate")


# ── Arguments ─────────────────────────────────────────────────────────────────

def _add_problem_arguments(parser, scenario_required: bool = False):
    parser.add_argument("--task", help="Bundled task (tool name or task type) instead of --domain/--problem")
    parser.add_argument("--domain", help="Domain PDDL file")
    parser.add_argument("--problem", help="Problem PDDL file")
    parser.add_argument("--scenario", required=scenario_required, help="Scenario JSON file")
    parser.add_argument("--max-ground-actions", type=int, default=None)


def _add_search_arguments(parser):
    parser.add_argument("--algorithm", choices=("astar", "wastar", "ehc", "ucs"), default="astar")
    parser.add_argument("--heuristic", choices=("ff", "hadd", "hmax", "landmarks", "zero"), default="ff")
    parser.add_argument("--features", choices=("on", "off"), default="on")
    parser.add_argument("--trust", choices=("fixed", "switchable"), default="switchable")
    parser.add_argument("--weight", type=float, default=None)
    parser.add_argument("--node-budget", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None, help="Noise seed (defaults to the scenario's)")
    parser.add_argument("--noise", choices=("on", "off"), default="off")


def add_arguments(parser):
    subparsers = parser.add_subparsers(dest="subcommand", required=True)

    validate = subparsers.add_parser("validate", help="Parse and ground a problem, optionally check a scenario")
    _add_problem_arguments(validate)

    plan = subparsers.add_parser("plan", help="Run one feature guided search and print the plan")
    _add_problem_arguments(plan)
    _add_search_arguments(plan)

    episode = subparsers.add_parser("episode", help="Run a plan/construct/replan episode")
    _add_problem_arguments(episode, scenario_required=True)
    _add_search_arguments(episode)
    episode.add_argument("--budget", type=int, default=None, help="Maximum failed construction attempts")
    episode.add_argument("--trace", nargs="?", const="", default=None, help="JSON lines trace file")

    bench = subparsers.add_parser("bench", help="Run an experiment and write a report")
    bench.add_argument("--experiment", choices=("baselines", "algorithms", "adaptability"), default=None)
    bench.add_argument("--config", help="ExperimentConfig JSON file; flags given explicitly override it")
    bench.add_argument("--seed", type=int, default=None)
    bench.add_argument("--cases", type=int, default=None, help="Cases per tool")
    bench.add_argument("--tasks", nargs="+", default=None)
    bench.add_argument("--tools", nargs="+", default=None)
    bench.add_argument("--trust", choices=("fixed", "switchable"), default=None)
    bench.add_argument("--budget", type=int, default=None, help="Episode failed-attempt budget")
    bench.add_argument("--noise", choices=("on", "off"), default=None)
    bench.add_argument("--false-negatives", type=int, default=None)
    bench.add_argument("--regression-dir", default=None)
    bench.add_argument("--out", default=None)
    bench.add_argument("--format", choices=("csv", "json", "markdown", "xlsx"), default=None)
    bench.add_argument("--trace", nargs="?", const="", default=None)
    bench.add_argument("--progress", action="store_true")
    bench.add_argument("--save", action="store_true", help="Store the metrics table in the database")
    bench.add_argument("--async", dest="run_async", action="store_true", help="Dispatch to a Celery worker")

    generate = subparsers.add_parser("generate", help="Write benchmark scenarios to a directory")
    generate.add_argument("--out", required=True)
    generate.add_argument("--experiment", choices=("baselines", "adaptability"), default="baselines")
    generate.add_argument("--cases", type=int, default=10)
    generate.add_argument("--seed", type=int, default=0)


# ── Helpers ───────────────────────────────────────────────────────────────────

@contextmanager
def translate_errors():
    """Turns planner and I/O failures into ``CommandError`` with the matching exit code."""
    try:
        yield
    except CommandError:
        raise
    except SearchError as exc:
        raise CommandError(f"internal error: {exc}", returncode=EXIT_INTERNAL) from exc
    except (PlannerError, ValidationError, json.JSONDecodeError) as exc:
        raise CommandError(str(exc), returncode=EXIT_USAGE) from exc
    except OSError as exc:
        raise CommandError(str(exc), returncode=EXIT_IO) from exc


def configure_verbosity(verbosity: int):
    if verbosity == 0:
        logging.getLogger("planner").setLevel(logging.WARNING)
    elif verbosity >= 2:
        logging.getLogger("planner").setLevel(logging.DEBUG)


def score_params() -> ScoreParams:
    return ScoreParams(
        lambda1=settings.PLANNER_SCORE_LAMBDA1,
        lambda2=settings.PLANNER_SCORE_LAMBDA2,
        t=settings.PLANNER_MATERIAL_THRESHOLD,
    )


def _problem_paths(options) -> tuple[Path, Path]:
    if options["task"]:
        if options["domain"] or options["problem"]:
            raise CommandError("--task excludes --domain and --problem", returncode=EXIT_USAGE)
        domain, problem = task_assets(options["task"])
        if not domain.exists() or not problem.exists():
            raise CommandError(f"no bundled task named '{options['task']}'", returncode=EXIT_USAGE)
        return domain, problem
    if not options["domain"] or not options["problem"]:
        raise CommandError("either --task or both --domain and --problem are required", returncode=EXIT_USAGE)
    return resolve_path(options["domain"]), resolve_path(options["problem"])


def load_problem(options):
    domain_path, problem_path = _problem_paths(options)
    max_actions = options.get("max_ground_actions") or settings.PLANNER_MAX_GROUND_ACTIONS
    return load_ground_problem(domain_path, problem_path, tuple(load_tool_registry()), max_actions)


def load_scenario_option(options):
    if not options.get("scenario"):
        return None
    return load_scenario(resolve_path(options["scenario"]))


def search_config(options):
    weight = options["weight"] if options["weight"] is not None else settings.PLANNER_SEARCH_WEIGHT
    return SearchConfig(
        algorithm=options["algorithm"],
        heuristic=options["heuristic"],
        use_feature_score=options["features"] == "on",
        weight=weight,
        node_budget=options["node_budget"],
    )


def trace_path(value: Optional[str], name: str) -> Optional[Path]:
    """``--trace`` without a value writes to the configured trace directory."""
    if value is None:
        return None
    if value == "":
        return Path(settings.PLANNER_TRACE_DIR) / f"{name}.jsonl"
    return Path(value)


# ── Subcommands ───────────────────────────────────────────────────────────────

def cmd_validate(options, stdout, stderr):
    gp = load_problem(options)
    stdout.write(
        f"domain {gp.domain.name}: {len(gp.domain.action_schemas)} schemas, {len(gp.domain.predicates)} predicates"
    )
    stdout.write(
        f"problem {gp.problem.name}: {len(gp.problem.objects)} objects, {len(gp.atoms)} atoms, "
        f"{len(gp.actions)} ground actions ({len(gp.tool_actions)} tool actions, {gp.pruned} pruned)"
    )
    scenario = load_scenario_option(options)
    if scenario is not None:
        FeatureScorer(scenario.registry(), scenario.profiles()).check_alignment(gp)
        stdout.write(f"scenario {scenario.scenario_id}: {scenario.n} objects, ground truth {scenario.truth.tool}")


def cmd_plan(options, stdout, stderr):
    gp = load_problem(options)
    cfg = search_config(options)
    scenario = load_scenario_option(options)
    scorer = None
    if cfg.use_feature_score:
        if scenario is None:
            raise CommandError("--features on needs --scenario", returncode=EXIT_USAGE)
        params = score_params()
        profiles = sense(scenario, options["noise"] == "on", options["seed"], params.t)
        scorer = FeatureScorer(scenario.registry(), profiles, params)
        scorer.check_alignment(gp)
    result = feature_guided_search(gp, cfg, scorer, switchable=options["trust"] == "switchable")
    stderr.write(
        f"{result.status.value}: {result.nodes_expanded} nodes expanded, "
        f"{result.nodes_generated} generated, trust {'on' if result.trust_used else 'off'}"
    )
    if not result.solved:
        raise CommandError("no plan found", returncode=EXIT_DOMAIN)
    for line in result.plan_lines():
        stdout.write(line)


def cmd_episode(options, stdout, stderr):
    gp = load_problem(options)
    cfg = search_config(options)
    scenario = load_scenario_option(options)
    path = trace_path(options["trace"], scenario.scenario_id)
    trace = TraceWriter(path) if path else None
    try:
        result = run_episode(
            gp,
            cfg,
            scenario,
            budget=options["budget"],
            trust_policy=options["trust"],
            noise_on=options["noise"] == "on",
            seed=options["seed"],
            params=score_params(),
            trace=trace,
        )
    finally:
        if trace:
            trace.close()
    summary = {
        "scenario_id": scenario.scenario_id,
        "config": cfg.display_label,
        "status": result.status.value,
        "success": result.success,
        "failed_attempts": result.failed_attempts,
        "nodes_total": result.nodes_total,
        "searches": result.searches,
        "plan_length": result.plan_length,
        "attempts": [[action, *o_a] for o_a, action in result.attempts],
        "trust_switched": False in result.trust_trace,
        "plan": [a.name for a in result.accepted_plan or ()],
    }
    stdout.write(json.dumps(summary, indent=2, sort_keys=True))
    if not result.success:
        raise CommandError(f"episode ended {result.status.value}", returncode=EXIT_DOMAIN)


def experiment_config(options):
    data = {}
    if options["config"]:
        data = json.loads(resolve_path(options["config"]).read_text(encoding="utf-8"))
    overrides = {
        "experiment": options["experiment"],
        "seed": options["seed"],
        "cases_per_tool": options["cases"],
        "task_types": options["tasks"],
        "tools": options["tools"],
        "trust_policy": options["trust"],
        "episode_budget": options["budget"],
        "noise_on": None if options["noise"] is None else options["noise"] == "on",
        "false_negatives": options["false_negatives"],
        "regression_dir": options["regression_dir"],
    }
    data.update({key: value for key, value in overrides.items() if value is not None})
    data.setdefault("max_ground_actions", settings.PLANNER_MAX_GROUND_ACTIONS)
    data.setdefault("score", score_params().model_dump())
    return ExperimentConfig.model_validate(data)


def cmd_bench(options, stdout, stderr):
    cfg = experiment_config(options)
    fmt = options["format"]
    if fmt is None:
        suffix = Path(options["out"]).suffix.lstrip(".") if options["out"] else ""
        fmt = {"md": "markdown"}.get(suffix, suffix) if suffix in ("csv", "json", "md", "markdown", "xlsx") else "csv"
    if fmt == "xlsx" and not options["out"]:
        raise CommandError("xlsx reports need --out", returncode=EXIT_USAGE)

    if options["run_async"]:
        from planner.tasks import run_experiment_task

        async_result = run_experiment_task.delay(cfg.model_dump(mode="json"))
        stdout.write(str(async_result.id))
        return

    path = trace_path(options["trace"], f"{cfg.experiment}-{cfg.seed}")
    trace = TraceWriter(path) if path else None
    try:
        table = run_experiment(cfg, progress=options["progress"], trace=trace)
    finally:
        if trace:
            trace.close()

    if options["out"]:
        for written in emit_report(table, fmt, options["out"]):
            stderr.write(f"wrote {written}")
    else:
        stdout.write(render(table, fmt), ending="")

    if options["save"]:
        from planner.models import ExperimentRun

        run = ExperimentRun.objects.record(table, config=cfg.model_dump(mode="json"), seed=cfg.seed)
        stderr.write(f"saved as experiment run {run.pk}")


def cmd_generate(options, stdout, stderr):
    directory = Path(options["out"])
    if options["experiment"] == "adaptability":
        registry = load_tool_registry()
        library = load_library()
        written = []
        for task in TASK_TOOLS:
            for scenario in generate_adaptability(task, options["cases"], options["seed"], library, registry):
                path = directory / f"{scenario.scenario_id}.json"
                dump_scenario(scenario, path)
                written.append(path)
    else:
        written = write_regression_set(directory, options["cases"], options["seed"])
    for path in written:
        stdout.write(str(path))
    stderr.write(f"{len(written)} scenarios written to {directory}")


HANDLERS = {
    "validate": cmd_validate,
    "plan": cmd_plan,
    "episode": cmd_episode,
    "bench": cmd_bench,
    "generate": cmd_generate,
}


def dispatch(options, stdout, stderr):
    configure_verbosity(options.get("verbosity", 1))
    with translate_errors():
        HANDLERS[options["subcommand"]](options, stdout, stderr)


def main(argv: Optional[list[str]] = None, stdout=None, stderr=None) -> int:
    """Runs ``manage.py planner`` with ``argv`` and returns the exit code instead of exiting."""
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "src.settings")
    if not apps.ready:
        django.setup()

    from planner.management.commands.planner import Command

    argv = list(sys.argv[1:] if argv is None else argv)
    command = Command(stdout=stdout, stderr=stderr)
    try:
        command.run_from_argv(["manage.py", "planner", *argv])
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
