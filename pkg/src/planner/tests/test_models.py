import io
import json

from django.core.management import call_command
from django.test import TestCase

from planner.bench import AdaptabilityRow, BudgetRow, MetricRow, MetricsTable
from planner.models import BudgetRecord, ExperimentRun
from planner.tasks import run_experiment_task


def sample_table() -> MetricsTable:
    return MetricsTable(
        experiment="baselines",
        rows=[
            MetricRow("cleaning", "squeegee", "FS+H", 42.5, 0.25, 4, 4, 6.0),
            MetricRow("cleaning", "squeegee", "UCS", 300.0, None, 0, 4, None),
        ],
        budget_rows=[BudgetRow("FS+H", 0, 3, 4), BudgetRow("FS+H", 1, 4, 4)],
        adaptability_rows=[AdaptabilityRow("cleaning", "FS+H", 3, 2, 4)],
    )


class ExperimentRunTestCase(TestCase):
    def test_record_and_read_back(self):
        table = sample_table()
        run = ExperimentRun.objects.record(table, config={"seed": 3}, seed=3)

        self.assertEqual(run.metrics.count(), 2)
        self.assertEqual(run.budgets.count(), 2)
        self.assertEqual(run.adaptability.count(), 1)
        self.assertEqual(ExperimentRun.objects.get(pk=run.pk).to_table(), table)
        self.assertEqual(str(run), f"baselines #{run.pk} (seed 3)")

    def test_budget_success_rate(self):
        run = ExperimentRun.objects.record(sample_table())
        rates = [b.success_rate for b in BudgetRecord.objects.filter(run=run).order_by("budget")]
        self.assertEqual(rates, [0.75, 1.0])


class ExperimentTaskTestCase(TestCase):
    config = {
        "task_types": ["cleaning"],
        "tools": ["squeegee"],
        "cases_per_tool": 1,
        "budgets": [0],
        "configs": [{"algorithm": "astar", "heuristic": "landmarks", "label": "FS+H"}],
    }

    def test_task_stores_the_run(self):
        pk = run_experiment_task(self.config)

        run = ExperimentRun.objects.get(pk=pk)
        self.assertEqual(run.config["cases_per_tool"], 1)
        row = run.metrics.get()
        self.assertEqual((row.tool, row.config, row.success, row.cases), ("squeegee", "FS+H", 1, 1))

    def test_bench_save(self):
        stdout, stderr = io.StringIO(), io.StringIO()
        call_command(
            "planner", "bench", "--tasks", "cleaning", "--tools", "squeegee", "--cases", "1",
            "--experiment", "algorithms", "--format", "json", "--save",
            stdout=stdout, stderr=stderr,
        )

        run = ExperimentRun.objects.get()
        self.assertEqual(run.experiment, "algorithms")
        metrics = json.loads(stdout.getvalue())["metrics"]
        self.assertEqual([row["config"] for row in metrics], [r.config for r in run.metrics.order_by("id")])
        self.assertEqual(run.metrics.count(), 3)
        self.assertIn(f"saved as experiment run {run.pk}", stderr.getvalue())
