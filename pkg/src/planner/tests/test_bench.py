import io
import json
from pathlib import Path
from tempfile import TemporaryDirectory

from django.test import SimpleTestCase
from pydantic import ValidationError

from planner.bench import (
    DEFAULT_CONFIGS,
    ExperimentConfig,
    ExperimentRunner,
    MetricsTable,
    budget_curve,
    run_experiment,
    summarize,
    write_regression_set,
)
from planner.episodes import EpisodeResult, EpisodeStatus, TraceWriter, TrustPolicy, run_episode
from planner.search import SearchConfig
from planner.tests.helpers import bundled_problem


FS_H = SearchConfig(algorithm="astar", heuristic="landmarks", label="FS+H")


def episode(success, failed=0, nodes=10, length=6, searches=1):
    return EpisodeResult(
        searches=searches,
        success=success,
        status=EpisodeStatus.ACCEPTED if success else EpisodeStatus.EXHAUSTED,
        failed_attempts=failed,
        nodes_total=nodes,
        plan_length=length if success else None,
    )


def small_config(**kwargs) -> ExperimentConfig:
    options = {
        "task_types": ["cleaning"],
        "tools": ["squeegee"],
        "cases_per_tool": 2,
        "configs": [FS_H],
        "budgets": [0, 1, 5],
    }
    options.update(kwargs)
    return ExperimentConfig(**options)


class ExperimentConfigTestCase(SimpleTestCase):
    def test_default_configs(self):
        cfg = ExperimentConfig()

        self.assertEqual([c.display_label for c in cfg.configs], ["FS+H", "H", "FS", "UCS"])
        self.assertEqual(cfg.task_types, ["woodworking", "cooking", "cleaning"])
        self.assertEqual(cfg.budgets, list(range(90)))
        self.assertEqual(cfg.selected_tools("cooking"), ["spatula", "ladle"])

    def test_algorithm_comparison_configs(self):
        cfg = ExperimentConfig(experiment="algorithms")
        self.assertEqual(cfg.configs, DEFAULT_CONFIGS["algorithms"])

    def test_tool_filter(self):
        cfg = ExperimentConfig(task_types=["woodworking"], tools=["hammer"])
        self.assertEqual(cfg.selected_tools("woodworking"), ["hammer"])

    def test_trust_alias(self):
        self.assertEqual(ExperimentConfig(trust_policy="fixed_true").trust_policy, TrustPolicy.FIXED)

    def test_invalid_values(self):
        for kwargs in (
            {"task_types": ["gardening"]},
            {"task_types": ["cooking"], "tools": ["hammer"]},
            {"configs": [FS_H, FS_H]},
            {"cases_per_tool": 0},
            {"experiment": "ablation"},
        ):
            with self.subTest(kwargs=kwargs), self.assertRaises(ValidationError):
                ExperimentConfig(**kwargs)


class AggregationTestCase(SimpleTestCase):
    def test_summarize_averages_failures_over_successes(self):
        row = summarize("cleaning", "squeegee", "FS+H", [
            episode(True, failed=0, nodes=10),
            episode(True, failed=4, nodes=30, length=8),
            episode(False, failed=9, nodes=50),
        ])

        self.assertEqual(row.success, 2)
        self.assertEqual(row.cases, 3)
        self.assertAlmostEqual(row.nodes_mean, 30.0)
        self.assertAlmostEqual(row.failed_attempts_mean, 2.0)
        self.assertAlmostEqual(row.plan_length_mean, 7.0)

    def test_nodes_are_counted_per_search(self):
        row = summarize("cleaning", "squeegee", "H", [
            episode(True, failed=3, nodes=400, searches=4),
            episode(True, failed=0, nodes=20, searches=1),
        ])
        self.assertAlmostEqual(row.nodes_mean, 60.0)

    def test_summarize_without_successes(self):
        row = summarize("cleaning", "squeegee", "H", [episode(False)])

        self.assertEqual(row.success, 0)
        self.assertIsNone(row.failed_attempts_mean)
        self.assertIsNone(row.plan_length_mean)

    def test_budget_curve_is_monotone(self):
        episodes = [episode(True, failed=f) for f in (0, 0, 3, 7)] + [episode(False)]
        rows = budget_curve("FS+H", episodes, [5, 0, 3, 10, 3])

        self.assertEqual([r.budget for r in rows], [0, 3, 5, 10])
        self.assertEqual([r.successes for r in rows], [0, 2, 3, 4])
        self.assertAlmostEqual(rows[-1].success_rate, 0.8)

    def test_overall(self):
        table = MetricsTable(rows=[
            summarize("cleaning", "squeegee", "FS+H", [episode(True, failed=2, nodes=10)]),
            summarize("cleaning", "rake", "FS+H", [episode(True, failed=0, nodes=20), episode(False, nodes=30)]),
        ])

        overall = table.overall("FS+H")
        self.assertEqual((overall["success"], overall["cases"]), (2, 3))
        self.assertAlmostEqual(overall["nodes_mean"], 20.0)
        self.assertAlmostEqual(overall["failed_attempts_mean"], 1.0)
        self.assertEqual(table.overall("UCS")["cases"], 0)
        self.assertIsNone(table.row("hammer", "FS+H"))


class ExperimentRunTestCase(SimpleTestCase):
    def test_small_baseline_run(self):
        table = run_experiment(small_config())

        self.assertEqual(len(table.rows), 1)
        row = table.rows[0]
        self.assertEqual((row.task, row.tool, row.config), ("cleaning", "squeegee", "FS+H"))
        self.assertEqual(row.cases, 2)
        self.assertEqual(row.success, 2)
        self.assertEqual([r.budget for r in table.budget_rows], [0, 1, 5])
        successes = [r.successes for r in table.budget_rows]
        self.assertEqual(successes, sorted(successes))
        self.assertEqual(successes[-1], 2)

    def test_budget_curve_matches_budgeted_runs(self):
        blind = SearchConfig(algorithm="astar", heuristic="landmarks", use_feature_score=False, label="H")
        runner = ExperimentRunner(small_config(configs=[blind]), progress=False)
        scenarios = [s for _, _, s in runner.benchmark_cases()]
        gp = bundled_problem("squeegee")

        free = [run_episode(gp, blind, s) for s in scenarios]
        failures = [e.failed_attempts for e in free]
        budgets = sorted({0, 1, *failures, *(f + 1 for f in failures)})
        for row in budget_curve("H", free, budgets):
            with self.subTest(budget=row.budget):
                budgeted = [run_episode(gp, blind, s, budget=row.budget) for s in scenarios]
                self.assertEqual(row.successes, sum(e.success for e in budgeted))

    def test_runs_are_deterministic(self):
        cfg = small_config(configs=[FS_H, SearchConfig(algorithm="ucs", use_feature_score=False)])
        self.assertEqual(run_experiment(cfg), run_experiment(cfg))

    def test_false_negatives_turn_noise_on(self):
        cfg = small_config(false_negatives=1)
        runner = ExperimentRunner(cfg, progress=False)

        self.assertTrue(runner.noise_on)
        ids = [s.scenario_id for _, _, s in runner.benchmark_cases() if s.noise.material_fn_rate == 1.0]
        self.assertEqual(len(ids), 1)
        self.assertEqual(runner.run().rows[0].success, 2)

    def test_fixed_trust_fails_on_false_negatives(self):
        cfg = small_config(false_negatives=2, trust_policy="fixed")
        self.assertEqual(run_experiment(cfg).rows[0].success, 0)

    def test_regression_set(self):
        with TemporaryDirectory() as tmp:
            written = write_regression_set(tmp, cases=1, seed=0)

            self.assertEqual(len(written), 6)
            self.assertTrue(all(path.exists() for path in written))
            self.assertIn(Path(tmp) / "cleaning_squeegee_00.json", written)

            table = run_experiment(small_config(regression_dir=tmp, cases_per_tool=5))
            self.assertEqual(table.rows[0].cases, 1)

    def test_missing_regression_scenarios(self):
        with TemporaryDirectory() as tmp, self.assertRaises(FileNotFoundError):
            run_experiment(small_config(regression_dir=tmp))

    def test_adaptability_run(self):
        table = run_experiment(ExperimentConfig(experiment="adaptability", task_types=["cleaning"], cases_per_tool=2))

        self.assertEqual(table.experiment, "adaptability")
        self.assertEqual(len(table.adaptability_rows), 1)
        row = table.adaptability_rows[0]
        self.assertEqual((row.task, row.config, row.cases), ("cleaning", "FS+H", 2))
        self.assertLessEqual(row.correct, row.cases)
        self.assertLessEqual(row.random_correct, row.cases)
        self.assertEqual(table.rows[0].tool, "both")

    def test_trace(self):
        stream = io.StringIO()
        run_experiment(small_config(), trace=TraceWriter(stream))

        episodes = [r for r in map(json.loads, stream.getvalue().splitlines()) if r["kind"] == "episode"]
        self.assertEqual(len(episodes), 2)
        self.assertEqual({r["config"] for r in episodes}, {"FS+H"})
