"""
Experiment runner: baseline comparison, alternative search algorithms and
tool-choice adaptability over generated (or regression) scenarios.
"""
from __future__ import annotations

import logging
import random
import sys
from dataclasses import dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator
from tqdm import tqdm

from planner.episodes import EpisodeResult, TraceWriter, TrustPolicy, run_adaptability_episode, run_episode
from planner.grounding import DEFAULT_MAX_GROUND_ACTIONS, GroundProblem, load_ground_problem
from planner.perception import (
    dump_scenario,
    generate_adaptability,
    generate_benchmark,
    inject_false_negatives,
    load_library,
    load_scenario,
    load_tool_registry,
)
from planner.schemas import NoiseSpec, ScenarioFile, ScoreParams
from planner.search import Algorithm, SearchConfig
from planner.utils import TASK_TOOLS, resolve_path, task_assets


logger = logging.getLogger(__name__)

ExperimentKind = Literal["baselines", "algorithms", "adaptability"]

DEFAULT_CONFIGS: dict[str, list[SearchConfig]] = {
    "baselines": [
        SearchConfig(algorithm=Algorithm.ASTAR, heuristic="landmarks", use_feature_score=True, label="FS+H"),
        SearchConfig(algorithm=Algorithm.ASTAR, heuristic="landmarks", use_feature_score=False, label="H"),
        SearchConfig(algorithm=Algorithm.UCS, heuristic="zero", use_feature_score=True, label="FS"),
        SearchConfig(algorithm=Algorithm.UCS, heuristic="zero", use_feature_score=False, label="UCS"),
    ],
    "algorithms": [
        SearchConfig(algorithm=Algorithm.ASTAR, heuristic="landmarks", use_feature_score=True, label="A*+LM"),
        SearchConfig(algorithm=Algorithm.WEIGHTED_ASTAR, heuristic="ff", weight=5.0, use_feature_score=True, label="wA*+FF"),
        SearchConfig(algorithm=Algorithm.EHC, heuristic="ff", use_feature_score=True, label="eHC+FF"),
    ],
    "adaptability": [
        SearchConfig(algorithm=Algorithm.ASTAR, heuristic="landmarks", use_feature_score=True, label="FS+H"),
    ],
}


class ExperimentConfig(BaseModel):
    experiment: ExperimentKind = "baselines"
    task_types: list[str] = Field(default_factory=lambda: list(TASK_TOOLS))
    tools: list[str] = Field(default_factory=list)
    cases_per_tool: int = Field(10, ge=1)
    configs: list[SearchConfig] = Field(default_factory=list)
    trust_policy: TrustPolicy = TrustPolicy.SWITCHABLE
    budgets: list[int] = Field(default_factory=lambda: list(range(90)))
    episode_budget: Optional[int] = Field(None, ge=0)
    seed: int = 0
    noise_on: bool = False
    noise: Optional[NoiseSpec] = None
    false_negatives: int = Field(0, ge=0)
    regression_dir: Optional[str] = None
    score: ScoreParams = Field(default_factory=ScoreParams)
    max_ground_actions: Optional[int] = DEFAULT_MAX_GROUND_ACTIONS

    @model_validator(mode="before")
    @classmethod
    def trust_alias(cls, data):
        if isinstance(data, dict) and data.get("trust_policy") == "fixed_true":
            data = {**data, "trust_policy": TrustPolicy.FIXED}
        return data

    @model_validator(mode="after")
    def fill_defaults(self) -> "ExperimentConfig":
        if not self.configs:
            self.configs = list(DEFAULT_CONFIGS[self.experiment])
        for task in self.task_types:
            if task not in TASK_TOOLS:
                raise ValueError(f"unknown task type '{task}'")
        known = {tool for task in self.task_types for tool in TASK_TOOLS[task]}
        unknown = set(self.tools) - known
        if unknown:
            raise ValueError(f"tools {sorted(unknown)} are not used by {self.task_types}")
        labels = [c.display_label for c in self.configs]
        if len(labels) != len(set(labels)):
            raise ValueError("config labels must be unique")
        return self

    def selected_tools(self, task: str) -> list[str]:
        return [tool for tool in TASK_TOOLS[task] if not self.tools or tool in self.tools]


@dataclass
class MetricRow:
    task: str
    tool: str
    config: str
    nodes_mean: float
    failed_attempts_mean: Optional[float]
    success: int
    cases: int
    plan_length_mean: Optional[float]


@dataclass
class BudgetRow:
    config: str
    budget: int
    successes: int
    cases: int

    @property
    def success_rate(self) -> float:
        return self.successes / self.cases if self.cases else 0.0


@dataclass
class AdaptabilityRow:
    task: str
    config: str
    correct: int
    random_correct: int
    cases: int


@dataclass
class MetricsTable:
    experiment: str = "baselines"
    rows: list[MetricRow] = field(default_factory=list)
    budget_rows: list[BudgetRow] = field(default_factory=list)
    adaptability_rows: list[AdaptabilityRow] = field(default_factory=list)

    def row(self, tool: str, config: str) -> Optional[MetricRow]:
        return next((r for r in self.rows if r.tool == tool and r.config == config), None)

    def overall(self, config: str) -> dict[str, Optional[float]]:
        """Means over every row of a config, weighted by cases."""
        rows = [r for r in self.rows if r.config == config]
        cases = sum(r.cases for r in rows)
        successes = sum(r.success for r in rows)
        if not cases:
            return {"nodes_mean": None, "failed_attempts_mean": None, "success": 0, "cases": 0}
        failed = [r.failed_attempts_mean * r.success for r in rows if r.failed_attempts_mean is not None]
        return {
            "nodes_mean": sum(r.nodes_mean * r.cases for r in rows) / cases,
            "failed_attempts_mean": sum(failed) / successes if successes else None,
            "success": successes,
            "cases": cases,
        }


def summarize(task: str, tool: str, config: str, episodes: list[EpisodeResult]) -> MetricRow:
    """
    Nodes are expanded nodes per search, averaged over episodes. Failed
    attempts and plan length are averaged over successful episodes only.
    """
    solved = [e for e in episodes if e.success]
    return MetricRow(
        task=task,
        tool=tool,
        config=config,
        nodes_mean=fmean(e.nodes_per_search for e in episodes) if episodes else 0.0,
        failed_attempts_mean=fmean(e.failed_attempts for e in solved) if solved else None,
        success=len(solved),
        cases=len(episodes),
        plan_length_mean=fmean(e.plan_length for e in solved) if solved else None,
    )


def budget_curve(config: str, episodes: list[EpisodeResult], budgets: list[int]) -> list[BudgetRow]:
    """
    Successes an attempt budget would have allowed, read off unbudgeted
    episodes: a budget of b attempts admits at most b - 1 failures.
    """
    return [
        BudgetRow(
            config=config,
            budget=b,
            successes=sum(1 for e in episodes if e.success and e.failed_attempts < b),
            cases=len(episodes),
        )
        for b in sorted(set(budgets))
    ]


class ExperimentRunner:
    def __init__(self, cfg: ExperimentConfig, progress: bool = True, trace: Optional[TraceWriter] = None):
        self.cfg = cfg
        self.progress = progress
        self.trace = trace
        self.registry = load_tool_registry()
        self.tool_actions = tuple(self.registry)
        self._problems: dict[str, GroundProblem] = {}

    def problem(self, name: str) -> GroundProblem:
        if name not in self._problems:
            domain_path, problem_path = task_assets(name)
            if not domain_path.exists() or not problem_path.exists():
                raise FileNotFoundError(f"missing domain assets for '{name}' ({domain_path}, {problem_path})")
            self._problems[name] = load_ground_problem(
                domain_path, problem_path, self.tool_actions, self.cfg.max_ground_actions
            )
        return self._problems[name]

    def _with_noise(self, scenarios: list[ScenarioFile]) -> list[ScenarioFile]:
        if self.cfg.noise is None:
            return scenarios
        return [
            s.model_copy(update={"noise": self.cfg.noise.model_copy(update={"seed": s.noise.seed})})
            for s in scenarios
        ]

    def benchmark_cases(self) -> list[tuple[str, str, ScenarioFile]]:
        cases = []
        library = None
        for task in self.cfg.task_types:
            for tool in self.cfg.selected_tools(task):
                if self.cfg.regression_dir:
                    directory = resolve_path(self.cfg.regression_dir)
                    files = sorted(directory.glob(f"{task}_{tool}_*.json"))
                    if not files:
                        raise FileNotFoundError(f"no regression scenarios for {task}/{tool} in {directory}")
                    scenarios = [load_scenario(path) for path in files[: self.cfg.cases_per_tool]]
                else:
                    library = library or load_library()
                    scenarios = generate_benchmark(
                        task, tool, self.cfg.cases_per_tool, self.cfg.seed, library, self.registry
                    )
                cases.extend((task, tool, s) for s in scenarios)
        scenarios = self._with_noise([s for _, _, s in cases])
        if self.cfg.false_negatives:
            scenarios = inject_false_negatives(scenarios, self.cfg.false_negatives, self.cfg.seed)
        return [(task, tool, s) for (task, tool, _), s in zip(cases, scenarios)]

    @property
    def noise_on(self) -> bool:
        return self.cfg.noise_on or self.cfg.noise is not None or self.cfg.false_negatives > 0

    def _bar(self, total: int, desc: str) -> tqdm:
        return tqdm(total=total, desc=desc, file=sys.stderr, disable=not self.progress, leave=False)

    def run(self) -> MetricsTable:
        if self.cfg.experiment == "adaptability":
            return self.run_adaptability()
        cases = self.benchmark_cases()
        table = MetricsTable(experiment=self.cfg.experiment)
        by_config: dict[str, list[EpisodeResult]] = {c.display_label: [] for c in self.cfg.configs}
        groups: dict[tuple[str, str, str], list[EpisodeResult]] = {}

        with self._bar(len(cases) * len(self.cfg.configs), self.cfg.experiment) as bar:
            for config in self.cfg.configs:
                label = config.display_label
                for task, tool, scenario in cases:
                    episode = run_episode(
                        self.problem(tool),
                        config,
                        scenario,
                        budget=self.cfg.episode_budget,
                        trust_policy=self.cfg.trust_policy,
                        noise_on=self.noise_on,
                        params=self.cfg.score,
                        trace=self.trace,
                    )
                    groups.setdefault((task, tool, label), []).append(episode)
                    by_config[label].append(episode)
                    bar.update()

        for task in self.cfg.task_types:
            for tool in self.cfg.selected_tools(task):
                for config in self.cfg.configs:
                    label = config.display_label
                    table.rows.append(summarize(task, tool, label, groups.get((task, tool, label), [])))
        for config in self.cfg.configs:
            label = config.display_label
            table.budget_rows.extend(budget_curve(label, by_config[label], self.cfg.budgets))
        return table

    def run_adaptability(self) -> MetricsTable:
        table = MetricsTable(experiment="adaptability")
        library = load_library()
        plan = []
        for task in self.cfg.task_types:
            scenarios = generate_adaptability(task, self.cfg.cases_per_tool, self.cfg.seed, library, self.registry)
            plan.append((task, self._with_noise(scenarios)))
        if self.cfg.false_negatives:
            corrupted = iter(inject_false_negatives(
                [s for _, scenarios in plan for s in scenarios], self.cfg.false_negatives, self.cfg.seed
            ))
            plan = [(task, [next(corrupted) for _ in scenarios]) for task, scenarios in plan]

        total = sum(len(s) for _, s in plan) * len(self.cfg.configs)
        with self._bar(total, "adaptability") as bar:
            for task, scenarios in plan:
                chooser = random.Random(f"random-choice:{self.cfg.seed}:{task}")
                random_correct = sum(
                    chooser.choice(TASK_TOOLS[task]) == s.truth.tool for s in scenarios
                )
                for config in self.cfg.configs:
                    outcomes = []
                    for scenario in scenarios:
                        outcomes.append(run_adaptability_episode(
                            self.problem(task),
                            config,
                            scenario,
                            budget=self.cfg.episode_budget,
                            trust_policy=self.cfg.trust_policy,
                            noise_on=self.noise_on,
                            params=self.cfg.score,
                            trace=self.trace,
                        ))
                        bar.update()
                    table.rows.append(summarize(task, "both", config.display_label, [o.episode for o in outcomes]))
                    table.adaptability_rows.append(AdaptabilityRow(
                        task=task,
                        config=config.display_label,
                        correct=sum(o.correct for o in outcomes),
                        random_correct=random_correct,
                        cases=len(outcomes),
                    ))
        return table


def run_experiment(
    cfg: ExperimentConfig,
    progress: bool = False,
    trace: Optional[TraceWriter] = None,
) -> MetricsTable:
    logger.info(
        "Running %s experiment: %d configs, %d cases per tool, seed %d",
        cfg.experiment, len(cfg.configs), cfg.cases_per_tool, cfg.seed,
    )
    return ExperimentRunner(cfg, progress=progress, trace=trace).run()


def write_regression_set(directory: str | Path, cases: int = 10, seed: int = 0) -> list[Path]:
    """Generate and store the fixed benchmark scenarios (every tool of every task type)."""
    directory = Path(directory)
    registry = load_tool_registry()
    library = load_library()
    written = []
    for task, tools in TASK_TOOLS.items():
        for tool in tools:
            for scenario in generate_benchmark(task, tool, cases, seed, library, registry):
                path = directory / f"{scenario.scenario_id}.json"
                dump_scenario(scenario, path)
                written.append(path)
    return written
