"""
Plan, construct, replan.

An episode plans with trusted sensors, "executes" the plan against the
scenario's ground truth and replans with the attempted combination excluded
until the oracle accepts or search runs dry. Spending the failed-attempt
budget, or a search running out of its node budget, ends the episode with
the budget status. When trusted planning runs dry after some combinations were rejected
by the hard constraints, planning continues without trust, restricted to
those rejected combinations.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import IO, Literal, Optional, Union

from pydantic import BaseModel

from planner.exceptions import ConfigurationError
from planner.features import FeatureScorer, RejectSet
from planner.grounding import GroundAction, GroundProblem
from planner.heuristics import make_heuristic
from planner.perception import sense
from planner.schemas import ScenarioFile, ScoreParams
from planner.search import Combination, SearchConfig, SearchStatus, run_search


logger = logging.getLogger(__name__)


class TrustPolicy(str, Enum):
    FIXED = "fixed"
    SWITCHABLE = "switchable"

    @classmethod
    def parse(cls, value: Union[str, "TrustPolicy"]) -> "TrustPolicy":
        if value == "fixed_true":
            return cls.FIXED
        return cls(value)


class EpisodeStatus(str, Enum):
    ACCEPTED = "accepted"
    EXHAUSTED = "exhausted"
    BUDGET = "budget"


# ── Trace ─────────────────────────────────────────────────────────────────────

class SearchRecord(BaseModel):
    kind: Literal["search"] = "search"
    scenario_id: str
    config: str
    search: int
    trust: bool
    status: str
    nodes_expanded: int
    nodes_generated: int
    plan_length: Optional[int] = None
    rejected: int = 0


class AttemptRecord(BaseModel):
    kind: Literal["attempt"] = "attempt"
    scenario_id: str
    config: str
    attempt: int
    action: str
    objects: list[str]
    trust: bool
    accepted: bool


class TrustSwitchRecord(BaseModel):
    kind: Literal["trust_switch"] = "trust_switch"
    scenario_id: str
    config: str
    whitelist: list[list[str]]


class EpisodeRecord(BaseModel):
    kind: Literal["episode"] = "episode"
    scenario_id: str
    config: str
    status: str
    success: bool
    failed_attempts: int
    nodes_total: int
    plan_length: Optional[int] = None


class TraceWriter:
    """Appends one JSON object per line."""

    def __init__(self, target: Union[str, Path, IO[str]]):
        if isinstance(target, (str, Path)):
            Path(target).parent.mkdir(parents=True, exist_ok=True)
            self._stream = open(target, "a", encoding="utf-8")
            self._owned = True
        else:
            self._stream = target
            self._owned = False

    def write(self, record: BaseModel):
        self._stream.write(record.model_dump_json() + "\n")

    def close(self):
        if self._owned:
            self._stream.close()

    def __enter__(self) -> "TraceWriter":
        return self

    def __exit__(self, *exc):
        self.close()


# ── Episode ───────────────────────────────────────────────────────────────────

class ExecutionOracle:
    """Accepts a plan iff its join builds the ground-truth tool from the ground-truth ordered pair."""

    def __init__(self, scenario: ScenarioFile):
        self.truth = scenario.truth
        self.join_action = scenario.truth_spec.join_action_name

    def accepts(self, plan: tuple[GroundAction, ...]) -> bool:
        return all(
            action.schema_name == self.join_action and action.o_a == self.truth.pair
            for action in plan
            if action.o_a
        )


@dataclass
class EpisodeResult:
    success: bool
    status: EpisodeStatus
    failed_attempts: int = 0
    nodes_total: int = 0
    plans: list[tuple[GroundAction, ...]] = field(default_factory=list)
    attempts: list[Combination] = field(default_factory=list)
    trust_trace: list[bool] = field(default_factory=list)
    reject_final: frozenset[Combination] = frozenset()
    whitelist: frozenset[Combination] = frozenset()
    plan_length: Optional[int] = None
    searches: int = 0

    @property
    def accepted_plan(self) -> Optional[tuple[GroundAction, ...]]:
        return self.plans[-1] if self.success and self.plans else None

    @property
    def rescued(self) -> bool:
        return self.success and False in self.trust_trace

    @property
    def nodes_per_search(self) -> float:
        return self.nodes_total / self.searches if self.searches else 0.0


def run_episode(
    gp: GroundProblem,
    cfg: SearchConfig,
    scenario: ScenarioFile,
    budget: Optional[int] = None,
    trust_policy: TrustPolicy | str = TrustPolicy.SWITCHABLE,
    noise_on: bool = False,
    seed: Optional[int] = None,
    params: Optional[ScoreParams] = None,
    trace: Optional[TraceWriter] = None,
) -> EpisodeResult:
    trust_policy = TrustPolicy.parse(trust_policy)
    params = params or ScoreParams()
    profiles = sense(scenario, noise_on, seed, params.t)
    scorer = FeatureScorer(scenario.registry(), profiles, params)
    try:
        scorer.check_alignment(gp)
    except ConfigurationError as exc:
        raise ConfigurationError(f"scenario {scenario.scenario_id}: {exc}") from None
    oracle = ExecutionOracle(scenario)
    heuristic = make_heuristic(cfg.effective_heuristic, gp)
    label = cfg.display_label

    attempts: list[Combination] = []
    reject = RejectSet()
    whitelist: frozenset[Combination] = frozenset()
    trust = True
    result = EpisodeResult(success=False, status=EpisodeStatus.EXHAUSTED)

    while True:
        if budget is not None and len(attempts) >= budget:
            result.status = EpisodeStatus.BUDGET
            break
        found = run_search(gp, cfg, scorer, trust, attempts, whitelist, heuristic)
        result.searches += 1
        result.nodes_total += found.nodes_expanded
        result.trust_trace.append(trust)
        if trust:
            reject.update(found.reject_set_out)
        if trace:
            trace.write(SearchRecord(
                scenario_id=scenario.scenario_id,
                config=label,
                search=result.searches,
                trust=trust,
                status=found.status.value,
                nodes_expanded=found.nodes_expanded,
                nodes_generated=found.nodes_generated,
                plan_length=len(found.plan) if found.solved else None,
                rejected=len(reject),
            ))

        if found.status == SearchStatus.BUDGET:
            result.status = EpisodeStatus.BUDGET
            break
        if not found.solved:
            if trust and trust_policy == TrustPolicy.SWITCHABLE and reject:
                trust = False
                whitelist = reject.frozen()
                logger.info(
                    "%s: no plan with trusted sensors, retrying %d rejected combinations",
                    scenario.scenario_id, len(whitelist),
                )
                if trace:
                    trace.write(TrustSwitchRecord(
                        scenario_id=scenario.scenario_id,
                        config=label,
                        whitelist=[[action, *o_a] for o_a, action in sorted(whitelist)],
                    ))
                continue
            result.status = EpisodeStatus.EXHAUSTED
            break

        result.plans.append(found.plan)
        joins = found.joins
        if not joins:
            result.success = True
            result.status = EpisodeStatus.ACCEPTED
            break
        combination = (joins[0].o_a, joins[0].schema_name)
        attempts.append(combination)
        accepted = oracle.accepts(found.plan)
        logger.debug(
            "%s: attempt %d %s %s -> %s",
            scenario.scenario_id, len(attempts), combination[1], " ".join(combination[0]),
            "accepted" if accepted else "failed",
        )
        if trace:
            trace.write(AttemptRecord(
                scenario_id=scenario.scenario_id,
                config=label,
                attempt=len(attempts),
                action=combination[1],
                objects=list(combination[0]),
                trust=trust,
                accepted=accepted,
            ))
        if accepted:
            result.success = True
            result.status = EpisodeStatus.ACCEPTED
            break

    result.attempts = attempts
    result.failed_attempts = len(attempts) - (1 if result.success and attempts else 0)
    result.reject_final = reject.frozen()
    result.whitelist = whitelist
    if result.success:
        result.plan_length = len(result.plans[-1])
    if trace:
        trace.write(EpisodeRecord(
            scenario_id=scenario.scenario_id,
            config=label,
            status=result.status.value,
            success=result.success,
            failed_attempts=result.failed_attempts,
            nodes_total=result.nodes_total,
            plan_length=result.plan_length,
        ))
    logger.info(
        "%s [%s]: %s after %d failed attempts, %d nodes",
        scenario.scenario_id, label, result.status.value, result.failed_attempts, result.nodes_total,
    )
    return result


@dataclass
class AdaptabilityOutcome:
    episode: EpisodeResult
    truth_tool: str
    truth_action: str
    chosen_tool: Optional[str] = None
    task_action: Optional[str] = None
    accepted_tool: Optional[str] = None

    @property
    def correct(self) -> bool:
        return self.chosen_tool == self.truth_tool and self.task_action == self.truth_action


def run_adaptability_episode(gp: GroundProblem, cfg: SearchConfig, scenario: ScenarioFile, **kwargs) -> AdaptabilityOutcome:
    """
    Run an episode on a two-tool task and report which tool the agent chose
    (the tool of its first plan) and which task action that plan uses.
    """
    join_names = {a.schema_name for a in gp.tool_actions}
    if len(join_names) < 2:
        raise ConfigurationError(f"{gp.domain.name} offers a single tool, expected two alternatives")
    episode = run_episode(gp, cfg, scenario, **kwargs)
    registry = scenario.registry()
    truth_spec = scenario.truth_spec
    outcome = AdaptabilityOutcome(
        episode=episode,
        truth_tool=truth_spec.tool,
        truth_action=truth_spec.task_action,
    )
    if episode.plans:
        first = episode.plans[0]
        joins = [a for a in first if a.o_a]
        if joins:
            spec = registry[joins[0].schema_name]
            outcome.chosen_tool = spec.tool
            task_actions = {s.task_action for s in registry.values()}
            outcome.task_action = next((a.schema_name for a in first if a.schema_name in task_actions), None)
    if episode.success and episode.accepted_plan:
        joins = [a for a in episode.accepted_plan if a.o_a]
        if joins:
            outcome.accepted_tool = registry[joins[0].schema_name].tool
    return outcome
