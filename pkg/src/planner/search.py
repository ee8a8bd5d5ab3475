"""
Feature guided best-first search (A*, uniform cost, weighted A*) and
enforced hill-climbing over a grounded model.

The feature score phi of a transition comes from a scorer callback
``scorer(state, action, trust, reject) -> float``; ``-inf`` rejects the
transition. Without feature scoring phi is 0 for every edge.
"""
from __future__ import annotations

import heapq
import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from itertools import count
from math import inf, isinf
from typing import Any, Iterable, Literal, Optional, Protocol

from pydantic import BaseModel, ConfigDict, Field, field_validator

from planner.exceptions import SearchError
from planner.grounding import GroundAction, GroundProblem, apply, applicable, goal_satisfied
from planner.heuristics import HEURISTIC_NAMES, Heuristic, make_heuristic


logger = logging.getLogger(__name__)

Combination = tuple[tuple[str, ...], str]
"""An ordered object permutation O_a together with the action schema using it."""

# φ ∈ [0, 2] with unit weights; UCS with features ranks by g + (2 - φ)
UCS_FEATURE_OFFSET = 2.0


class Algorithm(str, Enum):
    ASTAR = "astar"
    UCS = "ucs"
    WEIGHTED_ASTAR = "wastar"
    EHC = "ehc"


class SearchStatus(str, Enum):
    SOLVED = "solved"
    EXHAUSTED = "exhausted"
    BUDGET = "budget"


class SearchConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    algorithm: Algorithm = Algorithm.ASTAR
    heuristic: Literal["ff", "hadd", "hmax", "landmarks", "zero"] = "ff"
    use_feature_score: bool = True
    weight: float = Field(5.0, ge=1.0)
    tie_break: Literal["h-then-fifo", "fifo"] = "h-then-fifo"
    node_budget: Optional[int] = Field(None, ge=0)
    label: str = ""

    @field_validator("algorithm", mode="before")
    @classmethod
    def accept_long_names(cls, value):
        if value == "weighted_astar":
            return Algorithm.WEIGHTED_ASTAR
        return value

    @property
    def display_label(self) -> str:
        if self.label:
            return self.label
        names = {
            Algorithm.ASTAR: "A*",
            Algorithm.UCS: "UCS",
            Algorithm.WEIGHTED_ASTAR: "wA*",
            Algorithm.EHC: "eHC",
        }
        text = names[self.algorithm]
        if self.algorithm != Algorithm.UCS:
            text += f"+{self.heuristic}"
        if self.use_feature_score:
            text += "+FS"
        return text

    @property
    def effective_heuristic(self) -> str:
        return "zero" if self.algorithm == Algorithm.UCS else self.heuristic


class Scorer(Protocol):
    def __call__(self, state: int, action: GroundAction, trust: bool, reject: frozenset) -> float: ...


@dataclass(slots=True)
class SearchNode:
    state: int
    g: float
    h: float
    phi: float
    f: float
    parent: Optional["SearchNode"] = None
    action: Optional[GroundAction] = None
    context: Any = None


@dataclass
class PlanResult:
    plan: Optional[tuple[GroundAction, ...]]
    status: SearchStatus
    nodes_expanded: int = 0
    nodes_generated: int = 0
    reject_set_out: frozenset[Combination] = frozenset()
    trust_used: bool = True
    cost: float = 0

    @property
    def solved(self) -> bool:
        return self.plan is not None

    @property
    def joins(self) -> tuple[GroundAction, ...]:
        return tuple(a for a in self.plan or () if a.o_a)

    def plan_lines(self) -> list[str]:
        return [action.name for action in self.plan or ()]


def extract_plan(goal_node: SearchNode, gp: GroundProblem | None = None) -> list[GroundAction]:
    """Walk the parent chain back to the root; with ``gp`` the plan is re-simulated."""
    actions: list[GroundAction] = []
    node = goal_node
    seen = 0
    while node.parent is not None:
        if node.action is None:
            raise SearchError("broken parent chain: edge without an action")
        actions.append(node.action)
        node = node.parent
        seen += 1
        if seen > 1_000_000:
            raise SearchError("broken parent chain: cycle detected")
    actions.reverse()
    if gp is not None:
        if node.state != gp.init:
            raise SearchError("broken parent chain: root is not the initial state")
        state = gp.init
        for action in actions:
            if not applicable(state, action):
                raise SearchError(f"extracted plan is invalid at {action}")
            state = apply(state, action)
        if state != goal_node.state or not goal_satisfied(state, gp.goal):
            raise SearchError("extracted plan does not reach the goal")
    return actions


class _Base:
    def __init__(
        self,
        gp: GroundProblem,
        cfg: SearchConfig,
        scorer: Scorer | None = None,
        trust: bool = True,
        exclusions: Iterable[Combination] = (),
        whitelist: Iterable[Combination] = (),
        heuristic: Heuristic | None = None,
    ):
        self.gp = gp
        self.cfg = cfg
        self.scorer = scorer
        self.trust = trust
        self.exclusions = frozenset(exclusions)
        self.whitelist = frozenset(whitelist)
        self.heuristic = heuristic or make_heuristic(cfg.effective_heuristic, gp)
        self.reject: set[Combination] = set()
        self.expanded = 0
        self.generated = 0

    def edge_score(self, state: int, action: GroundAction) -> float:
        if not action.o_a:
            return 0.0
        key = (action.o_a, action.schema_name)
        if key in self.exclusions:
            return -inf
        if not self.cfg.use_feature_score or self.scorer is None:
            return 0.0
        phi = self.scorer(state, action, self.trust, self.whitelist)
        if phi == -inf and self.trust:
            self.reject.add(key)
        return phi

    def result(self, goal_node: SearchNode | None, status: SearchStatus) -> PlanResult:
        plan = None
        cost = 0
        if goal_node is not None:
            plan = tuple(extract_plan(goal_node, self.gp))
            cost = goal_node.g
        logger.debug(
            "%s trust=%s: %s after %d expansions (%d rejected combinations)",
            self.cfg.display_label, self.trust, status.value, self.expanded, len(self.reject),
        )
        return PlanResult(
            plan=plan,
            status=status,
            nodes_expanded=self.expanded,
            nodes_generated=self.generated,
            reject_set_out=frozenset(self.reject),
            trust_used=self.trust,
            cost=cost,
        )


class BestFirstSearch(_Base):
    """
    Open-list search ranking nodes by ``f``.

    A successor that passes the edge filter replaces the open entry of its
    state when it is cheaper, or equally cheap with a lower ``f``; closed
    states are re-opened only on a strictly cheaper path. The goal
    test happens at pop, and popping the goal is not an expansion.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.closed: dict[int, float] = {}
        self.expansion_order: list[SearchNode] = []

    def priority(self, g: float, h: float, phi: float) -> float:
        algorithm = self.cfg.algorithm
        if algorithm == Algorithm.UCS:
            f = g + (UCS_FEATURE_OFFSET - phi) if self.cfg.use_feature_score else g
        elif algorithm == Algorithm.WEIGHTED_ASTAR:
            f = g + self.cfg.weight * (h - phi)
        else:
            f = g + h - phi
        return max(f, 0.0)

    def run(self) -> PlanResult:
        gp = self.gp
        sequence = count()
        fifo = self.cfg.tie_break == "fifo"
        h, context = self.heuristic.evaluate(gp.init, None)
        if isinf(h):
            return self.result(None, SearchStatus.EXHAUSTED)
        root = SearchNode(gp.init, 0, h, 0.0, self.priority(0, h, 0.0), context=context)
        best: dict[int, SearchNode] = {gp.init: root}
        open_list = [(root.f, 0 if fifo else h, next(sequence), root)]
        budget = self.cfg.node_budget

        while open_list:
            _, _, _, node = heapq.heappop(open_list)
            if best[node.state] is not node:
                continue
            if goal_satisfied(node.state, gp.goal):
                return self.result(node, SearchStatus.SOLVED)
            if budget is not None and self.expanded >= budget:
                return self.result(None, SearchStatus.BUDGET)
            self.expanded += 1
            self.closed[node.state] = node.g
            self.expansion_order.append(node)

            for action in gp.actions:
                if not applicable(node.state, action):
                    continue
                self.generated += 1
                child = apply(node.state, action)
                g = node.g + action.base_cost
                if g >= self.closed.get(child, inf):
                    continue
                known = best.get(child)
                if known is not None and g > known.g:
                    continue
                phi = self.edge_score(node.state, action)
                if phi == -inf:
                    continue
                h, context = self.heuristic.evaluate(child, node.context)
                if isinf(h):
                    continue
                f = self.priority(g, h, phi)
                if known is not None and g == known.g and f >= known.f:
                    continue
                successor = SearchNode(child, g, h, phi, f, node, action, context)
                best[child] = successor
                heapq.heappush(open_list, (successor.f, 0 if fifo else h, next(sequence), successor))

        return self.result(None, SearchStatus.EXHAUSTED)


class EnforcedHillClimbing(_Base):
    """
    Commit to the first state found by breadth-first search whose
    ``f = h - phi`` is strictly below the current one.

    Expanding a BFS node evaluates all of its children; the best improving
    child (lowest f, then generation order) is committed, and a goal child is
    committed immediately.
    Siblings reaching the same state keep the edge with the lower f.
    """

    def run(self) -> PlanResult:
        gp = self.gp
        budget = self.cfg.node_budget
        h, context = self.heuristic.evaluate(gp.init, None)
        if isinf(h):
            return self.result(None, SearchStatus.EXHAUSTED)
        current = SearchNode(gp.init, 0, h, 0.0, h, context=context)

        while not goal_satisfied(current.state, gp.goal):
            queue = deque([current])
            seen = {current.state}
            committed = None
            while queue and committed is None:
                node = queue.popleft()
                if budget is not None and self.expanded >= budget:
                    return self.result(None, SearchStatus.BUDGET)
                self.expanded += 1
                children: dict[int, SearchNode] = {}
                for action in gp.actions:
                    if not applicable(node.state, action):
                        continue
                    self.generated += 1
                    child = apply(node.state, action)
                    if child in seen:
                        continue
                    phi = self.edge_score(node.state, action)
                    if phi == -inf:
                        continue
                    h, context = self.heuristic.evaluate(child, node.context)
                    if isinf(h):
                        continue
                    successor = SearchNode(child, node.g + action.base_cost, h, phi, h - phi, node, action, context)
                    if goal_satisfied(child, gp.goal):
                        committed = successor
                        break
                    known = children.get(child)
                    if known is None or successor.f < known.f:
                        children[child] = successor
                if committed is not None:
                    break
                seen.update(children)
                queue.extend(children.values())
                improving = [n for n in children.values() if n.f < current.f]
                if improving:
                    committed = min(improving, key=lambda n: n.f)
            if committed is None:
                return self.result(None, SearchStatus.EXHAUSTED)
            current = committed

        return self.result(current, SearchStatus.SOLVED)


def search(
    gp: GroundProblem,
    cfg: SearchConfig,
    scorer: Scorer | None = None,
    trust: bool = True,
    exclusions: Iterable[Combination] = (),
    whitelist: Iterable[Combination] = (),
    heuristic: Heuristic | None = None,
) -> PlanResult:
    return BestFirstSearch(gp, cfg, scorer, trust, exclusions, whitelist, heuristic).run()


def search_ehc(
    gp: GroundProblem,
    cfg: SearchConfig,
    scorer: Scorer | None = None,
    trust: bool = True,
    exclusions: Iterable[Combination] = (),
    whitelist: Iterable[Combination] = (),
    heuristic: Heuristic | None = None,
) -> PlanResult:
    return EnforcedHillClimbing(gp, cfg, scorer, trust, exclusions, whitelist, heuristic).run()


def run_search(
    gp: GroundProblem,
    cfg: SearchConfig,
    scorer: Scorer | None = None,
    trust: bool = True,
    exclusions: Iterable[Combination] = (),
    whitelist: Iterable[Combination] = (),
    heuristic: Heuristic | None = None,
) -> PlanResult:
    runner = search_ehc if cfg.algorithm == Algorithm.EHC else search
    return runner(gp, cfg, scorer, trust, exclusions, whitelist, heuristic)


def feature_guided_search(
    gp: GroundProblem,
    cfg: SearchConfig,
    scorer: Scorer | None = None,
    switchable: bool = True,
    exclusions: Iterable[Combination] = (),
    heuristic: Heuristic | None = None,
) -> PlanResult:
    """
    Search trusting every sensor; if that finds no plan and some combinations
    were rejected, search once more without trust, restricted to those.
    """
    exclusions = frozenset(exclusions)
    heuristic = heuristic or make_heuristic(cfg.effective_heuristic, gp)
    first = run_search(gp, cfg, scorer, True, exclusions, (), heuristic)
    if first.solved or not switchable or not first.reject_set_out:
        return first
    logger.info("No plan with trusted sensors, retrying %d rejected combinations", len(first.reject_set_out))
    second = run_search(gp, cfg, scorer, False, exclusions, first.reject_set_out, heuristic)
    return PlanResult(
        plan=second.plan,
        status=second.status,
        nodes_expanded=first.nodes_expanded + second.nodes_expanded,
        nodes_generated=first.nodes_generated + second.nodes_generated,
        reject_set_out=first.reject_set_out,
        trust_used=False,
        cost=second.cost,
    )


__all__ = [
    "Algorithm",
    "BestFirstSearch",
    "Combination",
    "EnforcedHillClimbing",
    "HEURISTIC_NAMES",
    "PlanResult",
    "SearchConfig",
    "SearchNode",
    "SearchStatus",
    "extract_plan",
    "feature_guided_search",
    "run_search",
    "search",
    "search_ehc",
]
