"""
Delete-relaxation heuristics over a grounded model: FF relaxed-plan length,
h_add, h_max, landmark count and the blind heuristic. Action costs are unit.
"""
from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from math import inf
from typing import Any, Callable

from planner.exceptions import ConfigurationError
from planner.grounding import GroundProblem, iter_bits


logger = logging.getLogger(__name__)

HEURISTIC_NAMES = ("ff", "hadd", "hmax", "landmarks", "zero")


# ── Relaxed planning graph ────────────────────────────────────────────────────

@dataclass
class RelaxedPlanningGraph:
    fact_layers: list[list[int]] = field(default_factory=list)
    action_layers: list[list[int]] = field(default_factory=list)
    fact_level: dict[int, int] = field(default_factory=dict)
    action_level: dict[int, int] = field(default_factory=dict)
    goal_reached: bool = False

    @property
    def depth(self) -> int:
        return len(self.fact_layers) - 1


def build_rpg(state: int, gp: GroundProblem, stop_at_goal: bool = True) -> RelaxedPlanningGraph:
    """
    Layered delete-relaxed reachability from ``state``.

    Layer ``i`` holds the facts first reached at level ``i`` and the actions
    first enabled at level ``i``; construction stops once the positive goal
    is reached (with ``stop_at_goal``) or at the fixpoint.
    """
    rpg = RelaxedPlanningGraph()
    unsatisfied = [len(action.pre_pos_idx) for action in gp.actions]
    frontier = list(iter_bits(state))
    for i in frontier:
        rpg.fact_level[i] = 0
    rpg.fact_layers.append(frontier)
    reached = state
    enabled = [action.index for action in gp.actions if not action.pre_pos_idx]
    level = 0
    while True:
        if reached & gp.goal.pos == gp.goal.pos:
            rpg.goal_reached = True
            if stop_at_goal:
                break
        for fact in frontier:
            for a in gp.consumers[fact]:
                unsatisfied[a] -= 1
                if unsatisfied[a] == 0:
                    enabled.append(a)
        layer = [a for a in enabled if a not in rpg.action_level]
        enabled = []
        next_frontier = []
        for a in layer:
            rpg.action_level[a] = level
            for fact in gp.actions[a].adds_idx:
                if fact not in rpg.fact_level:
                    rpg.fact_level[fact] = level + 1
                    next_frontier.append(fact)
                    reached |= 1 << fact
        rpg.action_layers.append(layer)
        if not next_frontier:
            break
        rpg.fact_layers.append(next_frontier)
        frontier = next_frontier
        level += 1
    return rpg


def h_ff(state: int, gp: GroundProblem) -> float:
    """
    Relaxed plan length. Subgoals of a level are handled in atom-index order;
    each takes the achiever whose preconditions have the earliest fact level,
    then the lowest action index.
    """
    rpg = build_rpg(state, gp)
    if not rpg.goal_reached:
        return inf
    goals_by_level: dict[int, set[int]] = {}
    for g in iter_bits(gp.goal.pos):
        level = rpg.fact_level[g]
        if level > 0:
            goals_by_level.setdefault(level, set()).add(g)
    if not goals_by_level:
        return 0

    # (fact, level) pairs made true by already selected actions
    marked: set[tuple[int, int]] = set()
    chosen: set[int] = set()
    for level in range(max(goals_by_level), 0, -1):
        for g in sorted(goals_by_level.get(level, ())):
            if (g, level) in marked:
                continue
            best = min(
                (a for a in gp.achievers[g] if rpg.action_level.get(a, inf) <= level - 1),
                key=lambda a: (max((rpg.fact_level[p] for p in gp.actions[a].pre_pos_idx), default=0), a),
            )
            chosen.add(best)
            action = gp.actions[best]
            for p in action.pre_pos_idx:
                p_level = rpg.fact_level[p]
                if p_level > 0 and (p, level - 1) not in marked:
                    goals_by_level.setdefault(p_level, set()).add(p)
            for fact in action.adds_idx:
                marked.add((fact, level))
                marked.add((fact, level - 1))
    return len(chosen)


# ── Cost propagation ──────────────────────────────────────────────────────────

def _propagate(state: int, gp: GroundProblem, additive: bool) -> float:
    cost = [inf] * len(gp.atoms)
    heap: list[tuple[float, int]] = []
    for i in iter_bits(state):
        cost[i] = 0
        heap.append((0, i))
    unsatisfied = [len(action.pre_pos_idx) for action in gp.actions]

    def fire(action_index: int):
        action = gp.actions[action_index]
        pre = [cost[p] for p in action.pre_pos_idx]
        c = (sum(pre) if additive else max(pre, default=0)) + action.base_cost
        for fact in action.adds_idx:
            if c < cost[fact]:
                cost[fact] = c
                heapq.heappush(heap, (c, fact))

    for action in gp.actions:
        if not action.pre_pos_idx:
            fire(action.index)
    heapq.heapify(heap)

    remaining = set(iter_bits(gp.goal.pos))
    done = [False] * len(gp.atoms)
    while heap and remaining:
        c, fact = heapq.heappop(heap)
        if done[fact] or c > cost[fact]:
            continue
        done[fact] = True
        remaining.discard(fact)
        for a in gp.consumers[fact]:
            unsatisfied[a] -= 1
            if unsatisfied[a] == 0:
                fire(a)

    goal_costs = [cost[g] for g in iter_bits(gp.goal.pos)]
    if additive:
        return sum(goal_costs)
    return max(goal_costs, default=0)


def h_add(state: int, gp: GroundProblem) -> float:
    return _propagate(state, gp, additive=True)


def h_max(state: int, gp: GroundProblem) -> float:
    return _propagate(state, gp, additive=False)


def h_zero(state: int, gp: GroundProblem) -> float:
    return 0


# ── Landmarks ─────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class LandmarkSet:
    landmarks: tuple[int, ...]
    mask: int
    goal_mask: int

    def __len__(self) -> int:
        return len(self.landmarks)


def relaxed_reachable(gp: GroundProblem, state: int, without_atom: int | None = None) -> bool:
    """Whether the positive goal is delete-relaxed reachable, optionally with ``without_atom`` unachievable."""
    reached = state
    if without_atom is not None:
        reached &= ~(1 << without_atom)
    unsatisfied = [len(action.pre_pos_idx) for action in gp.actions]
    queue = list(iter_bits(reached))
    pending = [a.index for a in gp.actions if not a.pre_pos_idx]

    def fire(a: int):
        nonlocal reached
        for fact in gp.actions[a].adds_idx:
            if fact == without_atom or reached >> fact & 1:
                continue
            reached |= 1 << fact
            queue.append(fact)

    for a in pending:
        fire(a)
    while queue:
        if reached & gp.goal.pos == gp.goal.pos:
            return True
        fact = queue.pop()
        for a in gp.consumers[fact]:
            unsatisfied[a] -= 1
            if unsatisfied[a] == 0:
                fire(a)
    return reached & gp.goal.pos == gp.goal.pos


@lru_cache(maxsize=64)
def compute_landmarks(gp: GroundProblem) -> LandmarkSet:
    """
    Fact landmarks of the delete relaxation from the initial state.

    An atom not true initially is a landmark iff making it unachievable makes
    the relaxed goal unreachable.
    """
    if not relaxed_reachable(gp, gp.init):
        logger.debug("Relaxed goal unreachable from the initial state, no landmarks")
        return LandmarkSet((), 0, 0)
    rpg = build_rpg(gp.init, gp, stop_at_goal=False)
    found = tuple(
        atom for atom in sorted(rpg.fact_level)
        if not gp.init >> atom & 1 and not relaxed_reachable(gp, gp.init, without_atom=atom)
    )
    mask = 0
    for atom in found:
        mask |= 1 << atom
    logger.debug("Found %d landmarks", len(found))
    return LandmarkSet(found, mask, mask & gp.goal.pos)


def h_landmark_count(state: int, gp: GroundProblem, lms: LandmarkSet, accepted: int | None = None) -> int:
    """
    Landmarks not yet accepted on the path, plus accepted goal landmarks that
    are false again in ``state`` (required again).

    ``accepted`` is the set accepted along the path up to and including
    ``state``; when omitted only the landmarks true in ``state`` count as
    accepted.
    """
    if accepted is None:
        accepted = lms.mask & state
    unaccepted = lms.mask & ~accepted
    required_again = lms.goal_mask & accepted & ~state
    return unaccepted.bit_count() + required_again.bit_count()


# ── Evaluators used by the search engine ──────────────────────────────────────

class Heuristic:
    """
    Evaluator bound to one grounded problem.

    ``evaluate`` receives the parent's context and returns ``(value, context)``
    for the child; only path-dependent heuristics use the context.
    """
    name = "zero"

    def __init__(self, gp: GroundProblem, fn: Callable[[int, GroundProblem], float] = h_zero):
        self.gp = gp
        self.fn = fn

    def __call__(self, state: int) -> float:
        return self.fn(state, self.gp)

    def evaluate(self, state: int, parent_context: Any = None) -> tuple[float, Any]:
        return self(state), None


class LandmarkCountHeuristic(Heuristic):
    name = "landmarks"

    def __init__(self, gp: GroundProblem):
        super().__init__(gp)
        self.landmarks = compute_landmarks(gp)

    def __call__(self, state: int) -> float:
        return h_landmark_count(state, self.gp, self.landmarks)

    def evaluate(self, state: int, parent_context: Any = None) -> tuple[float, Any]:
        accepted = (parent_context or 0) | (self.landmarks.mask & state)
        return h_landmark_count(state, self.gp, self.landmarks, accepted), accepted


_FUNCTIONS = {
    "ff": h_ff,
    "hadd": h_add,
    "hmax": h_max,
    "zero": h_zero,
}


def make_heuristic(name: str, gp: GroundProblem) -> Heuristic:
    if name == "landmarks":
        return LandmarkCountHeuristic(gp)
    try:
        fn = _FUNCTIONS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown heuristic '{name}', expected one of {', '.join(HEURISTIC_NAMES)}"
        ) from None
    heuristic = Heuristic(gp, fn)
    heuristic.name = name
    return heuristic
