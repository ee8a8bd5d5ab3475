import heapq
import random
from collections import deque

from planner.grounding import GroundProblem, applicable, apply, goal_satisfied, ground, load_ground_problem
from planner.pddl import parse_domain, parse_problem
from planner.perception import load_scenario, load_tool_registry
from planner.schemas import GroundTruth, NoiseSpec, ObjectProfile, ScenarioFile
from planner.utils import data_dir, task_assets


SQUEEGEE_SCENARIO = "scenarios/cleaning_squeegee_01.json"
SQUEEGEE_TRUTH = ("obj1", "obj6")

TOY_DOMAIN = """
(define (domain toy)
  (:requirements :strips :typing :negative-preconditions)
  (:types tool-part)
  (:predicates (available ?o - tool-part) (ready) (built) (done))
  (:action prepare
    :parameters ()
    :precondition (and)
    :effect (ready))
  (:action join-toy
    :parameters (?h - tool-part ?g - tool-part)
    :precondition (and (available ?h) (available ?g) (ready) (not (built)))
    :effect (and (built) (not (available ?h)) (not (available ?g))))
  (:action finish
    :parameters ()
    :precondition (built)
    :effect (done))
)
"""

TOY_PROBLEM = """
(define (problem toy-1)
  (:domain toy)
  (:objects a b c - tool-part)
  (:init (available a) (available b) (available c))
  (:goal (done))
)
"""

# two independent goals, one step each
FORK_DOMAIN = """
(define (domain fork)
  (:requirements :strips)
  (:predicates (g1) (g2) (never))
  (:action reach-one :parameters () :precondition (and) :effect (g1))
  (:action reach-two :parameters () :precondition (and) :effect (g2))
)
"""

FORK_PROBLEM = """
(define (problem fork-1)
  (:domain fork)
  (:init)
  (:goal (and (g1) (g2)))
)
"""


def parse(domain_text: str, problem_text: str, **kwargs) -> GroundProblem:
    domain = parse_domain(domain_text)
    return ground(domain, parse_problem(problem_text, domain), **kwargs)


def bundled_problem(name: str) -> GroundProblem:
    domain, problem = task_assets(name)
    return load_ground_problem(domain, problem, tuple(load_tool_registry()))


def bundled_scenario(relative: str = SQUEEGEE_SCENARIO) -> ScenarioFile:
    return load_scenario(data_dir() / relative)


# ── Random models ─────────────────────────────────────────────────────────────

def _conjunction(positive: list[str], negative: list[str]) -> str:
    parts = [f"({name})" for name in positive] + [f"(not ({name}))" for name in negative]
    return "(and " + " ".join(parts) + ")" if parts else "(and)"


def random_model_texts(rng: random.Random, atoms: int = 7, actions: int = 12) -> tuple[str, str]:
    """A propositional domain/problem pair with at most ``2 ** atoms`` states."""
    names = [f"p{i}" for i in range(atoms)]
    lines = [
        "(define (domain random)",
        "  (:requirements :strips :negative-preconditions)",
        "  (:predicates " + " ".join(f"({name})" for name in names) + ")",
    ]
    for i in range(actions):
        pre = rng.sample(names, rng.randint(0, 2))
        neg = [name for name in rng.sample(names, rng.randint(0, 1)) if name not in pre]
        adds = rng.sample(names, rng.randint(1, 2))
        dels = [name for name in rng.sample(names, rng.randint(0, 2)) if name not in adds]
        lines.append(f"  (:action a{i}")
        lines.append("    :parameters ()")
        lines.append(f"    :precondition {_conjunction(pre, neg)}")
        lines.append(f"    :effect {_conjunction(adds, dels)})")
    lines.append(")")

    init = rng.sample(names, rng.randint(0, 2))
    goal = rng.sample(names, rng.randint(1, 3))
    problem = "\n".join([
        "(define (problem random-1)",
        "  (:domain random)",
        "  (:init " + " ".join(f"({name})" for name in init) + ")",
        f"  (:goal {_conjunction(goal, [])})",
        ")",
    ])
    return "\n".join(lines), problem


def random_model(rng: random.Random, **kwargs) -> GroundProblem:
    return parse(*random_model_texts(rng, **kwargs))


# ── Oracles ───────────────────────────────────────────────────────────────────

def bfs_distances(gp: GroundProblem) -> dict[int, int]:
    distances = {gp.init: 0}
    queue = deque([gp.init])
    while queue:
        state = queue.popleft()
        for action in gp.actions:
            if applicable(state, action):
                child = apply(state, action)
                if child not in distances:
                    distances[child] = distances[state] + 1
                    queue.append(child)
    return distances


def optimal_plan_length(gp: GroundProblem) -> int | None:
    lengths = [d for state, d in bfs_distances(gp).items() if goal_satisfied(state, gp.goal)]
    return min(lengths) if lengths else None


def dijkstra(gp: GroundProblem) -> dict[int, float]:
    cost = {gp.init: 0}
    heap = [(0, gp.init)]
    while heap:
        c, state = heapq.heappop(heap)
        if c > cost[state]:
            continue
        for action in gp.actions:
            if applicable(state, action):
                child = apply(state, action)
                new = c + action.base_cost
                if new < cost.get(child, float("inf")):
                    cost[child] = new
                    heapq.heappush(heap, (new, child))
    return cost


def reachable_atom_sets(gp: GroundProblem) -> set[frozenset]:
    return {frozenset(gp.state_atoms(state)) for state in bfs_distances(gp)}


# ── Scenarios ─────────────────────────────────────────────────────────────────

def make_profile(
    object_id: str,
    shape: dict[str, float] | None = None,
    material: dict[str, float] | None = None,
    **flags,
) -> ObjectProfile:
    return ObjectProfile(object_id=object_id, shape_conf=shape or {}, material_conf=material or {}, **flags)


def make_scenario(
    objects: list[ObjectProfile],
    truth: tuple[str, str],
    tool: str = "squeegee",
    scenario_id: str = "case",
    noise: NoiseSpec | None = None,
) -> ScenarioFile:
    registry = load_tool_registry()
    spec = next(spec for spec in registry.values() if spec.tool == tool)
    return ScenarioFile(
        scenario_id=scenario_id,
        task_type=spec.task_type,
        objects=objects,
        ground_truth=[GroundTruth(tool=tool, action_part=truth[0], grasp_part=truth[1])],
        tool_specs=[spec],
        noise=noise or NoiseSpec(),
    )
