"""
Grounding of a parsed STRIPS domain/problem pair into a propositional model.

States are Python ints used as bitsets over the sorted atom universe.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import product
from math import prod
from pathlib import Path
from typing import Iterable, NamedTuple

from planner.exceptions import ContractError, GroundingError
from planner.pddl import (
    OBJECT_TYPE,
    ActionSchema,
    Atom,
    DomainDef,
    Literal,
    ProblemDef,
    parse_domain_file,
    parse_problem_file,
)


logger = logging.getLogger(__name__)

DEFAULT_MAX_GROUND_ACTIONS = 100_000


def _bits(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


def iter_bits(mask: int) -> Iterable[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass(eq=False)
class GroundAction:
    index: int
    schema_name: str
    args: tuple[str, ...]
    o_a: tuple[str, ...]
    pre_pos: int
    pre_neg: int
    adds: int
    dels: int
    base_cost: int = 1
    pre_pos_idx: tuple[int, ...] = field(init=False)
    pre_neg_idx: tuple[int, ...] = field(init=False)
    adds_idx: tuple[int, ...] = field(init=False)
    dels_idx: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        self.pre_pos_idx = tuple(iter_bits(self.pre_pos))
        self.pre_neg_idx = tuple(iter_bits(self.pre_neg))
        self.adds_idx = tuple(iter_bits(self.adds))
        self.dels_idx = tuple(iter_bits(self.dels))

    @property
    def bound_objects(self) -> tuple[str, ...]:
        return self.args

    @property
    def is_tool_action(self) -> bool:
        return bool(self.o_a)

    @property
    def name(self) -> str:
        return " ".join((self.schema_name, *self.args))

    def __str__(self) -> str:
        return f"({self.name})"

    def __repr__(self) -> str:
        return f"<GroundAction {self.index} {self}>"


class Goal(NamedTuple):
    pos: int
    neg: int
    literals: tuple[Literal, ...]


@dataclass(eq=False)
class GroundProblem:
    domain: DomainDef
    problem: ProblemDef
    atoms: tuple[Atom, ...]
    actions: tuple[GroundAction, ...]
    init: int
    goal: Goal
    pruned: int = 0
    atom_index: dict[Atom, int] = field(init=False, repr=False)
    # atom index -> indices of actions with that atom as positive precondition / add effect
    consumers: tuple[tuple[int, ...], ...] = field(init=False, repr=False)
    achievers: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        self.atom_index = {atom: i for i, atom in enumerate(self.atoms)}
        consumers: list[list[int]] = [[] for _ in self.atoms]
        achievers: list[list[int]] = [[] for _ in self.atoms]
        for action in self.actions:
            for i in action.pre_pos_idx:
                consumers[i].append(action.index)
            for i in action.adds_idx:
                achievers[i].append(action.index)
        self.consumers = tuple(map(tuple, consumers))
        self.achievers = tuple(map(tuple, achievers))

    @property
    def tool_actions(self) -> tuple[GroundAction, ...]:
        return tuple(a for a in self.actions if a.o_a)

    def state_atoms(self, state: int) -> list[Atom]:
        return [self.atoms[i] for i in iter_bits(state)]

    def state_from_atoms(self, atoms: Iterable[Atom]) -> int:
        try:
            return _bits(self.atom_index[atom] for atom in atoms)
        except KeyError as exc:
            raise ContractError(f"atom {exc.args[0]} is not part of the grounded model") from exc

    def action_named(self, name: str) -> GroundAction | None:
        """Look up a ground action by ``"schema arg1 arg2"``."""
        wanted = " ".join(name.strip("()").split())
        for action in self.actions:
            if action.name == wanted:
                return action
        return None


def applicable(state: int, action: GroundAction) -> bool:
    return state & action.pre_pos == action.pre_pos and not state & action.pre_neg


def apply(state: int, action: GroundAction) -> int:
    if not applicable(state, action):
        raise ContractError(f"{action} is not applicable in the given state")
    return (state & ~action.dels) | action.adds


def goal_satisfied(state: int, goal: Goal) -> bool:
    return state & goal.pos == goal.pos and not state & goal.neg


def _static_predicates(domain: DomainDef) -> frozenset[str]:
    fluent = set()
    for schema in domain.action_schemas:
        fluent.update(atom.predicate for atom in schema.add_effects)
        fluent.update(atom.predicate for atom in schema.del_effects)
    return frozenset(p.name for p in domain.predicates) - fluent


def _substitute(atom: Atom, binding: dict[str, str]) -> Atom:
    return Atom(atom.predicate, tuple(binding[arg] for arg in atom.args))


def _candidates(schema: ActionSchema, by_type: dict[str, list[str]]) -> list[list[str]]:
    return [by_type.get(param.type, []) for param in schema.params]


def ground(
    domain: DomainDef,
    problem: ProblemDef,
    max_actions: int | None = DEFAULT_MAX_GROUND_ACTIONS,
    prune: bool = True,
) -> GroundProblem:
    """
    Enumerate every type-consistent binding of every schema.

    With ``prune`` on, bindings whose static preconditions can never hold
    (a positive static atom absent from the initial state, or a negative one
    present in it) are dropped; static atoms never change, so the reachable
    state space is the same either way.
    """
    if problem.domain_name != domain.name:
        raise GroundingError(f"problem is for domain '{problem.domain_name}', not '{domain.name}'")

    objects = sorted(problem.objects, key=lambda o: o.name)
    by_type: dict[str, list[str]] = {OBJECT_TYPE: [o.name for o in objects]}
    for obj in objects:
        if obj.type != OBJECT_TYPE:
            by_type.setdefault(obj.type, []).append(obj.name)

    if max_actions is not None:
        sizes = {schema.name: prod(len(c) for c in _candidates(schema, by_type)) for schema in domain.action_schemas}
        if sum(sizes.values()) > max_actions:
            worst = max(sizes, key=sizes.get)
            raise GroundingError(
                f"grounding would create up to {sum(sizes.values())} actions (cap {max_actions}); "
                f"schema '{worst}' alone contributes {sizes[worst]}"
            )

    static = _static_predicates(domain)
    init = problem.init
    raw: list[tuple[ActionSchema, tuple[str, ...], list[Atom], list[Atom], list[Atom], list[Atom]]] = []
    pruned = 0
    for schema in domain.action_schemas:
        names = [param.name for param in schema.params]
        object_positions = schema.object_param_indices
        for values in product(*_candidates(schema, by_type)):
            if object_positions:
                bound = [values[i] for i in object_positions]
                if len(set(bound)) != len(bound):
                    continue
            binding = dict(zip(names, values))
            pos = [_substitute(lit.atom, binding) for lit in schema.precondition if lit.positive]
            neg = [_substitute(lit.atom, binding) for lit in schema.precondition if not lit.positive]
            if prune and (
                any(a.predicate in static and a not in init for a in pos)
                or any(a.predicate in static and a in init for a in neg)
            ):
                pruned += 1
                continue
            adds = [_substitute(atom, binding) for atom in schema.add_effects]
            dels = [_substitute(atom, binding) for atom in schema.del_effects]
            raw.append((schema, tuple(values), pos, neg, adds, dels))

    universe = set(init)
    universe.update(lit.atom for lit in problem.goal)
    for _, _, pos, neg, adds, dels in raw:
        universe.update(pos, neg, adds, dels)
    atoms = tuple(sorted(universe, key=str))
    index = {atom: i for i, atom in enumerate(atoms)}

    actions = []
    for schema, values, pos, neg, adds, dels in raw:
        add_mask = _bits(index[a] for a in adds)
        actions.append(GroundAction(
            index=len(actions),
            schema_name=schema.name,
            args=values,
            o_a=tuple(values[i] for i in schema.object_param_indices),
            pre_pos=_bits(index[a] for a in pos),
            pre_neg=_bits(index[a] for a in neg),
            adds=add_mask,
            dels=_bits(index[a] for a in dels) & ~add_mask,
        ))

    goal = Goal(
        pos=_bits(index[lit.atom] for lit in problem.goal if lit.positive),
        neg=_bits(index[lit.atom] for lit in problem.goal if not lit.positive),
        literals=problem.goal,
    )
    logger.debug(
        "Grounded %s/%s: %d atoms, %d actions, %d pruned",
        domain.name, problem.name, len(atoms), len(actions), pruned,
    )
    return GroundProblem(
        domain=domain,
        problem=problem,
        atoms=atoms,
        actions=tuple(actions),
        init=_bits(index[a] for a in init),
        goal=goal,
        pruned=pruned,
    )


def load_ground_problem(
    domain_path: str | Path,
    problem_path: str | Path,
    tool_actions: Iterable[str] = (),
    max_actions: int | None = DEFAULT_MAX_GROUND_ACTIONS,
) -> GroundProblem:
    domain = parse_domain_file(domain_path, tool_actions)
    problem = parse_problem_file(problem_path, domain)
    return ground(domain, problem, max_actions=max_actions)
