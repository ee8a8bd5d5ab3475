"""
Feature score of a tool construction step.

Given the ordered objects O_a = (action part, grasp part) of a join action,
the score combines how well the objects' shapes fit the two part roles, a
hard material constraint on the action part and a hard attachment
constraint. Without sensor trust only combinations previously rejected by
the hard constraints get a (shape only) score.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from itertools import permutations
from math import inf
from typing import Iterable, Iterator, Mapping

from planner.exceptions import ConfigurationError, ContractError
from planner.grounding import GroundAction, GroundProblem
from planner.schemas import ObjectProfile, ScoreParams, ToolSpec


logger = logging.getLogger(__name__)

AFFORDANCE_LEVEL = 0.6

Profiles = Mapping[str, ObjectProfile]
Registry = Mapping[str, ToolSpec]


class AttachmentKind(str, Enum):
    PIERCE = "pierce"
    GRASP = "grasp"
    MAGNETIC = "magnetic"


def _profile(object_id: str, profiles: Profiles) -> ObjectProfile:
    try:
        return profiles[object_id]
    except KeyError:
        raise ContractError(f"no profile for object '{object_id}'") from None


def _split(o_a: tuple[str, ...]) -> tuple[tuple[str, ...], str]:
    if len(o_a) < 2:
        raise ContractError(f"expected at least 2 objects, got {len(o_a)}")
    return tuple(o_a[:-1]), o_a[-1]


def _role_confidence(profile: ObjectProfile, role: str) -> float:
    try:
        return profile.shape_conf[role]
    except KeyError:
        logger.warning("Object %s has no confidence for part role '%s', using 0", profile.object_id, role)
        return 0.0


def shape_fit(o_a: tuple[str, ...], spec: ToolSpec, profiles: Profiles) -> float:
    action_parts, grasp_part = _split(o_a)
    score = 1.0
    for object_id in action_parts:
        score *= _role_confidence(_profile(object_id, profiles), spec.action_part_role)
    return score * _role_confidence(_profile(grasp_part, profiles), spec.grasp_part_role)


def material_fit(o_a: tuple[str, ...], spec: ToolSpec, profiles: Profiles, params: ScoreParams) -> float:
    """Best allowed-material confidence of the action part, or ``-inf`` below the threshold."""
    action_parts, _ = _split(o_a)
    z = 1.0
    for object_id in action_parts:
        confidences = _profile(object_id, profiles).material_conf
        z *= max(confidences.get(material, 0.0) for material in spec.allowed_materials)
    return z if z >= params.t else -inf


def can_attach(o_a: tuple[str, ...], spec: ToolSpec, profiles: Profiles) -> AttachmentKind | None:
    action_parts, grasp_part = _split(o_a)
    head = _profile(action_parts[0], profiles)
    handle = _profile(grasp_part, profiles)
    if head.pierceable != handle.pierceable:
        return AttachmentKind.PIERCE
    if handle.can_grasp_others and head.can_be_grasped:
        return AttachmentKind.GRASP
    if head.has_magnet and handle.has_magnet:
        return AttachmentKind.MAGNETIC
    return None


class RejectSet:
    """Combinations rejected by the material or attachment constraint while sensors were trusted."""

    def __init__(self, entries: Iterable[tuple[tuple[str, ...], str]] = ()):
        self._entries: set[tuple[tuple[str, ...], str]] = set(entries)

    def add(self, o_a: tuple[str, ...], action_name: str):
        self._entries.add((tuple(o_a), action_name))

    def update(self, entries: Iterable[tuple[tuple[str, ...], str]]):
        for o_a, action_name in entries:
            self.add(o_a, action_name)

    def frozen(self) -> frozenset[tuple[tuple[str, ...], str]]:
        return frozenset(self._entries)

    def __contains__(self, entry) -> bool:
        return entry in self._entries

    def __iter__(self) -> Iterator[tuple[tuple[str, ...], str]]:
        return iter(sorted(self._entries))

    def __len__(self) -> int:
        return len(self._entries)

    def __bool__(self) -> bool:
        return bool(self._entries)

    def __repr__(self) -> str:
        return f"RejectSet({sorted(self._entries)!r})"


def _spec_for(action_name: str, registry: Registry) -> ToolSpec:
    try:
        return registry[action_name]
    except KeyError:
        raise ConfigurationError(f"action '{action_name}' has object parameters but no tool spec") from None


def feature_score(
    state: int,
    action: GroundAction | str,
    o_a: tuple[str, ...],
    trust: bool,
    reject: RejectSet | frozenset | set,
    registry: Registry,
    profiles: Profiles,
    params: ScoreParams,
) -> float:
    if not o_a:
        return 0.0
    action_name = action if isinstance(action, str) else action.schema_name
    spec = _spec_for(action_name, registry)
    if not trust:
        if (tuple(o_a), action_name) in reject:
            return shape_fit(o_a, spec, profiles)
        return -inf
    if can_attach(o_a, spec, profiles) is None:
        return -inf
    material = material_fit(o_a, spec, profiles, params)
    if material == -inf:
        return -inf
    return params.lambda1 * shape_fit(o_a, spec, profiles) + params.lambda2 * material


@dataclass
class FeatureScorer:
    """Scoring callback for the search engine, bound to one set of sensed profiles."""
    registry: Registry
    profiles: Profiles
    params: ScoreParams = field(default_factory=ScoreParams)
    _trusted: dict = field(default_factory=dict, init=False, repr=False)

    def __call__(self, state: int, action: GroundAction, trust: bool, reject=frozenset()) -> float:
        if not action.o_a:
            return 0.0
        if not trust:
            return feature_score(state, action, action.o_a, False, reject, self.registry, self.profiles, self.params)
        key = (action.o_a, action.schema_name)
        if key not in self._trusted:
            self._trusted[key] = feature_score(
                state, action, action.o_a, True, (), self.registry, self.profiles, self.params
            )
        return self._trusted[key]

    def check_alignment(self, gp: GroundProblem):
        missing = sorted({a.schema_name for a in gp.tool_actions if a.schema_name not in self.registry})
        if missing:
            raise ConfigurationError(f"tool actions without a tool spec: {', '.join(missing)}")


def confident_pairs(
    registry: Registry,
    profiles: Profiles,
    params: ScoreParams | None = None,
    level: float = AFFORDANCE_LEVEL,
) -> list[tuple[tuple[str, str], str]]:
    """
    Ordered pairs, per join action, that pass both hard constraints and whose
    part-role confidences both reach ``level``.
    """
    params = params or ScoreParams()
    found = []
    for action_name in sorted(registry):
        spec = registry[action_name]
        for pair in permutations(sorted(profiles), 2):
            head, handle = profiles[pair[0]], profiles[pair[1]]
            if head.shape_conf.get(spec.action_part_role, 0.0) < level:
                continue
            if handle.shape_conf.get(spec.grasp_part_role, 0.0) < level:
                continue
            if feature_score(0, action_name, pair, True, (), registry, profiles, params) == -inf:
                continue
            found.append((pair, action_name))
    return found
