"""
File driven stand-ins for the perception stack.

Scenarios carry the confidences a shape/material classifier would report
plus boolean attachment capabilities. ``sense`` returns them as read, or
perturbed by the scenario's seeded noise model.
"""
from __future__ import annotations

import json
import logging
import math
import random
from itertools import permutations
from pathlib import Path
from typing import Iterable, Sequence

from pydantic import BaseModel, ValidationError

from planner.exceptions import ConfigurationError, ContractError, ScenarioError
from planner.features import feature_score
from planner.schemas import (
    MATERIALS,
    GroundTruth,
    LibraryFile,
    LibraryObject,
    NoiseSpec,
    ObjectProfile,
    ScenarioFile,
    ScoreParams,
    ToolRegistryFile,
    ToolSpec,
)
from planner.utils import TASK_TOOLS, library_path, tool_registry_path


logger = logging.getLogger(__name__)

OBJECTS_PER_CASE = 10
MAX_CASE_ATTEMPTS = 200
MAX_PROFILE_DRAWS = 50

AFFORDED_RANGE = (0.7, 0.95)
DISTRACTOR_RANGE = (0.0, 0.5)
TRUE_MATERIAL_RANGE = (0.75, 0.95)

ATTACH_FLAGS = ("pierceable", "can_grasp_others", "can_be_grasped", "has_magnet")


def _error_paths(exc: ValidationError) -> list[str]:
    return [".".join(str(part) for part in error["loc"]) or "<root>" for error in exc.errors()]


def _load(model: type[BaseModel], path: str | Path, error_cls: type[Exception]):
    text = Path(path).read_text(encoding="utf-8")
    try:
        return model.model_validate_json(text)
    except ValidationError as exc:
        paths = _error_paths(exc)
        details = "; ".join(f"{p}: {e['msg']}" for p, e in zip(paths, exc.errors()))
        if error_cls is ScenarioError:
            raise ScenarioError(f"{path}: {details}", paths=paths) from exc
        raise error_cls(f"{path}: {details}") from exc


def load_scenario(path: str | Path) -> ScenarioFile:
    return _load(ScenarioFile, path, ScenarioError)


def dump_scenario(scenario: ScenarioFile, path: str | Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = scenario.model_dump(mode="json")
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_tool_registry(path: str | Path | None = None) -> dict[str, ToolSpec]:
    registry = _load(ToolRegistryFile, path or tool_registry_path(), ConfigurationError)
    return {spec.join_action_name: spec for spec in registry.tools}


def load_library(path: str | Path | None = None) -> list[LibraryObject]:
    return _load(LibraryFile, path or library_path(), ConfigurationError).objects


# ── Sensing ───────────────────────────────────────────────────────────────────

def _clamp(value: float) -> float:
    return min(1.0, max(0.0, value))


def _material_false_negative(profile: ObjectProfile, spec: ToolSpec, threshold: float) -> dict[str, float]:
    """Push every allowed-material confidence under the threshold, moving the mass elsewhere."""
    confidences = dict(profile.material_conf)
    removed = 0.0
    for material in spec.allowed_materials:
        current = confidences.get(material, 0.0)
        lowered = min(current, threshold / 2)
        removed += current - lowered
        confidences[material] = lowered
    spill = next((m for m in MATERIALS if m not in spec.allowed_materials), None)
    if spill is not None:
        confidences[spill] = confidences.get(spill, 0.0) + removed
    return confidences


def sense(
    scenario: ScenarioFile,
    noise_on: bool,
    seed: int | None = None,
    threshold: float = 0.6,
) -> dict[str, ObjectProfile]:
    """
    Profiles as the agent perceives them.

    With noise the result is a pure function of the scenario and the seed
    (``scenario.noise.seed`` unless ``seed`` is given).
    """
    profiles = scenario.profiles()
    noise = scenario.noise
    if not noise_on:
        return profiles

    rng = random.Random(f"{noise.seed if seed is None else seed}:{scenario.scenario_id}")
    truth = scenario.truth
    truth_spec = scenario.truth_spec
    sensed = {}
    for profile in scenario.objects:
        update = {}
        if noise.shape_jitter > 0:
            update["shape_conf"] = {
                role: _clamp(conf + rng.uniform(-noise.shape_jitter, noise.shape_jitter))
                for role, conf in sorted(profile.shape_conf.items())
            }
        if noise.attach_fn_rate > 0:
            for flag in ATTACH_FLAGS:
                if getattr(profile, flag) and rng.random() < noise.attach_fn_rate:
                    update[flag] = False
        if (
            profile.object_id == truth.action_part
            and noise.material_fn_rate > 0
            and rng.random() < noise.material_fn_rate
        ):
            update["material_conf"] = _material_false_negative(profile, truth_spec, threshold)
        sensed[profile.object_id] = profile.model_copy(update=update) if update else profile
    changed = sorted(k for k in sensed if sensed[k] is not profiles[k])
    if changed:
        logger.debug("Scenario %s: noise changed %s", scenario.scenario_id, ", ".join(changed))
    return sensed


# ── Generation ────────────────────────────────────────────────────────────────

def _attachable(head: LibraryObject, handle: LibraryObject) -> bool:
    if head.pierceable != handle.pierceable:
        return True
    if handle.can_grasp_others and head.can_be_grasped:
        return True
    return head.has_magnet and handle.has_magnet


def _constructible(head: LibraryObject, handle: LibraryObject, spec: ToolSpec) -> bool:
    return (
        head is not handle
        and spec.action_part_role in head.affords
        and spec.grasp_part_role in handle.affords
        and head.material in spec.allowed_materials
        and _attachable(head, handle)
    )


def _count_constructible(objects: Sequence[LibraryObject], specs: Sequence[ToolSpec]) -> int:
    return sum(
        _constructible(head, handle, spec)
        for spec in specs
        for head in objects
        for handle in objects
    )


def _floor4(value: float) -> float:
    return math.floor(value * 10_000) / 10_000


def _profile(rng: random.Random, obj: LibraryObject, object_id: str, roles: list[str]) -> ObjectProfile:
    shape = {}
    for role in roles:
        low, high = AFFORDED_RANGE if role in obj.affords else DISTRACTOR_RANGE
        shape[role] = _floor4(rng.uniform(low, high))
    true_conf = _floor4(rng.uniform(*TRUE_MATERIAL_RANGE))
    others = [m for m in MATERIALS if m != obj.material]
    weights = [rng.random() for _ in others]
    total = sum(weights) or 1.0
    material = {obj.material: true_conf}
    for name, weight in zip(others, weights):
        material[name] = _floor4((1.0 - true_conf) * weight / total)
    return ObjectProfile(
        object_id=object_id,
        name=obj.name,
        shape_conf=shape,
        material_conf=material,
        pierceable=obj.pierceable,
        can_grasp_others=obj.can_grasp_others,
        can_be_grasped=obj.can_be_grasped,
        has_magnet=obj.has_magnet,
        true_material=obj.material,
    )


def _truth_scores_best(
    objects: list[ObjectProfile], truth: tuple[str, str], target: ToolSpec, specs: list[ToolSpec]
) -> bool:
    """Whether the ground truth out-scores every other combination when sensors read true."""
    registry = {spec.join_action_name: spec for spec in specs}
    profiles = {profile.object_id: profile for profile in objects}
    params = ScoreParams()
    best = feature_score(0, target.join_action_name, truth, True, (), registry, profiles, params)
    return all(
        feature_score(0, action_name, pair, True, (), registry, profiles, params) < best
        for action_name in registry
        for pair in permutations(sorted(profiles), 2)
        if (pair, action_name) != (truth, target.join_action_name)
    )


def _generate_case(
    rng: random.Random,
    scenario_id: str,
    task_type: str,
    target: ToolSpec,
    specs: list[ToolSpec],
    library: list[LibraryObject],
    seed: int,
    n: int = OBJECTS_PER_CASE,
) -> ScenarioFile:
    candidates = [
        (head, handle)
        for head in library
        for handle in library
        if _constructible(head, handle, target)
    ]
    if not candidates:
        raise ScenarioError(f"library too small: no constructible {target.tool}")

    for _ in range(MAX_CASE_ATTEMPTS):
        head, handle = rng.choice(candidates)
        chosen = [head, handle]
        if _count_constructible(chosen, specs) != 1:
            continue
        pool = [obj for obj in library if obj is not head and obj is not handle]
        rng.shuffle(pool)
        for obj in pool:
            if len(chosen) == n:
                break
            if _count_constructible(chosen + [obj], specs) == 1:
                chosen.append(obj)
        if len(chosen) == n:
            break
    else:
        raise ScenarioError(
            f"library too small to build {n} objects with a unique {target.tool} combination"
        )

    rng.shuffle(chosen)
    roles = sorted({role for spec in specs for role in spec.roles})
    ids = {id(obj): f"obj{i}" for i, obj in enumerate(chosen)}
    truth = (ids[id(head)], ids[id(handle)])
    for _ in range(MAX_PROFILE_DRAWS):
        objects = [_profile(rng, obj, f"obj{i}", roles) for i, obj in enumerate(chosen)]
        if _truth_scores_best(objects, truth, target, specs):
            break
    else:
        raise ScenarioError(f"{scenario_id}: no profile draw lets the ground truth score best")
    return ScenarioFile(
        scenario_id=scenario_id,
        task_type=task_type,
        objects=objects,
        ground_truth=[GroundTruth(tool=target.tool, action_part=truth[0], grasp_part=truth[1])],
        tool_specs=specs,
        noise=NoiseSpec(seed=seed),
    )


def _task_specs(task_type: str, registry: dict[str, ToolSpec]) -> list[ToolSpec]:
    if task_type not in TASK_TOOLS:
        raise ConfigurationError(f"unknown task type '{task_type}'")
    by_tool = {spec.tool: spec for spec in registry.values()}
    try:
        return [by_tool[tool] for tool in TASK_TOOLS[task_type]]
    except KeyError as exc:
        raise ConfigurationError(f"tool '{exc.args[0]}' is missing from the tool registry") from None


def generate_benchmark(
    task_type: str,
    tool: str,
    cases: int,
    seed: int,
    library: list[LibraryObject] | None = None,
    registry: dict[str, ToolSpec] | None = None,
) -> list[ScenarioFile]:
    registry = registry if registry is not None else load_tool_registry()
    library = library if library is not None else load_library()
    specs = {spec.tool: spec for spec in _task_specs(task_type, registry)}
    if tool not in specs:
        raise ConfigurationError(f"tool '{tool}' is not used in {task_type} tasks")
    target = specs[tool]
    rng = random.Random(f"benchmark:{task_type}:{tool}:{seed}")
    return [
        _generate_case(rng, f"{task_type}_{tool}_{case:02d}", task_type, target, [target], library, seed)
        for case in range(cases)
    ]


def generate_adaptability(
    task_type: str,
    cases: int,
    seed: int,
    library: list[LibraryObject] | None = None,
    registry: dict[str, ToolSpec] | None = None,
) -> list[ScenarioFile]:
    """Scenarios offering both tools of a task where only one can be built; the buildable tool alternates."""
    registry = registry if registry is not None else load_tool_registry()
    library = library if library is not None else load_library()
    specs = _task_specs(task_type, registry)
    rng = random.Random(f"adaptability:{task_type}:{seed}")
    return [
        _generate_case(rng, f"{task_type}_adapt_{case:02d}", task_type, specs[case % 2], specs, library, seed)
        for case in range(cases)
    ]


def inject_false_negatives(scenarios: Sequence[ScenarioFile], count: int, seed: int) -> list[ScenarioFile]:
    """Copy of ``scenarios`` where ``count`` of them always misread their ground-truth action part's material."""
    if count > len(scenarios):
        raise ContractError(f"cannot corrupt {count} of {len(scenarios)} scenarios")
    picked = set(random.Random(f"false-negatives:{seed}").sample(range(len(scenarios)), count))
    result = []
    for i, scenario in enumerate(scenarios):
        if i in picked:
            noise = scenario.noise.model_copy(update={"material_fn_rate": 1.0})
            scenario = scenario.model_copy(update={"noise": noise})
        result.append(scenario)
    return result


def false_negative_ids(scenarios: Iterable[ScenarioFile]) -> list[str]:
    return [s.scenario_id for s in scenarios if s.noise.material_fn_rate >= 1.0]
