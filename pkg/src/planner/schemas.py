"""
File schemas: object profiles, tool specs, scenarios and the object library.
"""
from __future__ import annotations

from typing import Annotated, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


MATERIALS: tuple[str, ...] = ("metal", "wood", "plastic", "paper", "foam")
Material = Literal["metal", "wood", "plastic", "paper", "foam"]
Confidence = Annotated[float, Field(ge=0.0, le=1.0)]

FORMAT_VERSION = 1
HANDLE_ROLE = "handle"


class ObjectProfile(BaseModel):
    """What the perception stack reports about one object."""
    model_config = ConfigDict(frozen=True)

    object_id: str
    name: str = ""
    shape_conf: dict[str, Confidence] = Field(default_factory=dict)
    material_conf: dict[Material, Confidence] = Field(default_factory=dict)
    pierceable: bool = False
    can_grasp_others: bool = False
    can_be_grasped: bool = False
    has_magnet: bool = False
    true_material: Optional[Material] = None

    @field_validator("material_conf")
    @classmethod
    def at_most_one(cls, value: dict[str, float]) -> dict[str, float]:
        if sum(value.values()) > 1.0 + 1e-9:
            raise ValueError(f"material confidences sum to {sum(value.values()):.6f} > 1")
        return value


class ToolSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    tool: str
    task_type: str
    join_action_name: str
    action_part_role: str
    grasp_part_role: str = HANDLE_ROLE
    allowed_materials: tuple[Material, ...] = Field(min_length=1)
    task_action: str = ""
    parts: Literal[2] = 2

    @field_validator("allowed_materials")
    @classmethod
    def canonical_order(cls, value: tuple[str, ...]) -> tuple[str, ...]:
        return tuple(sorted(set(value), key=MATERIALS.index))

    @property
    def roles(self) -> tuple[str, str]:
        return self.action_part_role, self.grasp_part_role


class ToolRegistryFile(BaseModel):
    format_version: Literal[1] = FORMAT_VERSION
    tools: list[ToolSpec] = Field(min_length=1)

    @model_validator(mode="after")
    def unique_actions(self) -> "ToolRegistryFile":
        names = [spec.join_action_name for spec in self.tools]
        if len(names) != len(set(names)):
            raise ValueError("join action names must be unique")
        return self


class ScoreParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    lambda1: float = Field(1.0, ge=0.0)
    lambda2: float = Field(1.0, ge=0.0)
    t: float = Field(0.6, gt=0.0, lt=1.0)


class NoiseSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    seed: int = 0
    material_fn_rate: float = Field(0.0, ge=0.0, le=1.0)
    attach_fn_rate: float = Field(0.0, ge=0.0, le=1.0)
    shape_jitter: float = Field(0.0, ge=0.0, le=0.5)


class GroundTruth(BaseModel):
    model_config = ConfigDict(frozen=True)

    tool: str
    action_part: str
    grasp_part: str

    @property
    def pair(self) -> tuple[str, str]:
        return self.action_part, self.grasp_part


class ScenarioFile(BaseModel):
    format_version: Literal[1] = FORMAT_VERSION
    scenario_id: str
    task_type: str
    objects: list[ObjectProfile] = Field(min_length=2)
    ground_truth: list[GroundTruth]
    tool_specs: list[ToolSpec] = Field(min_length=1)
    noise: NoiseSpec = Field(default_factory=NoiseSpec)

    @property
    def n(self) -> int:
        return len(self.objects)

    @property
    def truth(self) -> GroundTruth:
        return self.ground_truth[0]

    @property
    def truth_spec(self) -> ToolSpec:
        return self.spec_for_tool(self.truth.tool)

    def spec_for_tool(self, tool: str) -> ToolSpec:
        for spec in self.tool_specs:
            if spec.tool == tool:
                return spec
        raise KeyError(tool)

    def profiles(self) -> dict[str, ObjectProfile]:
        return {profile.object_id: profile for profile in self.objects}

    def registry(self) -> dict[str, ToolSpec]:
        return {spec.join_action_name: spec for spec in self.tool_specs}

    @model_validator(mode="after")
    def consistent(self) -> "ScenarioFile":
        from planner.features import can_attach, material_fit

        ids = [profile.object_id for profile in self.objects]
        if len(ids) != len(set(ids)):
            raise ValueError("object ids must be unique")
        if len(self.ground_truth) != 1:
            raise ValueError(f"exactly one ground truth combination is required, got {len(self.ground_truth)}")

        roles = {role for spec in self.tool_specs for role in spec.roles}
        for profile in self.objects:
            unknown = set(profile.shape_conf) - roles
            if unknown:
                raise ValueError(f"{profile.object_id}: unknown part roles {sorted(unknown)}")

        truth = self.truth
        try:
            spec = self.spec_for_tool(truth.tool)
        except KeyError:
            raise ValueError(f"ground truth tool '{truth.tool}' has no tool spec") from None
        for object_id in truth.pair:
            if object_id not in ids:
                raise ValueError(f"ground truth object '{object_id}' is not in the scenario")
        if truth.action_part == truth.grasp_part:
            raise ValueError("ground truth parts must be distinct objects")
        profiles = self.profiles()
        if can_attach(truth.pair, spec, profiles) is None:
            raise ValueError("ground truth pair cannot be attached")
        if material_fit(truth.pair, spec, profiles, ScoreParams()) == float("-inf"):
            raise ValueError("ground truth action part fails the material constraint")
        return self


class LibraryObject(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    material: Material
    pierceable: bool = False
    can_grasp_others: bool = False
    can_be_grasped: bool = False
    has_magnet: bool = False
    affords: tuple[str, ...] = ()


class LibraryFile(BaseModel):
    format_version: Literal[1] = FORMAT_VERSION
    objects: list[LibraryObject] = Field(min_length=1)
