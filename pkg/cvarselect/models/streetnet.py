from enum import StrEnum
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

STREETNET_SCHEMA = "streetnet-v1"


class StreetNode(BaseModel):
    id: int = Field(ge=0)
    x: float
    y: float


class StreetEdge(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    source: int = Field(alias="from", ge=0)
    target: int = Field(alias="to", ge=0)
    len_m: float = Field(gt=0.0)
    maxv_mps: float = Field(gt=0.0)


class StreetNetwork(BaseModel):
    version: Literal["streetnet-v1"] = STREETNET_SCHEMA
    nodes: list[StreetNode] = Field(min_length=1)
    edges: list[StreetEdge]
    beta1: float = Field(gt=0.0)
    beta2: float = Field(gt=0.0)
    t_max_factor: float = Field(ge=0.0)

    @model_validator(mode="after")
    def check_graph(self):
        ids = {n.id for n in self.nodes}
        if len(ids) != len(self.nodes):
            raise ValueError("node ids must be unique")
        seen: set[tuple[int, int]] = set()
        for edge in self.edges:
            if edge.source not in ids or edge.target not in ids:
                raise ValueError(f"edge {edge.source}->{edge.target} uses an unknown node")
            if edge.source == edge.target:
                raise ValueError(f"self loop at node {edge.source}")
            if (edge.source, edge.target) in seen:
                raise ValueError(f"duplicate edge {edge.source}->{edge.target}")
            seen.add((edge.source, edge.target))
        return self


class StreetPath(BaseModel):
    nodes: list[int] = Field(min_length=1)
    length: float = Field(ge=0.0)
    degree: int = Field(ge=0)


class Unreachable(BaseModel):
    source: int
    target: int


class WaitModel(BaseModel):
    """Normal(0, scale^2) restricted to [0, cap]."""

    model_config = ConfigDict(frozen=True)

    node: int
    scale: float = Field(ge=0.0)
    cap: float = Field(ge=0.0)


class Placement(BaseModel):
    vehicles: list[int]
    demands: list[int]


class OtaMode(StrEnum):
    OTA_STREET = "ota-street"
    OTA_GENERAL = "ota-general"
    OFFLINE = "offline"
    ALL_STEP = "all-step"


class TriggerReason(StrEnum):
    DOMINANCE = "dominance"
    STARVATION = "starvation"
    EVERY_STEP = "every-step"


class VehicleState(BaseModel):
    vehicle: int
    node: int
    # set while the vehicle is committed to an edge
    edge: tuple[int, int] | None = None
    fraction: float = 0.0
    edge_remaining_m: float = 0.0
    demand: int | None = None
    remaining_length: float | None = None
    remaining_degree: int | None = None


class OtaEvent(BaseModel):
    step: int
    t_step: float
    clock: float
    vehicles: list[VehicleState]
    # per-vehicle time to next node before the step, None when idle
    t_next: list[float | None]
    reached: list[int]
    # (demand, vehicle, dominated vehicle) triples seen at the check
    dominance: list[tuple[int, int, int]] = []
    trigger_reason: TriggerReason | None = None
    forced_skip: bool = False
    triggered: bool = False


class AssignmentSnapshot(BaseModel):
    step: int
    # vehicle -> demand index
    assignment: list[int | None]


class OtaRun(BaseModel):
    mode: OtaMode
    alpha: float
    gamma_trigger: float
    seed: int
    vehicles: list[int]
    demands: list[int]
    assignments: list[AssignmentSnapshot]
    trigger_steps: list[int]
    step_intervals: list[float]
    arrival_time: float
    assignment_count: int
    completed: bool
    events: list[OtaEvent]
    wall_time: float | None = Field(default=None, exclude=True)
