from pathlib import Path
from typing import Annotated, Literal

from pydantic import BaseModel, Field, field_validator

from cvarselect.models.risk import RiskParams
from cvarselect.models.sga import Certificate, CurvatureReport, SgaResult
from cvarselect.models.streetnet import OtaMode, StreetNetwork

Alpha = Annotated[float, Field(gt=0.0, le=1.0)]
TriggerRatio = Annotated[float, Field(gt=0.0, lt=1.0)]


class ExperimentConfig(BaseModel):
    study: Literal["mod-offline", "coverage", "ota-compare", "solve"]
    seed: int = Field(ge=0)
    alphas: list[Alpha] = Field(min_length=1)
    n_samples: int | None = Field(default=None, ge=1)
    epsilon: float | None = Field(default=None, gt=0.0)
    delta_conf: float | None = Field(default=None, gt=0.0, lt=1.0)
    gamma_cap: float | None = Field(default=None, gt=0.0)
    delta_step: float | None = Field(default=None, gt=0.0)
    gamma_triggers: list[TriggerRatio] = []
    mode: OtaMode = OtaMode.OTA_STREET
    scales: list[tuple[int, int]] = []
    trials: int = Field(default=1, ge=1)
    workers: int = Field(default=1, ge=1, exclude=True)
    instance_path: Path | None = None
    network_path: Path | None = None
    exact: bool = False
    plot_data: bool = False
    timings: bool = False
    output_dir: Path = Field(exclude=True)

    @field_validator("instance_path", "network_path")
    @classmethod
    def check_exists(cls, path: Path | None) -> Path | None:
        if path is not None and not path.is_file():
            raise ValueError(f"{path} does not exist")
        return path


class GenerateConfig(BaseModel):
    kind: Literal["mod", "coverage", "city"]
    seed: int = Field(ge=0)
    n_demands: int | None = Field(default=None, ge=1)
    n_vehicles: int | None = Field(default=None, ge=1)
    n_candidates: int | None = Field(default=None, ge=1)
    budget: int | None = Field(default=None, ge=1)
    rows: int | None = Field(default=None, ge=2)
    cols: int | None = Field(default=None, ge=2)
    diagonals: int = Field(default=0, ge=0)
    output_dir: Path = Field(exclude=True)


# dto models
class SolveReportDTO(BaseModel):
    instance: str
    n_samples: int
    exact: bool
    params: RiskParams
    result: SgaResult
    certificate: Certificate
    curvature: CurvatureReport
    eval_bound: int


class AlphaRun(BaseModel):
    params: RiskParams
    result: SgaResult
    curvature: CurvatureReport
    certificate: Certificate
    eval_bound: int
    wall_time: float | None = Field(default=None, exclude=True)


class OtaTask(BaseModel):
    network: StreetNetwork
    vehicles: list[int]
    demands: list[int]
    trial: int
    seed: int
    mode: OtaMode
    gamma_trigger: float
    alpha: float
