from pydantic import BaseModel, Field

from cvarselect.models.core import ElementSet


class TracePoint(BaseModel):
    tau: float
    selected: ElementSet
    h_value: float


class SgaResult(BaseModel):
    selected: ElementSet
    tau_g: float
    h_value: float
    trace: list[TracePoint]
    # utility vectors computed (cache misses); empty set excluded
    eval_count: int = Field(ge=0)
    # auxiliary-function queries made by the greedy loops
    oracle_calls: int = Field(ge=0)


class Certificate(BaseModel):
    k_f: float = Field(ge=0.0, le=1.0)
    additive_term: float = Field(ge=0.0)
    delta_step: float
    epsilon: float
    gamma_cap: float
    alpha: float
    optimum_upper_bound: float


class TauCurvature(BaseModel):
    tau: float
    value: float = Field(ge=0.0, le=1.0)


class CurvatureReport(BaseModel):
    mean_utility: float = Field(ge=0.0, le=1.0)
    per_tau: list[TauCurvature]
    conservative: float = Field(ge=0.0, le=1.0)
