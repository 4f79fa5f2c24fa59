from pydantic import BaseModel, Field, model_validator


class RiskParams(BaseModel):
    alpha: float = Field(gt=0.0, le=1.0)
    gamma_cap: float = Field(gt=0.0)
    delta_step: float = Field(gt=0.0)
    # sample sizing; epsilon 0 means exact expectation
    epsilon: float | None = Field(default=None, ge=0.0)
    delta_conf: float | None = Field(default=None, gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def check_step(self):
        if self.delta_step > self.gamma_cap:
            raise ValueError("delta_step cannot exceed gamma_cap")
        return self


class CvarEstimate(BaseModel):
    var: float
    cvar: float
    tail_count: int = Field(ge=1)
