from typing import Annotated, Literal

from pydantic import BaseModel, Field, model_validator

MOD_SCHEMA = "mod-instance-v1"
COVERAGE_SCHEMA = "coverage-instance-v1"


class Point(BaseModel):
    x: float
    y: float


class ModInstance(BaseModel):
    version: Literal["mod-instance-v1"] = MOD_SCHEMA
    seed: int = Field(ge=0)
    n_demands: int = Field(ge=1)
    n_vehicles: int = Field(ge=1)
    demands: list[Point]
    vehicles: list[Point]
    # [demand][vehicle]
    mean_eff: list[list[float]]
    eff_halfwidth: list[list[float]]

    @model_validator(mode="after")
    def check_shapes(self):
        if self.n_vehicles < self.n_demands:
            raise ValueError("need at least as many vehicles as demands")
        if len(self.demands) != self.n_demands or len(self.vehicles) != self.n_vehicles:
            raise ValueError("position lists do not match the declared sizes")
        for matrix in (self.mean_eff, self.eff_halfwidth):
            if len(matrix) != self.n_demands or any(
                len(row) != self.n_vehicles for row in matrix
            ):
                raise ValueError("efficiency matrices must be n_demands x n_vehicles")
        if any(v <= 0.0 for row in self.mean_eff for v in row):
            raise ValueError("mean efficiencies must be positive")
        if any(v < 0.0 for row in self.eff_halfwidth for v in row):
            raise ValueError("half-widths must be non-negative")
        return self

    @property
    def n_pairs(self) -> int:
        return self.n_demands * self.n_vehicles

    def pair_id(self, *, demand: int, vehicle: int) -> int:
        return vehicle * self.n_demands + demand

    def pair(self, element: int) -> tuple[int, int]:
        """(demand, vehicle) of a pair id."""
        return element % self.n_demands, element // self.n_demands

    def interval(self, *, demand: int, vehicle: int) -> tuple[float, float]:
        mean = self.mean_eff[demand][vehicle]
        half = self.eff_halfwidth[demand][vehicle]
        return max(0.0, mean - half), mean + half


class CoverageInstance(BaseModel):
    version: Literal["coverage-instance-v1"] = COVERAGE_SCHEMA
    seed: int = Field(ge=0)
    width: int = Field(ge=1)
    height: int = Field(ge=1)
    # cell index = y * width + x
    obstacles: list[int]
    candidates: list[int] = Field(min_length=1)
    footprints: list[list[int]]
    success_prob: list[float]
    budget: int = Field(ge=1)

    @model_validator(mode="after")
    def check_cells(self):
        n_cells = self.width * self.height
        blocked = set(self.obstacles)
        if any(c < 0 or c >= n_cells for c in blocked):
            raise ValueError("obstacle cell outside the grid")
        if len(self.footprints) != len(self.candidates) or len(
            self.success_prob
        ) != len(self.candidates):
            raise ValueError("one footprint and probability per candidate")
        for cell, footprint in zip(self.candidates, self.footprints):
            if cell in blocked or not 0 <= cell < n_cells:
                raise ValueError(f"candidate cell {cell} is not free")
            if any(c in blocked or not 0 <= c < n_cells for c in footprint):
                raise ValueError(f"footprint of cell {cell} leaves the free space")
        if any(not 0.0 <= p <= 1.0 for p in self.success_prob):
            raise ValueError("success probabilities must lie in [0, 1]")
        if self.budget > len(self.candidates):
            raise ValueError("budget exceeds the number of candidates")
        return self

    @property
    def free_area(self) -> int:
        return self.width * self.height - len(set(self.obstacles))

    def cell_xy(self, cell: int) -> tuple[int, int]:
        return cell % self.width, cell // self.width


Instance = Annotated[ModInstance | CoverageInstance, Field(discriminator="version")]


class ExactScenario(BaseModel):
    probability: float = Field(ge=0.0, le=1.0)
    value: float = Field(ge=0.0)
