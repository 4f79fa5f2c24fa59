from typing import Annotated, Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

ElementId = Annotated[int, Field(ge=0)]


class GroundSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    size: int = Field(ge=1)
    labels: list[str] | None = None

    @model_validator(mode="after")
    def check_labels(self):
        if self.labels is not None and len(self.labels) != self.size:
            raise ValueError("labels must have exactly one entry per element")
        return self


class UniformMatroid(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["uniform"] = "uniform"
    rank: int = Field(ge=1)
    ground_size: int = Field(ge=1)

    @model_validator(mode="after")
    def check_rank(self):
        if self.rank > self.ground_size:
            raise ValueError("rank cannot exceed the ground set size")
        return self


class PartitionMatroid(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["partition"] = "partition"
    # element -> block index
    blocks: list[int] = Field(min_length=1)
    caps: list[Annotated[int, Field(ge=1)]] = Field(min_length=1)

    @model_validator(mode="after")
    def check_blocks(self):
        used = set(self.blocks)
        if any(b < 0 or b >= len(self.caps) for b in used):
            raise ValueError("block index out of range")
        if len(used) != len(self.caps):
            raise ValueError("every block must own at least one element")
        return self

    @property
    def ground_size(self) -> int:
        return len(self.blocks)


Matroid = Annotated[UniformMatroid | PartitionMatroid, Field(discriminator="kind")]


class ElementSet(BaseModel):
    """Distinct elements in pick order."""

    model_config = ConfigDict(frozen=True)

    members: list[ElementId] = []

    @model_validator(mode="after")
    def check_distinct(self):
        if len(set(self.members)) != len(self.members):
            raise ValueError("elements must be distinct")
        return self

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, element: object) -> bool:
        return element in self.members

    def as_frozenset(self) -> frozenset[int]:
        return frozenset(self.members)

    def with_element(self, element: int) -> "ElementSet":
        return ElementSet(members=[*self.members, element])


class ElementMarginal(BaseModel):
    element: ElementId
    marginal: float
    singleton: float


class Curvature(BaseModel):
    value: float = Field(ge=0.0, le=1.0)
    marginals: list[ElementMarginal]
    dropped: list[ElementId] = []


class BruteForceOptimum(BaseModel):
    selected: ElementSet
    tau: float
    value: float
    evaluations: int
