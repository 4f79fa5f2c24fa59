import itertools
from collections.abc import Iterable, Iterator, Sequence
from logging import getLogger

import numpy as np

from cvarselect.exceptions import (
    GenerationException,
    InstanceTooLargeException,
    MatroidViolationException,
    ParameterException,
)
from cvarselect.models.casestudies import CoverageInstance, ExactScenario
from cvarselect.models.core import ElementSet, GroundSet, UniformMatroid
from cvarselect.services import streams
from cvarselect.services.risk import BaseScenarioTable
from cvarselect.settings.config import config

logger = getLogger(__name__)

Rectangle = tuple[int, int, int, int]


def _line_cells(x0: int, y0: int, x1: int, y1: int) -> Iterator[tuple[int, int]]:
    """Bresenham cells from (x0, y0) to (x1, y1), both ends included."""
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    while True:
        yield x0, y0
        if x0 == x1 and y0 == y1:
            return
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def obstacle_cells(
    *, width: int, height: int, rectangles: Sequence[Rectangle]
) -> list[int]:
    cells: set[int] = set()
    for x0, y0, x1, y1 in rectangles:
        for x in range(max(0, x0), min(width - 1, x1) + 1):
            for y in range(max(0, y0), min(height - 1, y1) + 1):
                cells.add(y * width + x)
    return sorted(cells)


def visible_cells(*, width: int, height: int, obstacles: Iterable[int], cell: int) -> list[int]:
    blocked = set(obstacles)
    cx, cy = cell % width, cell // width
    visible = []
    for target in range(width * height):
        if target in blocked:
            continue
        tx, ty = target % width, target // width
        if all(
            y * width + x not in blocked for x, y in _line_cells(cx, cy, tx, ty)
        ):
            visible.append(target)
    return visible


def coverage_build(
    *,
    width: int,
    height: int,
    obstacles: Sequence[Rectangle],
    candidates: Sequence[int],
    budget: int,
    seed: int,
) -> CoverageInstance:
    blocked = obstacle_cells(width=width, height=height, rectangles=obstacles)
    free_area = width * height - len(blocked)
    footprints = [
        visible_cells(width=width, height=height, obstacles=blocked, cell=c)
        for c in candidates
    ]
    return CoverageInstance(
        seed=seed,
        width=width,
        height=height,
        obstacles=blocked,
        candidates=list(candidates),
        footprints=footprints,
        success_prob=[1.0 - len(f) / free_area for f in footprints],
        budget=budget,
    )


def coverage_generate(
    *,
    width: int,
    height: int,
    obstacles: Sequence[Rectangle],
    n_candidates: int,
    seed: int,
    budget: int = config.COVERAGE_BUDGET,
) -> CoverageInstance:
    if n_candidates < 1 or not 1 <= budget <= n_candidates:
        raise ParameterException(
            f"need 1 <= budget <= candidates, got {budget} and {n_candidates}"
        )

    blocked = set(obstacle_cells(width=width, height=height, rectangles=obstacles))
    free = [c for c in range(width * height) if c not in blocked]
    if len(free) < n_candidates:
        raise GenerationException(
            f"{len(free)} free cells cannot host {n_candidates} candidates"
        )

    rng = streams.stream(seed=seed, tag=streams.COVERAGE_INSTANCE)
    picks = rng.choice(len(free), size=n_candidates, replace=False)
    return coverage_build(
        width=width,
        height=height,
        obstacles=obstacles,
        candidates=[free[int(i)] for i in picks],
        budget=budget,
        seed=seed,
    )


def coverage_ground_set(instance: CoverageInstance) -> GroundSet:
    labels = []
    for i, cell in enumerate(instance.candidates):
        x, y = instance.cell_xy(cell)
        labels.append(f"c{i}@{x},{y}")
    return GroundSet(size=len(instance.candidates), labels=labels)


def coverage_matroid(instance: CoverageInstance) -> UniformMatroid:
    return UniformMatroid(rank=instance.budget, ground_size=len(instance.candidates))


def coverage_gamma(instance: CoverageInstance) -> float:
    return float(instance.free_area)


def _members(instance: CoverageInstance, elements: ElementSet | Iterable[int]) -> list[int]:
    members = list(elements.members if isinstance(elements, ElementSet) else elements)
    if len(members) > instance.budget:
        raise MatroidViolationException(
            f"{len(members)} sensors exceed the budget of {instance.budget}"
        )
    if any(e < 0 or e >= len(instance.candidates) for e in members):
        raise MatroidViolationException(f"unknown candidate in {members}")
    return members


def alive_draws(
    *, instance: CoverageInstance, element: int, n_samples: int, seed: int
) -> np.ndarray:
    u = streams.uniforms(
        seed=seed, tag=streams.COVERAGE_ALIVE, keys=(element,), n=n_samples
    )
    return u < instance.success_prob[element]


def coverage_utility(
    *,
    instance: CoverageInstance,
    elements: ElementSet | Iterable[int],
    scenario: int,
    seed: int | None = None,
) -> float:
    seed = instance.seed if seed is None else seed
    covered: set[int] = set()
    for e in _members(instance, elements):
        alive = alive_draws(
            instance=instance, element=e, n_samples=scenario + 1, seed=seed
        )
        if alive[scenario]:
            covered.update(instance.footprints[e])
    return float(len(covered))


def coverage_exact_scenarios(
    *,
    instance: CoverageInstance,
    elements: ElementSet | Iterable[int],
    max_elements: int = config.EXACT_MAX_ELEMENTS,
) -> list[ExactScenario]:
    """Every alive/dead outcome of the selected sensors.

    Outcome ``b`` has sensor ``t`` dead iff bit ``t`` of ``b`` is set, so
    the all-alive outcome comes first.
    """
    members = _members(instance, elements)
    if len(members) > max_elements:
        raise InstanceTooLargeException(
            f"{len(members)} sensors exceed the exact enumeration limit {max_elements}"
        )

    outcomes = []
    for dead in itertools.product((False, True), repeat=len(members)):
        probability = 1.0
        covered: set[int] = set()
        # bit t is the t-th member, least significant first
        for e, is_dead in zip(members, reversed(dead)):
            p = instance.success_prob[e]
            probability *= (1.0 - p) if is_dead else p
            if not is_dead:
                covered.update(instance.footprints[e])
        outcomes.append(ExactScenario(probability=probability, value=float(len(covered))))
    return outcomes


class CoverageScenarioTable(BaseScenarioTable):
    def __init__(
        self, *, instance: CoverageInstance, n_samples: int, seed: int | None = None
    ):
        seed = instance.seed if seed is None else seed
        super().__init__(n_samples=n_samples, seed=seed)
        self.instance = instance
        n_cells = instance.width * instance.height
        self.masks = np.zeros((len(instance.candidates), n_cells), dtype=np.int64)
        for e, footprint in enumerate(instance.footprints):
            self.masks[e, footprint] = 1
        self.alive = self._alive_matrix()

    def _alive_matrix(self) -> np.ndarray:
        return np.stack(
            [
                alive_draws(
                    instance=self.instance,
                    element=e,
                    n_samples=self.n_samples,
                    seed=self.seed,
                )
                for e in range(len(self.instance.candidates))
            ]
        )

    @property
    def ground_size(self) -> int:
        return len(self.instance.candidates)

    def _compute(self, *, elements: frozenset[int]) -> np.ndarray:
        members = sorted(elements)
        hits = self.alive[members].T.astype(np.int64) @ self.masks[members]
        return (hits > 0).sum(axis=1).astype(float)


class CoverageExactTable(CoverageScenarioTable):
    """All 2^N alive patterns of the candidates, weighted by probability."""

    def __init__(
        self,
        *,
        instance: CoverageInstance,
        max_elements: int = config.EXACT_MAX_ELEMENTS,
    ):
        n = len(instance.candidates)
        if n > max_elements:
            raise InstanceTooLargeException(
                f"{n} candidates exceed the exact enumeration limit {max_elements}"
            )
        codes = np.arange(2**n)
        # bit e set means candidate e is dead
        self._dead = (codes[None, :] >> np.arange(n)[:, None]) & 1 == 1
        p = np.asarray(instance.success_prob)[:, None]
        self._weights = np.where(self._dead, 1.0 - p, p).prod(axis=0)
        super().__init__(instance=instance, n_samples=2**n, seed=instance.seed)

    def _alive_matrix(self) -> np.ndarray:
        return ~self._dead

    @property
    def weights(self) -> np.ndarray:
        return self._weights
