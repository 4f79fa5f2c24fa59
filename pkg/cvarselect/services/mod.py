from collections.abc import Iterable
from logging import getLogger

import numpy as np
from scipy.spatial.distance import cdist

from cvarselect.exceptions import (
    GenerationException,
    MatroidViolationException,
    ParameterException,
)
from cvarselect.models.casestudies import ModInstance, Point
from cvarselect.models.core import ElementSet, GroundSet, PartitionMatroid
from cvarselect.services import streams
from cvarselect.services.core import matroid_contains
from cvarselect.services.risk import AssignmentTable
from cvarselect.settings.config import config

logger = getLogger(__name__)


def mod_generate(
    *,
    n_demands: int,
    n_vehicles: int,
    seed: int,
    side: float = config.MOD_SIDE,
    min_separation: float = config.MOD_MIN_SEPARATION,
    max_attempts: int = config.MOD_MAX_ATTEMPTS,
) -> ModInstance:
    if n_demands < 1 or n_vehicles < n_demands:
        raise ParameterException(
            f"need 1 <= demands <= vehicles, got {n_demands} and {n_vehicles}"
        )

    for attempt in range(max_attempts):
        rng = streams.stream(seed=seed, tag=streams.MOD_INSTANCE, keys=(attempt,))
        demands = rng.random((n_demands, 2)) * side
        vehicles = rng.random((n_vehicles, 2)) * side
        distance = cdist(demands, vehicles)
        if distance.min() < min_separation:
            continue

        mean = config.MOD_EFFICIENCY_SCALE / distance
        halfwidth = mean**2.5 / mean.max()
        if attempt:
            logger.debug("MoD positions accepted after %s redraws", attempt)
        return ModInstance(
            seed=seed,
            n_demands=n_demands,
            n_vehicles=n_vehicles,
            demands=[Point(x=float(x), y=float(y)) for x, y in demands],
            vehicles=[Point(x=float(x), y=float(y)) for x, y in vehicles],
            mean_eff=mean.tolist(),
            eff_halfwidth=halfwidth.tolist(),
        )

    raise GenerationException(
        f"no collision-free MoD layout after {max_attempts} attempts"
    )


def mod_ground_set(instance: ModInstance) -> GroundSet:
    labels = [
        f"d{demand}-v{vehicle}"
        for demand, vehicle in map(instance.pair, range(instance.n_pairs))
    ]
    return GroundSet(size=instance.n_pairs, labels=labels)


def mod_matroid(instance: ModInstance) -> PartitionMatroid:
    """Each vehicle serves at most one demand."""
    return PartitionMatroid(
        blocks=[instance.pair(e)[1] for e in range(instance.n_pairs)],
        caps=[1] * instance.n_vehicles,
    )


def mod_gamma(instance: ModInstance) -> float:
    upper = max(
        instance.interval(demand=i, vehicle=j)[1]
        for i in range(instance.n_demands)
        for j in range(instance.n_vehicles)
    )
    return instance.n_demands * upper


def efficiency_samples(
    *, instance: ModInstance, element: int, n_samples: int, seed: int
) -> np.ndarray:
    demand, vehicle = instance.pair(element)
    lower, upper = instance.interval(demand=demand, vehicle=vehicle)
    u = streams.uniforms(
        seed=seed, tag=streams.MOD_EFFICIENCY, keys=(element,), n=n_samples
    )
    return lower + u * (upper - lower)


def mod_utility(
    *,
    instance: ModInstance,
    elements: ElementSet | Iterable[int],
    scenario: int,
    seed: int | None = None,
) -> float:
    members = list(elements.members if isinstance(elements, ElementSet) else elements)
    if not matroid_contains(matroid=mod_matroid(instance), elements=members):
        raise MatroidViolationException(f"a vehicle is assigned twice in {members}")

    seed = instance.seed if seed is None else seed
    best: dict[int, float] = {}
    for e in members:
        demand, _ = instance.pair(e)
        sample = float(
            efficiency_samples(
                instance=instance, element=e, n_samples=scenario + 1, seed=seed
            )[scenario]
        )
        best[demand] = max(best.get(demand, 0.0), sample)
    return float(sum(best[d] for d in sorted(best)))


class ModScenarioTable(AssignmentTable):
    def __init__(self, *, instance: ModInstance, n_samples: int, seed: int | None = None):
        seed = instance.seed if seed is None else seed
        samples = np.stack(
            [
                efficiency_samples(
                    instance=instance, element=e, n_samples=n_samples, seed=seed
                )
                for e in range(instance.n_pairs)
            ]
        )
        super().__init__(samples=samples, n_demands=instance.n_demands, seed=seed)
        self.instance = instance
