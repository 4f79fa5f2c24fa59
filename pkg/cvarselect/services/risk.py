import math
from abc import ABC, abstractmethod
from collections.abc import Iterable, Sequence
from logging import getLogger

import numpy as np

from cvarselect.exceptions import EmptyInputException, ParameterException
from cvarselect.models.risk import CvarEstimate

logger = getLogger(__name__)

# guards ceilings against products such as 0.6 * 5 landing just above 3
CEIL_SLACK = 1e-9


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise ParameterException(f"alpha must lie in (0, 1], got {alpha}")


def tail_count(*, n: int, alpha: float) -> int:
    return max(1, math.ceil(alpha * n - CEIL_SLACK))


def _sorted_values(values: Sequence[float] | np.ndarray) -> np.ndarray:
    array = np.asarray(values, dtype=float)
    if array.size == 0:
        raise EmptyInputException("no values to estimate from")
    return np.sort(array, kind="stable")


def estimate_var(*, values: Sequence[float] | np.ndarray, alpha: float) -> float:
    _check_alpha(alpha)
    ordered = _sorted_values(values)
    return float(ordered[tail_count(n=ordered.size, alpha=alpha) - 1])


def estimate_cvar(*, values: Sequence[float] | np.ndarray, alpha: float) -> CvarEstimate:
    """Mean of exactly ceil(alpha * n) smallest values."""
    _check_alpha(alpha)
    ordered = _sorted_values(values)
    k = tail_count(n=ordered.size, alpha=alpha)
    tail = ordered[:k]
    return CvarEstimate(
        var=float(tail[-1]), cvar=math.fsum(tail.tolist()) / k, tail_count=k
    )


def required_samples(*, gamma_cap: float, epsilon: float, delta_conf: float) -> int:
    """Smallest n with 1 - 2 exp(-2 n eps^2 / Gamma^2) >= 1 - delta."""
    if gamma_cap <= 0.0 or epsilon <= 0.0:
        raise ParameterException("gamma_cap and epsilon must be positive")
    if not 0.0 < delta_conf < 1.0:
        raise ParameterException(f"delta_conf must lie in (0, 1), got {delta_conf}")

    bound = gamma_cap**2 / (2.0 * epsilon**2) * math.log(2.0 / delta_conf)
    return max(1, math.ceil(bound - CEIL_SLACK))


def implied_epsilon(*, gamma_cap: float, n_samples: int, delta_conf: float) -> float:
    if n_samples < 1 or gamma_cap <= 0.0 or not 0.0 < delta_conf < 1.0:
        raise ParameterException("invalid sample-size parameters")
    return gamma_cap * math.sqrt(math.log(2.0 / delta_conf) / (2.0 * n_samples))


class BaseScenarioTable(ABC):
    """Utility values f(S, y_k) for a fixed set of scenarios.

    Utility vectors are memoised per set so that every (S, tau) query of one
    solver run sees the same scenarios. The normalised empty set is free.
    ``eval_count`` counts cache misses, so repeated queries of one set count
    once however many thresholds they are evaluated at.
    """

    def __init__(self, *, n_samples: int, seed: int):
        if n_samples < 1:
            raise ParameterException("a scenario table needs at least one scenario")
        self.n_samples = n_samples
        self.seed = seed
        self.eval_count = 0
        self._cache: dict[frozenset[int], np.ndarray] = {}

    @property
    @abstractmethod
    def ground_size(self) -> int:
        pass

    @abstractmethod
    def _compute(self, *, elements: frozenset[int]) -> np.ndarray:
        pass

    @property
    def weights(self) -> np.ndarray | None:
        return None

    def utilities(self, *, elements: Iterable[int]) -> np.ndarray:
        key = frozenset(elements)
        cached = self._cache.get(key)
        if cached is not None:
            return cached

        if not key:
            values = np.zeros(self.n_samples)
        else:
            values = np.asarray(self._compute(elements=key), dtype=float)
            self.eval_count += 1
        values.setflags(write=False)
        self._cache[key] = values
        return values

    def value(self, *, elements: Iterable[int], scenario: int) -> float:
        return float(self.utilities(elements=elements)[scenario])

    def mean_utility(self, *, elements: Iterable[int]) -> float:
        values = self.utilities(elements=elements)
        if self.weights is None:
            return math.fsum(values.tolist()) / self.n_samples
        return math.fsum((self.weights * values).tolist())

    def auxiliary(self, *, elements: Iterable[int], tau: float, alpha: float) -> float:
        hinge = np.maximum(tau - self.utilities(elements=elements), 0.0)
        if self.weights is None:
            return tau - math.fsum(hinge.tolist()) / (self.n_samples * alpha)
        return tau - math.fsum((self.weights * hinge).tolist()) / alpha


class SampleTable(BaseScenarioTable):
    """Modular utilities from an (element, scenario) sample matrix."""

    def __init__(self, *, samples: np.ndarray, seed: int = 0):
        samples = np.asarray(samples, dtype=float)
        super().__init__(n_samples=samples.shape[1], seed=seed)
        self.samples = samples

    @property
    def ground_size(self) -> int:
        return self.samples.shape[0]

    def _compute(self, *, elements: frozenset[int]) -> np.ndarray:
        return self.samples[sorted(elements)].sum(axis=0)


class AssignmentTable(BaseScenarioTable):
    """Sum over demands of the best assigned efficiency.

    Element ``e`` pairs demand ``e % n_demands`` with vehicle
    ``e // n_demands``. Defined on every set, feasible or not.
    """

    def __init__(self, *, samples: np.ndarray, n_demands: int, seed: int):
        samples = np.asarray(samples, dtype=float)
        super().__init__(n_samples=samples.shape[1], seed=seed)
        self.samples = samples
        self.n_demands = n_demands

    @property
    def ground_size(self) -> int:
        return self.samples.shape[0]

    def _compute(self, *, elements: frozenset[int]) -> np.ndarray:
        total = np.zeros(self.n_samples)
        members = sorted(elements)
        for demand in range(self.n_demands):
            rows = [e for e in members if e % self.n_demands == demand]
            if rows:
                total = total + self.samples[rows].max(axis=0)
        return total


def auxiliary_h(
    *, elements: Iterable[int], tau: float, table: BaseScenarioTable, alpha: float
) -> float:
    _check_alpha(alpha)
    return table.auxiliary(elements=elements, tau=tau, alpha=alpha)
