from collections.abc import Callable, Iterable, Iterator, Sequence
from logging import getLogger

from cvarselect.exceptions import (
    InstanceTooLargeException,
    InvalidElementException,
    ParameterException,
    ZeroSingletonException,
)
from cvarselect.models.core import (
    BruteForceOptimum,
    Curvature,
    ElementMarginal,
    ElementSet,
    GroundSet,
    Matroid,
    UniformMatroid,
)
from cvarselect.settings.config import config

logger = getLogger(__name__)

SetFunction = Callable[[frozenset[int]], float]
TauSetFunction = Callable[[frozenset[int], float], float]


def _check_ground(*, matroid: Matroid, ground_set: GroundSet) -> None:
    if matroid.ground_size != ground_set.size:
        raise ParameterException(
            f"matroid covers {matroid.ground_size} elements, "
            f"ground set has {ground_set.size}"
        )


def _fits(*, matroid: Matroid, selected: Sequence[int], element: int) -> bool:
    if isinstance(matroid, UniformMatroid):
        return len(selected) < matroid.rank

    block = matroid.blocks[element]
    used = sum(1 for s in selected if matroid.blocks[s] == block)
    return used < matroid.caps[block]


def matroid_contains(*, matroid: Matroid, elements: ElementSet | Iterable[int]) -> bool:
    members = list(elements.members if isinstance(elements, ElementSet) else elements)
    for e in members:
        if e < 0 or e >= matroid.ground_size:
            raise InvalidElementException(
                f"element {e} outside ground set of size {matroid.ground_size}"
            )
    if len(set(members)) != len(members):
        return False

    if isinstance(matroid, UniformMatroid):
        return len(members) <= matroid.rank

    counts = [0] * len(matroid.caps)
    for e in members:
        counts[matroid.blocks[e]] += 1
    return all(c <= cap for c, cap in zip(counts, matroid.caps))


def greedy_maximize(
    *, evaluate: SetFunction, matroid: Matroid, ground_set: GroundSet
) -> ElementSet:
    """Matroid greedy on a monotone set function.

    Adds the feasible element of largest marginal gain until no element fits,
    so the result is a maximal independent set. Gains below zero are clamped
    and ties go to the smallest element id.
    """
    _check_ground(matroid=matroid, ground_set=ground_set)

    selected: list[int] = []
    current: frozenset[int] = frozenset()
    current_value = evaluate(current)
    while True:
        best, best_gain, best_value = -1, -1.0, current_value
        for e in range(ground_set.size):
            if e in current or not _fits(matroid=matroid, selected=selected, element=e):
                continue
            value = evaluate(current | {e})
            gain = max(value - current_value, 0.0)
            if gain > best_gain:
                best, best_gain, best_value = e, gain, value
        if best < 0:
            break
        selected.append(best)
        current = current | {best}
        current_value = best_value
        logger.debug("greedy round %s picked %s (gain %s)", len(selected), best, best_gain)

    return ElementSet(members=selected)


def curvature_estimate(
    *,
    evaluate: SetFunction,
    ground_set: GroundSet,
    tolerance: float = config.TOLERANCE,
    drop_null_singletons: bool = False,
) -> Curvature:
    """Total curvature with marginals taken at the full ground set.

    For submodular functions the full set gives each element its smallest
    marginal, so the value bounds the matroid-restricted curvature from above.
    """
    full = frozenset(range(ground_set.size))
    full_value = evaluate(full)

    marginals: list[ElementMarginal] = []
    dropped: list[int] = []
    for e in range(ground_set.size):
        singleton = evaluate(frozenset((e,)))
        if singleton <= tolerance:
            if not drop_null_singletons:
                raise ZeroSingletonException(f"element {e} has singleton value {singleton}")
            dropped.append(e)
            continue
        marginal = full_value - evaluate(full - {e})
        marginals.append(ElementMarginal(element=e, marginal=marginal, singleton=singleton))

    if dropped:
        logger.debug("curvature ignores %s null singleton(s)", len(dropped))
    if not marginals:
        return Curvature(value=0.0, marginals=[], dropped=dropped)

    ratio = min(m.marginal / m.singleton for m in marginals)
    value = min(max(1.0 - ratio, 0.0), 1.0)
    return Curvature(value=value, marginals=marginals, dropped=dropped)


def _independent_sets(*, matroid: Matroid, n: int) -> Iterator[tuple[int, ...]]:
    # depth-first in lexicographic order of the sorted member tuples
    stack: list[tuple[int, ...]] = [()]
    while stack:
        members = stack.pop()
        yield members
        start = members[-1] + 1 if members else 0
        for e in reversed(range(start, n)):
            if _fits(matroid=matroid, selected=members, element=e):
                stack.append((*members, e))


def brute_force_max_h(
    *,
    h_eval: TauSetFunction,
    matroid: Matroid,
    ground_set: GroundSet,
    tau_grid: Sequence[float],
    max_ground: int = config.BRUTE_FORCE_MAX_GROUND,
    max_evals: int = config.BRUTE_FORCE_MAX_EVALS,
) -> BruteForceOptimum:
    _check_ground(matroid=matroid, ground_set=ground_set)
    if not tau_grid:
        raise ParameterException("tau grid is empty")
    if ground_set.size > max_ground:
        raise InstanceTooLargeException(
            f"ground set of {ground_set.size} exceeds brute-force limit {max_ground}"
        )

    budget = max_evals // len(tau_grid)
    sets: list[tuple[int, ...]] = []
    for members in _independent_sets(matroid=matroid, n=ground_set.size):
        sets.append(members)
        if len(sets) > budget:
            raise InstanceTooLargeException(
                f"more than {budget} independent sets for {len(tau_grid)} grid points"
            )

    best_set: tuple[int, ...] = ()
    best_tau = tau_grid[0]
    best_value = float("-inf")
    for members in sets:
        s = frozenset(members)
        for tau in tau_grid:
            value = h_eval(s, tau)
            if value > best_value:
                best_set, best_tau, best_value = members, tau, value

    return BruteForceOptimum(
        selected=ElementSet(members=list(best_set)),
        tau=best_tau,
        value=best_value,
        evaluations=len(sets) * len(tau_grid),
    )
