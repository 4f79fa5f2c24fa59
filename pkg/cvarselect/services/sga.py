import math
from logging import getLogger

from cvarselect.exceptions import EvaluationException, ParameterException
from cvarselect.models.core import ElementSet, GroundSet, Matroid
from cvarselect.models.risk import RiskParams
from cvarselect.models.sga import (
    Certificate,
    CurvatureReport,
    SgaResult,
    TauCurvature,
    TracePoint,
)
from cvarselect.services.core import curvature_estimate, greedy_maximize
from cvarselect.services.risk import CEIL_SLACK, BaseScenarioTable
from cvarselect.settings.config import config

logger = getLogger(__name__)


def grid_size(*, gamma_cap: float, delta_step: float) -> int:
    """ceil(Gamma / Delta); the tau grid has one more point than this."""
    return max(1, math.ceil(gamma_cap / delta_step - CEIL_SLACK))


def tau_grid(params: RiskParams) -> list[float]:
    steps = grid_size(gamma_cap=params.gamma_cap, delta_step=params.delta_step)
    return [i * params.delta_step for i in range(steps + 1)]


class _CountingOracle:
    def __init__(self, *, table: BaseScenarioTable, tau: float, alpha: float):
        self.table = table
        self.tau = tau
        self.alpha = alpha
        self.calls = 0
        self.last_size = 0

    def __call__(self, elements: frozenset[int]) -> float:
        self.calls += 1
        self.last_size = len(elements)
        return self.table.auxiliary(elements=elements, tau=self.tau, alpha=self.alpha)


def sga_solve(
    *,
    table: BaseScenarioTable,
    matroid: Matroid,
    ground_set: GroundSet,
    params: RiskParams,
) -> SgaResult:
    """Greedy over S for every grid tau, keeping the best (S, tau) pair."""
    if table.ground_size != ground_set.size:
        raise ParameterException(
            f"scenario table covers {table.ground_size} elements, "
            f"ground set has {ground_set.size}"
        )

    evals_before = table.eval_count
    oracle_calls = 0
    trace: list[TracePoint] = []
    best: TracePoint | None = None
    for tau in tau_grid(params):
        oracle = _CountingOracle(table=table, tau=tau, alpha=params.alpha)
        try:
            selected = greedy_maximize(
                evaluate=oracle, matroid=matroid, ground_set=ground_set
            )
            h_value = oracle(selected.as_frozenset())
        except (ArithmeticError, ValueError) as e:
            logger.error(
                "Evaluation failed at tau=%s, round %s: %s", tau, oracle.last_size, e
            )
            raise EvaluationException(
                f"evaluation failed at tau={tau}, round {oracle.last_size}"
            ) from e
        oracle_calls += oracle.calls

        point = TracePoint(tau=tau, selected=selected, h_value=h_value)
        trace.append(point)
        logger.debug("tau=%s selected %s with H=%s", tau, selected.members, h_value)
        if best is None or point.h_value > best.h_value:
            best = point

    assert best is not None
    result = SgaResult(
        selected=best.selected,
        tau_g=best.tau,
        h_value=best.h_value,
        trace=trace,
        eval_count=table.eval_count - evals_before,
        oracle_calls=oracle_calls,
    )
    logger.info(
        "SGA alpha=%s: tau=%s H=%s over %s grid points, %s utility evaluations",
        params.alpha,
        result.tau_g,
        result.h_value,
        len(trace),
        result.eval_count,
    )
    return result


def additive_term(*, k_f: float, gamma_cap: float, alpha: float) -> float:
    return k_f / (1.0 + k_f) * gamma_cap * (1.0 / alpha - 1.0)


def optimum_upper_bound(
    *,
    h_value: float,
    k_f: float,
    gamma_cap: float,
    alpha: float,
    delta_step: float,
    epsilon: float,
) -> float:
    return (
        (1.0 + k_f) * h_value
        + k_f * gamma_cap * (1.0 / alpha - 1.0)
        + delta_step
        + (1.0 + k_f) * epsilon
    )


def certificate(*, result: SgaResult, k_f: float, params: RiskParams) -> Certificate:
    if not 0.0 <= k_f <= 1.0:
        raise ParameterException(f"curvature must lie in [0, 1], got {k_f}")

    epsilon = params.epsilon or 0.0
    return Certificate(
        k_f=k_f,
        additive_term=additive_term(
            k_f=k_f, gamma_cap=params.gamma_cap, alpha=params.alpha
        ),
        delta_step=params.delta_step,
        epsilon=epsilon,
        gamma_cap=params.gamma_cap,
        alpha=params.alpha,
        optimum_upper_bound=optimum_upper_bound(
            h_value=result.h_value,
            k_f=k_f,
            gamma_cap=params.gamma_cap,
            alpha=params.alpha,
            delta_step=params.delta_step,
            epsilon=epsilon,
        ),
    )


def eval_count_bound(*, ground_set: GroundSet, params: RiskParams, n_samples: int) -> int:
    steps = grid_size(gamma_cap=params.gamma_cap, delta_step=params.delta_step)
    return steps * ground_set.size**2 * n_samples


def curvature_report(
    *,
    table: BaseScenarioTable,
    ground_set: GroundSet,
    params: RiskParams,
    tolerance: float = config.TOLERANCE,
) -> CurvatureReport:
    """Curvature of the mean utility and of H(., tau) - H(empty, tau) per tau.

    ``conservative`` is the largest of these and is the value certificates
    are issued with.
    """
    mean = curvature_estimate(
        evaluate=lambda s: table.mean_utility(elements=s),
        ground_set=ground_set,
        tolerance=tolerance,
        drop_null_singletons=True,
    )
    if mean.dropped:
        logger.warning(
            "Curvature skips elements with null mean utility: %s", mean.dropped
        )

    per_tau: list[TauCurvature] = []
    for tau in tau_grid(params):
        base = table.auxiliary(elements=(), tau=tau, alpha=params.alpha)
        curvature = curvature_estimate(
            evaluate=lambda s, tau=tau, base=base: table.auxiliary(
                elements=s, tau=tau, alpha=params.alpha
            )
            - base,
            ground_set=ground_set,
            tolerance=tolerance,
            drop_null_singletons=True,
        )
        per_tau.append(TauCurvature(tau=tau, value=curvature.value))

    conservative = max([mean.value, *(p.value for p in per_tau)])
    return CurvatureReport(
        mean_utility=mean.value, per_tau=per_tau, conservative=conservative
    )


def expectation_greedy(
    *, table: BaseScenarioTable, matroid: Matroid, ground_set: GroundSet
) -> ElementSet:
    return greedy_maximize(
        evaluate=lambda s: table.mean_utility(elements=s),
        matroid=matroid,
        ground_set=ground_set,
    )
