import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvarselect.exceptions import EmptyInputException, ParameterException
from cvarselect.services.coverage import CoverageScenarioTable, coverage_generate
from cvarselect.services.mod import ModScenarioTable, mod_generate
from cvarselect.services.risk import (
    AssignmentTable,
    SampleTable,
    auxiliary_h,
    estimate_cvar,
    estimate_var,
    implied_epsilon,
    required_samples,
    tail_count,
)
from tests.conftest import modular_samples

FAMILY = [1.0, 2.0, 3.0, 4.0, 5.0]


@pytest.mark.parametrize(
    "alpha, var, cvar",
    [
        (0.2, 1.0, 1.0),
        (0.4, 2.0, 1.5),
        (0.6, 3.0, 2.0),
        (0.8, 4.0, 2.5),
        (1.0, 5.0, 3.0),
    ],
)
def test_hand_enumerated_estimates(alpha, var, cvar):
    assert estimate_var(values=FAMILY, alpha=alpha) == var
    assert estimate_cvar(values=FAMILY, alpha=alpha).cvar == cvar


def test_order_does_not_matter():
    assert estimate_cvar(values=[5.0, 3.0, 1.0, 4.0, 2.0], alpha=0.4).cvar == 1.5


def test_tail_count_guards_float_products():
    assert tail_count(n=5, alpha=0.6) == 3
    assert tail_count(n=1000, alpha=0.01) == 10
    assert tail_count(n=3, alpha=0.01) == 1


def test_cvar_at_one_is_the_mean():
    values = np.random.default_rng(11).normal(size=1000)
    estimate = estimate_cvar(values=values, alpha=1.0)
    assert estimate.cvar == pytest.approx(math.fsum(values.tolist()) / 1000, abs=1e-12)


def test_estimator_errors():
    with pytest.raises(EmptyInputException):
        estimate_cvar(values=[], alpha=0.5)
    with pytest.raises(ParameterException):
        estimate_var(values=FAMILY, alpha=0.0)
    with pytest.raises(ParameterException):
        estimate_cvar(values=FAMILY, alpha=1.5)


@given(
    values=st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50),
    a=st.floats(0.01, 1.0),
    b=st.floats(0.01, 1.0),
)
def test_cvar_nondecreasing_in_alpha(values, a, b):
    low, high = sorted((a, b))
    assert (
        estimate_cvar(values=values, alpha=low).cvar
        <= estimate_cvar(values=values, alpha=high).cvar + 1e-6
    )


@given(values=st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50), alpha=st.floats(0.01, 1.0))
def test_cvar_below_var(values, alpha):
    estimate = estimate_cvar(values=values, alpha=alpha)
    assert estimate.cvar <= estimate.var + 1e-6
    assert estimate.var == estimate_var(values=values, alpha=alpha)


def test_required_samples():
    assert required_samples(gamma_cap=10.0, epsilon=0.5, delta_conf=0.1) == 600
    assert required_samples(gamma_cap=10.0, epsilon=1.0, delta_conf=0.05) == 185
    assert required_samples(gamma_cap=1.0, epsilon=1.0, delta_conf=2.0 / math.e**2) == 1
    # quadruples before the ceiling
    doubled = required_samples(gamma_cap=20.0, epsilon=1.0, delta_conf=0.05)
    assert abs(doubled - 4 * 185) <= 4
    with pytest.raises(ParameterException):
        required_samples(gamma_cap=10.0, epsilon=0.0, delta_conf=0.1)
    with pytest.raises(ParameterException):
        required_samples(gamma_cap=10.0, epsilon=0.5, delta_conf=1.0)


def test_implied_epsilon_inverts_sizing():
    n = required_samples(gamma_cap=10.0, epsilon=0.5, delta_conf=0.1)
    assert implied_epsilon(gamma_cap=10.0, n_samples=n, delta_conf=0.1) <= 0.5
    assert implied_epsilon(gamma_cap=10.0, n_samples=n - 1, delta_conf=0.1) > 0.5


def test_empty_set_is_free():
    table = SampleTable(samples=modular_samples(seed=1, n_elements=3, n_samples=20))
    assert auxiliary_h(elements=[], tau=2.0, table=table, alpha=0.5) == pytest.approx(-2.0)
    assert table.eval_count == 0

    table.utilities(elements=[0, 1])
    table.utilities(elements=[1, 0])
    assert table.eval_count == 1


def test_thresholds_reuse_one_evaluation():
    table = SampleTable(samples=modular_samples(seed=2, n_elements=3, n_samples=20))
    for tau in (0.0, 2.5, 5.0, 7.5):
        table.auxiliary(elements=[0, 2], tau=tau, alpha=0.3)
    table.mean_utility(elements=[2, 0])
    assert table.eval_count == 1


def test_cached_vectors_are_read_only():
    table = SampleTable(samples=modular_samples(seed=1, n_elements=2, n_samples=5))
    values = table.utilities(elements=[0])
    with pytest.raises(ValueError):
        values[0] = 1.0


def _assignment_table(seed: int) -> AssignmentTable:
    samples = modular_samples(seed=seed, n_elements=6, n_samples=40)
    return AssignmentTable(samples=samples, n_demands=2, seed=seed)


def _mod_table(seed: int) -> ModScenarioTable:
    instance = mod_generate(n_demands=2, n_vehicles=3, seed=seed)
    return ModScenarioTable(instance=instance, n_samples=40)


def _coverage_table(seed: int) -> CoverageScenarioTable:
    instance = coverage_generate(
        width=6,
        height=6,
        obstacles=[(2, 2, 3, 3)],
        n_candidates=5,
        budget=2,
        seed=seed,
    )
    return CoverageScenarioTable(instance=instance, n_samples=40)


TABLES = {
    "sample": lambda seed: SampleTable(
        samples=modular_samples(seed=seed, n_elements=5, n_samples=40)
    ),
    "assignment": _assignment_table,
    "mod": _mod_table,
    "coverage": _coverage_table,
}

# alpha * 40 is a whole number for each of these
ALPHAS = [0.05, 0.1, 0.5, 1.0]


def _nested_sets(data, n):
    small = frozenset(data.draw(st.sets(st.integers(0, n - 1))))
    large = small | frozenset(data.draw(st.sets(st.integers(0, n - 1))))
    return small, large


@pytest.mark.parametrize("family", TABLES)
@settings(max_examples=50, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    alpha=st.sampled_from(ALPHAS),
    tau=st.floats(0.0, 40.0),
    data=st.data(),
)
def test_auxiliary_function_in_sets(family, seed, alpha, tau, data):
    table = TABLES[family](seed)
    small, large = _nested_sets(data, table.ground_size)

    def h(s):
        return table.auxiliary(elements=s, tau=tau, alpha=alpha)

    assert h(frozenset()) == pytest.approx(tau * (1.0 - 1.0 / alpha), abs=1e-10)
    assert h(small) <= h(large) + 1e-10
    for e in range(table.ground_size):
        if e not in large:
            assert h(small | {e}) - h(small) >= h(large | {e}) - h(large) - 1e-10


def _breakpoints(values: np.ndarray) -> list[float]:
    points = [0.0]
    for v in sorted({*values.tolist(), float(values.max()) + 1.0}):
        # merging close breakpoints keeps chord slopes well conditioned
        if v - points[-1] > 1e-4:
            points.append(v)
    return points


@pytest.mark.parametrize("family", TABLES)
@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), alpha=st.sampled_from(ALPHAS), data=st.data())
def test_auxiliary_function_in_tau(family, seed, alpha, data):
    table = TABLES[family](seed)
    elements = frozenset(data.draw(st.sets(st.integers(0, table.ground_size - 1))))
    points = _breakpoints(table.utilities(elements=elements))
    h = [table.auxiliary(elements=elements, tau=t, alpha=alpha) for t in points]

    slopes = [
        (right - left) / (b - a)
        for left, right, a, b in zip(h, h[1:], points, points[1:])
    ]
    for slope in slopes:
        assert 1.0 - 1.0 / alpha - 1e-6 <= slope <= 1.0 + 1e-6
    for before, after in zip(slopes, slopes[1:]):
        assert after <= before + 1e-6


@pytest.mark.parametrize("family", TABLES)
@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), alpha=st.sampled_from(ALPHAS), data=st.data())
def test_auxiliary_maximum_is_the_cvar(family, seed, alpha, data):
    table = TABLES[family](seed)
    elements = frozenset(data.draw(st.sets(st.integers(0, table.ground_size - 1))))
    values = table.utilities(elements=elements)
    cvar = estimate_cvar(values=values, alpha=alpha).cvar

    at_breakpoints = max(
        table.auxiliary(elements=elements, tau=float(v), alpha=alpha) for v in values
    )
    assert at_breakpoints == pytest.approx(cvar, abs=1e-9)

    step = 0.5
    grid = np.arange(0.0, float(values.max()) + 2 * step, step)
    on_grid = max(
        table.auxiliary(elements=elements, tau=float(t), alpha=alpha) for t in grid
    )
    assert on_grid <= cvar + 1e-9
    assert on_grid >= cvar - step * max(1.0, 1.0 / alpha - 1.0) - 1e-9


@pytest.mark.parametrize("family", ["mod", "coverage"])
@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), data=st.data())
def test_case_study_utilities_are_submodular_per_scenario(family, seed, data):
    table = TABLES[family](seed)
    small, large = _nested_sets(data, table.ground_size)

    def f(s):
        return table.utilities(elements=s)

    assert np.all(f(small) <= f(large) + 1e-12)
    for e in range(table.ground_size):
        if e not in large:
            gain_small = f(small | {e}) - f(small)
            gain_large = f(large | {e}) - f(large)
            assert np.all(gain_small >= gain_large - 1e-12)


def test_auxiliary_rejects_bad_alpha():
    table = SampleTable(samples=modular_samples(seed=1, n_elements=2, n_samples=5))
    with pytest.raises(ParameterException):
        auxiliary_h(elements=[0], tau=1.0, table=table, alpha=0.0)


@pytest.mark.slow
def test_dkw_sizing_bounds_cvar_deviation():
    gamma_cap, epsilon, delta_conf = 10.0, 0.5, 0.1
    n = required_samples(gamma_cap=gamma_cap, epsilon=epsilon, delta_conf=delta_conf)
    rng = np.random.default_rng(2024)
    for alpha in (0.5, 1.0):
        misses = 0
        for _ in range(200):
            values = rng.uniform(0.0, gamma_cap, size=n)
            # CVaR of uniform[0, 10] is 5 alpha
            if abs(estimate_cvar(values=values, alpha=alpha).cvar - 5.0 * alpha) > epsilon:
                misses += 1
        assert misses / 200 <= delta_conf + 0.05
