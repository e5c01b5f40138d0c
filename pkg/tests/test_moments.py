import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from centralspin.hyperfine import HyperfineDistribution, exponential_couplings, moment, uniform_couplings
from centralspin.moments import (
    NewtonStatus,
    NumericalBreakdown,
    NoValidAssignment,
    ReducedModel,
    enumerate_assignments,
    moment_report,
    newton_refine,
    reduce_model,
    stieltjes_quadrature,
)


def test_golden_uniform():
    model, report = reduce_model(uniform_couplings(999), 3)
    assert model.counts == (278, 444, 277)
    np.testing.assert_allclose(model.couplings, [0.006211535015, 0.027438527427, 0.048627307400], atol=1e-9)
    assert [f"{e:.6f}" for e in report.percent_errors] == ["0.000000"] * 3 + ["0.000005"]


def test_golden_exponential():
    model, report = reduce_model(exponential_couplings(24, 48), 5)
    assert model.counts == (12, 16, 11, 6, 3)
    np.testing.assert_allclose(
        model.couplings,
        [0.045891672330, 0.088805260206, 0.161816389804, 0.231833880157, 0.281681731186],
        atol=1e-9,
    )
    assert f"{report.percent_errors[5]:.6f}" == "0.000567"


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.floats(0.01, 1.0), min_size=3, max_size=30),
    st.integers(1, 6),
)
def test_quadrature_is_exact_to_degree_2m_minus_1(values, m):
    values = sorted(set(round(v, 6) for v in values))
    if m >= len(values):
        return
    dist = HyperfineDistribution(tuple(values))
    rule = stieltjes_quadrature(dist, m)
    assert np.all(rule.weights > 0)
    assert np.all((rule.nodes > min(values) - 1e-12) & (rule.nodes < max(values) + 1e-12))
    for k in range(2 * m):
        exact = moment(dist, k)
        assert rule.moment(k) == pytest.approx(exact, rel=1e-9, abs=1e-12)


def test_quadrature_requires_m_below_n():
    with pytest.raises(ValueError):
        stieltjes_quadrature(uniform_couplings(5), 5)
    with pytest.raises(ValueError):
        stieltjes_quadrature(uniform_couplings(5), 0)


def test_assignments_conserve_n():
    weights = np.array([2.4, 3.3, 1.3])
    got = enumerate_assignments(weights, 7)
    assert got == [(3, 3, 1), (2, 4, 1), (2, 3, 2)]
    assert all(sum(a) == 7 for a in got)


def test_unroundable_weights_rejected():
    with pytest.raises(NoValidAssignment):
        enumerate_assignments(np.array([1.5, 1.5]), 5)


def test_empty_set_is_singular():
    rule = stieltjes_quadrature(HyperfineDistribution((0.1, 0.2, 0.3)), 2)
    _, status = newton_refine(rule, (0, 3))
    assert status is NewtonStatus.SINGULAR


def test_newton_reproduces_exact_integer_rule():
    # the target is itself an integer-weight rule, so Newton lands on its nodes
    target = ReducedModel((0.1, 0.3), (2, 3))
    rule = stieltjes_quadrature(HyperfineDistribution((0.1, 0.1, 0.3, 0.3, 0.3)), 2)
    nodes, status = newton_refine(rule, (2, 3))
    assert status is NewtonStatus.CONVERGED
    np.testing.assert_allclose(nodes, target.couplings, atol=1e-12)


@pytest.mark.parametrize("n,m", [(49, 2), (49, 3), (49, 4), (49, 5), (99, 4)])
def test_reduction_properties(n, m):
    dist = uniform_couplings(n)
    model, report = reduce_model(dist, m)
    assert model.n == n and model.m == m
    assert all(c >= 1 for c in model.counts)
    assert list(model.couplings) == sorted(model.couplings)
    for k in range(1, m + 1):
        assert model.moment(k) == pytest.approx(moment(dist, k), rel=1e-10)
    assert report.percent_errors == moment_report(dist, model).percent_errors


def test_reduce_rejects_bad_m():
    with pytest.raises(ValueError):
        reduce_model(uniform_couplings(5), 5)
    with pytest.raises(ValueError):
        reduce_model(uniform_couplings(5), 0)


def test_reduced_model_validation():
    with pytest.raises(ValueError):
        ReducedModel((0.1, 0.2), (1,))
    with pytest.raises(ValueError):
        ReducedModel((0.1,), (0,))


def test_point_mass_breaks_down():
    with pytest.raises(NumericalBreakdown):
        reduce_model(HyperfineDistribution((0.3,) * 5), 2)


@pytest.mark.parametrize(
    "values,counts",
    [((0.1, 0.25), (3, 4)), ((0.1, 0.25, 0.4), (3, 4, 2)), ((0.05, 0.2, 0.3, 0.5), (1, 6, 2, 3))],
)
def test_recovers_integer_model(values, counts):
    dist = HyperfineDistribution(tuple(v for v, c in zip(values, counts) for _ in range(c)))
    model, _ = reduce_model(dist, len(values))
    assert model.counts == counts
    np.testing.assert_allclose(model.couplings, values, atol=1e-12)
