import numpy as np
import pytest
import scipy.integrate
import scipy.linalg

from centralspin.sw import FIELD_SIGMA, SWConfig, precession_correlation, sw_correlation
from oracles import SPIN


def maxwell_average(f, sigma=FIELD_SIGMA):
    """<f(|w|)> for an isotropic Gaussian field with per-component sigma."""
    pdf = lambda w: np.sqrt(2 / np.pi) * w**2 / sigma**3 * np.exp(-(w**2) / (2 * sigma**2))
    return scipy.integrate.quad(lambda w: pdf(w) * f(w), 0.0, 12 * sigma, limit=200)[0]


def zero_field_rzz(t):
    # R_zz = (1/4) <n_z^2 + (1 - n_z^2) cos(w t)> with <n_z^2> = 1/3
    return 0.25 * (1 / 3 + 2 / 3 * maxwell_average(lambda w: np.cos(w * t)))


def test_quadrature_oracle_matches_closed_form():
    for t in (0.0, 1.0, 3.0, 9.0):
        closed = (1 + 2 * (1 - t**2 / 4) * np.exp(-(t**2) / 8)) / 12
        assert zero_field_rzz(t) == pytest.approx(closed, abs=1e-10)


def test_per_sample_against_2x2_propagator():
    rng = np.random.default_rng(3)
    fields = rng.normal(size=(4, 3))
    times = np.array([0.0, 0.7, 2.9])
    got = precession_correlation(fields, times)
    for s, w in enumerate(fields):
        h = sum(w[i] * SPIN[a] for i, a in enumerate("xyz"))
        for ti, t in enumerate(times):
            u = scipy.linalg.expm(-1j * h * t)
            for i, a in enumerate("xyz"):
                for j, b in enumerate("xyz"):
                    ref = 0.5 * np.trace(SPIN[a] @ u.conj().T @ SPIN[b] @ u).real
                    assert got[s, ti, i, j] == pytest.approx(ref, abs=1e-14)


def test_zero_field_sample_is_static():
    got = precession_correlation(np.zeros((1, 3)), [0.0, 5.0])
    np.testing.assert_allclose(got[0, 1], np.eye(3) / 4)


def test_per_sample_bound():
    rng = np.random.default_rng(5)
    r = precession_correlation(rng.normal(size=(200, 3)), np.linspace(0, 10, 11))
    assert np.all(np.abs(r[..., 2, 2]) <= 0.25 + 1e-15)


def test_matches_quadrature_oracle():
    times = np.linspace(0.0, 10.0, 21)
    r = sw_correlation(SWConfig(40_000, seed=11), times)
    assert np.all(r.component("zz")[0] == 0.25)
    ref = np.array([zero_field_rzz(t) for t in times])
    assert np.all(np.abs(r.component("zz") - ref) <= 4 * r.component_stderr("zz") + 1e-15)


def test_isotropic_at_zero_field():
    times = np.linspace(0.0, 10.0, 11)
    r = sw_correlation(SWConfig(20_000, seed=2), times)
    for c in ("xx", "yy"):
        diff = np.abs(r.component(c) - r.component("zz"))
        se = np.hypot(r.component_stderr(c), r.component_stderr("zz"))
        assert np.all(diff <= 5 * se + 1e-15)


def test_strong_field_pins_spin():
    r = sw_correlation(SWConfig(5000, seed=4, b_field=100.0), np.linspace(0.0, 10.0, 11))
    np.testing.assert_allclose(r.component("zz"), 0.25, atol=1e-4)


def test_standard_error_scaling():
    times = np.array([1.5, 3.0])
    ratios = []
    for seed in range(5):
        small = sw_correlation(SWConfig(4000, seed=seed), times).component_stderr("zz")
        big = sw_correlation(SWConfig(8000, seed=100 + seed), times).component_stderr("zz")
        ratios.append(small / big)
    assert np.mean(ratios) == pytest.approx(np.sqrt(2), rel=0.2)


def test_reproducible_and_chunk_independent():
    times = np.linspace(0.0, 4.0, 5)
    a = sw_correlation(SWConfig(9000, seed=8), times)
    b = sw_correlation(SWConfig(9000, seed=8), times)
    assert np.array_equal(a.values, b.values)


def test_invalid_config():
    with pytest.raises(ValueError):
        SWConfig(0)
    with pytest.raises(ValueError):
        sw_correlation(SWConfig(10), [1.0, 0.5])
