from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from scipy.special import gamma as gamma_fn

from steinlab import Gamma
from steinlab.bounds import (
    BoundError,
    concentration_eps,
    conv_theta,
    conv_theta_exact,
    density_max,
    example1_values,
    gamma_pair_bound,
    gamma_params_from_moments,
    kolmogorov_bound,
    kolmogorov_constants,
    kolmogorov_exponents,
    nb_bounds,
    nb_report,
    nb_sum_bound,
    theorem_report,
    wasserstein_bound,
)
from steinlab.metrics import wasserstein


def test_params_from_moments():
    assert gamma_params_from_moments(1.0, 1.0) == (1.0, 1.0)
    r, a = gamma_params_from_moments(2 / 3, 2 / 9)
    assert r == pytest.approx(2.0) and a == pytest.approx(3.0)
    m = 0.9 * 3
    assert gamma_params_from_moments(m, m) == pytest.approx((m, 1.0))
    with pytest.raises(BoundError):
        gamma_params_from_moments(0.0, 1.0)


def test_wasserstein_bound_examples():
    assert wasserstein_bound(1.0, 1.0, 0.0) == 0.0
    assert wasserstein_bound(1.0, 1.0, 0.01) == pytest.approx(8 * 0.1 + 8 / 3 * 0.01, abs=1e-12)
    assert wasserstein_bound(1.0, 1.0, 0.01) == pytest.approx(0.826667, abs=1e-6)


def test_wasserstein_bound_rejects_negative_theta():
    with pytest.raises(BoundError):
        wasserstein_bound(1.0, 1.0, -0.1)


def test_kolmogorov_constants_at_unit_shape():
    a, b = kolmogorov_constants(1.0, 1.0)
    assert a == pytest.approx(3 * 2 ** (1 / 3), abs=1e-12)
    assert a == pytest.approx(3.77976, abs=1e-5)
    assert b == pytest.approx(4 * 3 ** (-2 / 3) * 6 ** (-1 / 3), abs=1e-12)
    assert b == pytest.approx(1.05827, abs=1e-5)


def test_kolmogorov_exponents():
    assert kolmogorov_exponents(0.5) == pytest.approx((0.2, 0.6))
    assert kolmogorov_exponents(3.0) == pytest.approx((1 / 3, 2 / 3))


def test_kolmogorov_bound_zero_theta():
    for mu, var in [(1.0, 1.0), (1.0, 4.0), (3.0, 0.5)]:
        assert kolmogorov_bound(mu, var, 0.0) == 0.0


def test_density_max_matches_mode():
    for r in (1.0, 1.5, 2.0, 5.0):
        for a in (0.5, 1.0, 3.0):
            mode = (r - 1) / a
            assert density_max(r, a) == pytest.approx(stats.gamma.pdf(mode, r, scale=1 / a), rel=1e-12)
            x = np.linspace(0, 20 / a, 20001)
            assert density_max(r, a) >= np.max(stats.gamma.pdf(x, r, scale=1 / a)) - 1e-12
    with pytest.raises(BoundError):
        density_max(0.5, 1.0)


def test_theorem_report_fields():
    rep = theorem_report(1.0, 4.0, 0.1)
    assert rep.r == pytest.approx(0.25) and rep.alpha == pytest.approx(0.25)
    assert rep.regime == "r<1"
    assert rep.to_json()["w_bound"] == rep.w_bound
    assert theorem_report(2.0, 1.0, 0.1).regime == "r>=1"


THETAS = st.floats(0.0, 5.0)
MOMENTS = st.tuples(st.floats(0.05, 20), st.floats(0.05, 20))


@settings(max_examples=60, deadline=None)
@given(MOMENTS, THETAS, THETAS)
def test_bounds_monotone_in_theta(m, t1, t2):
    mu, var = m
    lo, hi = sorted((t1, t2))
    for f in (wasserstein_bound, kolmogorov_bound):
        a, b = f(mu, var, lo), f(mu, var, hi)
        assert math.isfinite(a) and math.isfinite(b)
        assert 0.0 <= a <= b


def test_gamma_pair_examples():
    assert gamma_pair_bound(2.0, 3.0, 2.0, 3.0) == 0.0
    assert gamma_pair_bound(1.0, 1.0, 2.0, 1.0) == pytest.approx(1.0)
    assert wasserstein(Gamma(1.0, 1.0), Gamma(2.0, 1.0)).value == pytest.approx(1.0, abs=1e-9)
    for delta in (0.01, 0.1, 0.5):
        r, a = math.exp(-delta) / (1 + delta), 1 / (1 + delta)
        assert gamma_pair_bound(r, a, 1.0, 1.0) <= 3 * delta


@pytest.mark.parametrize("r1,a1,r2,a2", [(0.5, 1, 2, 3), (3, 0.5, 1, 1), (2, 2, 5, 0.5), (1, 3, 1, 1)])
def test_gamma_pair_dominates_exact(r1, a1, r2, a2):
    assert wasserstein(Gamma(r1, a1), Gamma(r2, a2)).value <= gamma_pair_bound(r1, a1, r2, a2) + 1e-8


def test_concentration_examples():
    assert concentration_eps(1.0, 1.0, 0.1) == pytest.approx(0.1)
    assert concentration_eps(0.5, 1.0, 0.01) == pytest.approx(0.1 / gamma_fn(1.5), abs=1e-12)
    assert concentration_eps(0.5, 1.0, 0.01) == pytest.approx(0.112838, abs=1e-6)


@pytest.mark.parametrize("r", [0.3, 0.5, 1.0, 2.0, 5.0])
@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_concentration_grid(r, alpha):
    z = np.linspace(0.0, stats.gamma.ppf(0.999, r, scale=1 / alpha), 50)
    g = Gamma(r, alpha)
    for delta in np.geomspace(1e-3, 1.0, 12):
        mass = np.asarray(g.cdf(z + delta)) - np.asarray(g.cdf(z))
        assert np.all(mass <= concentration_eps(r, alpha, delta) + 1e-12)


def test_example1_values():
    theta, bound, exact = example1_values(0.01)
    assert exact == pytest.approx(0.00995017, abs=1e-8)
    assert bound == pytest.approx(0.856667, abs=1e-6)
    assert theta == pytest.approx(0.0099504, abs=1e-7)
    for d in np.linspace(1e-4, 1.0, 50):
        t, b, e = example1_values(float(d))
        assert e <= d <= b
        assert t <= d
    assert max(example1_values(1e-14)) < 1e-6


def test_nb_bounds():
    theta, w, k = nb_bounds(1.0, 0.1)
    assert theta == 0.05
    assert w == pytest.approx(4 * math.sqrt(6 * 0.09 / 2.9) + 4 * 0.09 / 2.9, abs=1e-12)
    # printed arithmetic gives 1.850206; the rounded 1.85017 sits within 4e-5
    assert w == pytest.approx(1.85017, abs=5e-5)
    assert nb_bounds(2.0, 0.5)[0] == 0.25
    assert w == pytest.approx(wasserstein_bound(0.9, 0.9, 0.05), abs=1e-12)
    assert k == pytest.approx(nb_report(1.0, 0.1).k_bound)
    with pytest.raises(BoundError):
        nb_bounds(1.0, 1.0)


def test_nb_bound_vanishes_like_sqrt_p():
    ps = np.geomspace(1e-8, 1e-3, 6)
    w = np.array([nb_bounds(2.0, float(p))[1] for p in ps])
    assert np.all(np.diff(w) > 0)
    assert np.allclose(w / np.sqrt(ps), 4 * math.sqrt(3.0), rtol=1e-2)


def test_nb_sum_bound():
    assert nb_sum_bound(1.0, 0.1, 0.0) == pytest.approx(nb_bounds(1.0, 0.1)[1] + 0.1)
    assert nb_sum_bound(1.0, 0.1, 1.0) == pytest.approx(nb_bounds(1.0, 0.1)[1] + 0.4, abs=1e-12)
    vals = [nb_sum_bound(2.0, 0.3, nu) for nu in np.linspace(0, 3, 10)]
    assert np.all(np.diff(vals) >= 0)
    with pytest.raises(BoundError):
        nb_sum_bound(1.0, 0.1, -1.0)


def _two_exp(a, b):
    return 1 / a + 1 / b - 2 / (a + b)


def test_conv_theta_single_component_is_zero():
    assert conv_theta([(2.0, 3.0)], seed=1, n=1000).value == 0.0
    assert conv_theta_exact([(2.0, 3.0)]) == 0.0


def test_conv_theta_independent_indices_mixture():
    params = [(1.0, 1.0), (1.0, 2.0)]
    w1 = np.array([1.0, 0.5]) / 1.5
    w2 = np.array([1.0, 0.25]) / 1.25
    ref = sum(w1[i] * w2[j] * _two_exp(a, b) for i, a in enumerate((1, 2)) for j, b in enumerate((1, 2)) if i != j)
    assert conv_theta_exact(params, "independent") == pytest.approx(ref, abs=1e-15)
    est = conv_theta(params, seed=3, n=200_000, coupling="independent")
    assert abs(est.value - ref) < 3 * est.error


def test_conv_theta_comonotone_against_exact():
    params = [(1.0, 1.0), (2.0, 0.5), (0.5, 3.0)]
    ref = conv_theta_exact(params)
    est = conv_theta(params, seed=4, n=200_000)
    assert abs(est.value - ref) < 3 * est.error
    assert ref > 0


def test_conv_theta_rejects_bad_input():
    with pytest.raises(BoundError):
        conv_theta([])
    with pytest.raises(BoundError):
        conv_theta([(1.0, 1.0)], coupling="other")
    with pytest.raises(BoundError):
        conv_theta([(0.0, 1.0)])
