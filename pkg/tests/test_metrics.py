from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats
from scipy.integrate import quad

from steinlab import (
    CompoundPoisson,
    DistError,
    Exponential,
    Gamma,
    GammaLevyJump,
    NegativeBinomial,
    Poisson,
    Scaled,
    Uniform,
    point_mass,

)
from steinlab.distributions import sample
from steinlab.metrics import (
    DistanceEstimate,
    kolmogorov,
    kolmogorov_empirical,
    wasserstein,
    wasserstein_empirical,
    wasserstein_to_dist,
)


def test_wasserstein_identical_is_zero():
    for d in (Gamma(2.0, 1.5), Poisson(3.0), Uniform(0.0, 2.0)):
        est = wasserstein(d, d)
        assert est.value == 0.0
        assert est.metric == "wasserstein"


def test_wasserstein_ordered_gammas():
    ref = quad(lambda x: stats.gamma.cdf(x, 1) - stats.gamma.cdf(x, 2), 0, np.inf, epsabs=1e-13)[0]
    est = wasserstein(Gamma(1.0, 1.0), Gamma(2.0, 1.0))
    assert est.value == pytest.approx(1.0, abs=1e-9)
    assert est.value == pytest.approx(ref, abs=1e-9)
    assert est.error <= 1e-8 and not est.flagged


@pytest.mark.parametrize("delta", [0.01, 0.1, 0.5])
def test_wasserstein_levy_compound_poisson(delta):
    j = GammaLevyJump(delta)
    cp = CompoundPoisson(j.total_rate, j)
    assert wasserstein(cp, Gamma(1.0, 1.0)).value == pytest.approx(-math.expm1(-delta), abs=1e-8)


def test_wasserstein_crossing_cdfs():
    # Exp(1) vs Uniform(0, 2): same mean, CDFs cross once
    def gap(x):
        return abs(stats.expon.cdf(x) - stats.uniform.cdf(x, 0, 2))

    ref = quad(gap, 0, 2, points=[2 * math.log(2)], epsabs=1e-13)[0] + quad(gap, 2, np.inf, epsabs=1e-13)[0]
    assert wasserstein(Exponential(1.0), Uniform(0.0, 2.0)).value == pytest.approx(ref, abs=1e-9)


@pytest.mark.parametrize("kappa,p", [(1.0, 0.01), (2.0, 0.1), (5.0, 0.05)])
def test_wasserstein_scaled_nb_against_quadrature(kappa, p):
    nb = Scaled(p, NegativeBinomial(kappa, p))
    g = Gamma(kappa * (1 - p), 1.0)
    r = kappa * (1 - p)

    # the NB CDF is constant on each lattice cell; split each cell where the
    # gamma CDF crosses that level and integrate with Gauss-Legendre
    hi = g.upper(1e-16) * 1.5
    k = np.arange(0, int(hi / p) + 2)
    level = stats.nbinom.cdf(k, kappa, p)
    a, b = p * k, p * (k + 1)
    cross = np.clip(stats.gamma.ppf(level, r), a, b)
    nodes, weights = np.polynomial.legendre.leggauss(30)
    ref = 0.0
    for lo, up in ((a, cross), (cross, b)):
        mid, half = (lo + up) / 2, (up - lo) / 2
        x = mid[:, None] + half[:, None] * nodes
        vals = np.abs(level[:, None] - stats.gamma.cdf(x, r))
        ref += float(np.sum(half * (vals @ weights)))
    assert wasserstein(nb, g).value == pytest.approx(ref, abs=1e-8)


def test_wasserstein_point_masses():
    assert wasserstein(point_mass(1.0), point_mass(3.5)).value == pytest.approx(2.5, abs=1e-12)


def test_wasserstein_rejects_bad_tol():
    with pytest.raises((DistError, ValueError)):
        wasserstein(Gamma(1.0, 1.0), Gamma(2.0, 1.0), tol=0.0)


def test_kolmogorov_identical_is_zero():
    assert kolmogorov(Gamma(2.0, 1.0), Gamma(2.0, 1.0)).value == 0.0


def test_kolmogorov_exponentials():
    est = kolmogorov(Gamma(1.0, 1.0), Gamma(1.0, 2.0))
    x = np.linspace(0, 5, 200001)
    grid = np.max(np.abs(np.exp(-x) - np.exp(-2 * x)))
    assert est.value == pytest.approx(0.25, abs=1e-9)
    assert est.value >= grid - 1e-12


def test_kolmogorov_poisson_vs_exponential():
    est = kolmogorov(Poisson(1.0), Gamma(1.0, 1.0))
    assert est.value >= math.exp(-1) - 1e-12
    # exact oracle: scan both one-sided limits at the atoms
    k = np.arange(0, 30)
    F = stats.poisson.cdf(k, 1.0)
    G = stats.expon.cdf(k)
    left = np.concatenate([[0.0], F[:-1]])
    assert est.value == pytest.approx(max(np.max(np.abs(F - G)), np.max(np.abs(left - G))), abs=1e-12)


def test_kolmogorov_scaled_nb_against_atoms():
    kappa, p = 2.0, 0.05
    nb = Scaled(p, NegativeBinomial(kappa, p))
    r = kappa * (1 - p)
    k = np.arange(0, 4000)
    F = stats.nbinom.cdf(k, kappa, p)
    left = np.concatenate([[0.0], F[:-1]])
    G = stats.gamma.cdf(p * k, r)
    ref = max(np.max(np.abs(F - G)), np.max(np.abs(left - G)))
    assert kolmogorov(nb, Gamma(r, 1.0)).value == pytest.approx(ref, abs=1e-9)


def test_distance_estimate_json():
    est = DistanceEstimate(0.5, "wasserstein", "quadrature", 1e-9)
    assert est.to_json() == {
        "value": 0.5,
        "metric": "wasserstein",
        "method": "quadrature",
        "error": 1e-9,
        "n": None,
        "flagged": False,
    }
    with pytest.raises(ValueError):
        DistanceEstimate(-1.0, "wasserstein", "quadrature", 0.0)


# ---------------------------------------------------------------------------
# empirical


def test_empirical_identical_samples():
    s = np.array([0.3, 1.0, 2.2])
    assert wasserstein_empirical(s, s).value == 0.0


def test_empirical_sorted_l1():
    assert wasserstein_empirical([0.0, 2.0], [1.0, 1.0]).value == pytest.approx(1.0)


def test_empirical_length_mismatch():
    with pytest.raises(DistError):
        wasserstein_empirical([1.0, 2.0], [1.0])


def test_kolmogorov_empirical_dkw_band():
    n = 100_000
    s = sample(Gamma(1.0, 1.0), 11, n)
    est = kolmogorov_empirical(s, Gamma(1.0, 1.0), n_boot=100)
    # DKW: P(sup |F_n - F| > eps) <= 2 exp(-2 n eps^2); eps at level 1e-6
    eps = math.sqrt(math.log(2 / 1e-6) / (2 * n))
    assert est.value < eps
    assert est.value < 3 * est.error + 3 / math.sqrt(n)


def test_kolmogorov_empirical_matches_scipy():
    s = sample(Exponential(2.0), 4, 2000)
    est = kolmogorov_empirical(s, Exponential(2.0), n_boot=20)
    assert est.value == pytest.approx(stats.kstest(s, stats.expon(scale=0.5).cdf).statistic, abs=1e-12)


def test_exact_and_empirical_agree():
    d1, d2 = Gamma(1.0, 1.0), Gamma(2.0, 1.0)
    exact = wasserstein(d1, d2).value
    emp = wasserstein_empirical(sample(d1, 1, 40_000), sample(d2, 2, 40_000), n_boot=100)
    assert abs(emp.value - exact) < 3 * emp.error + 1e-3
    to_dist = wasserstein_to_dist(sample(d1, 3, 40_000), d2, n_boot=100)
    assert abs(to_dist.value - exact) < 3 * to_dist.error + 1e-3


# ---------------------------------------------------------------------------
# properties


LAWS = st.one_of(
    st.builds(Gamma, st.floats(0.3, 5), st.floats(0.3, 4)),
    st.builds(Poisson, st.floats(0.2, 8)),
    st.builds(Uniform, st.floats(0, 1), st.floats(1.5, 4)),
    st.builds(NegativeBinomial, st.floats(0.5, 4), st.floats(0.2, 0.9)),
)


@settings(max_examples=25, deadline=None)
@given(LAWS, LAWS)
def test_metrics_are_symmetric(a, b):
    assert wasserstein(a, b).value == pytest.approx(wasserstein(b, a).value, abs=2e-8)
    assert kolmogorov(a, b).value == pytest.approx(kolmogorov(b, a).value, abs=2e-8)


@settings(max_examples=20, deadline=None)
@given(LAWS, LAWS, LAWS)
def test_triangle_inequality(a, b, c):
    assert wasserstein(a, c).value <= wasserstein(a, b).value + wasserstein(b, c).value + 5e-8
    assert kolmogorov(a, c).value <= kolmogorov(a, b).value + kolmogorov(b, c).value + 5e-8


@settings(max_examples=20, deadline=None)
@given(LAWS, LAWS, st.floats(0.2, 5))
def test_scaling(a, b, c):
    w = wasserstein(a, b).value
    assert wasserstein(Scaled(c, a), Scaled(c, b)).value == pytest.approx(c * w, abs=5e-8 * max(1, c))
    k = kolmogorov(a, b).value
    assert kolmogorov(Scaled(c, a), Scaled(c, b)).value == pytest.approx(k, abs=5e-8)


@settings(max_examples=25, deadline=None)
@given(LAWS, LAWS)
def test_kolmogorov_at_most_one(a, b):
    assert 0.0 <= kolmogorov(a, b).value <= 1.0
