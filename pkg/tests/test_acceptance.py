"""Acceptance criteria, each with its tolerance and runtime limit."""
from __future__ import annotations

import math
import subprocess
import sys
import time

import numpy as np

from steinlab import (
    CompoundPoisson,
    Discrete,
    Gamma,
    GammaLevyJump,
    Logarithmic,
    NegativeBinomial,
    Poisson,
    Scaled,
    Uniform,
)
from steinlab.bounds import concentration_eps, gamma_pair_bound, kolmogorov_bound, wasserstein_bound
from steinlab.distributions import split_rng
from steinlab.metrics import kolmogorov, wasserstein, wasserstein_to_dist
from steinlab.transforms import jump_theta, sum_bias_coupling, theta_exact


def _finish(criterion, number, title, t0, limit, failures, detail=""):
    elapsed = time.perf_counter() - t0
    if elapsed >= limit:
        failures.append(f"runtime {elapsed:.1f} s exceeds {limit} s")
    ok = not failures
    criterion(number, title, ok, elapsed, "; ".join(failures[:3]) or detail)
    assert ok, failures


def test_criterion_1_gamma_fixed_point(criterion):
    t0 = time.perf_counter()
    failures = []
    worst = 0.0
    for r in (0.5, 1.0, 2.0, 5.0):
        for a in (0.5, 1.0, 3.0):
            v = theta_exact(Gamma(r, a)).value
            worst = max(worst, v)
            if not v < 1e-6:
                failures.append(f"theta(Gamma({r},{a})) = {v:.3g}")
    control = theta_exact(Uniform(0.0, 1.0)).value
    if not control > 1e-2:
        failures.append(f"uniform control {control:.3g}")
    _finish(criterion, 1, "gamma fixed point", t0, 5.0, failures, f"max theta {worst:.2e}, control {control:.4f}")


def test_criterion_2_scaled_logarithmic_theta(criterion):
    t0 = time.perf_counter()
    failures = []
    worst = 0.0
    for p in (0.05, 0.1, 0.3, 0.5):
        gap = abs(jump_theta(Scaled(p, Logarithmic(p))).value - 0.5 * p)
        worst = max(worst, gap)
        if not gap <= 1e-6:
            failures.append(f"p={p}: |theta - p/2| = {gap:.3g}")
    _finish(criterion, 2, "scaled logarithmic theta = p/2", t0, 5.0, failures, f"max gap {worst:.2e}")


def test_criterion_3_levy_compound_poisson(criterion):
    t0 = time.perf_counter()
    failures = []
    worst = 0.0
    g = Gamma(1.0, 1.0)
    for delta in (0.001, 0.01, 0.05, 0.1, 0.5):
        jump = GammaLevyJump(delta)
        closed = delta * (1 + delta / 2) / (1 + delta)
        gap_a = abs(jump_theta(jump).value - closed)
        exact = -math.expm1(-delta)
        gap_b = abs(wasserstein(CompoundPoisson(jump.total_rate, jump), g).value - exact)
        worst = max(worst, gap_a, gap_b)
        if not gap_a <= 1e-6:
            failures.append(f"delta={delta}: theta gap {gap_a:.3g}")
        if not gap_b <= 1e-6:
            failures.append(f"delta={delta}: distance gap {gap_b:.3g}")
        if not exact <= delta <= 8 * math.sqrt(delta) + 17 / 3 * delta:
            failures.append(f"delta={delta}: ordering")
    _finish(criterion, 3, "truncated gamma-process compound Poisson", t0, 20.0, failures, f"max gap {worst:.2e}")


def test_criterion_4_nb_bound_dominance(criterion):
    t0 = time.perf_counter()
    failures = []
    ratio = 0.0
    for kappa in (1.0, 2.0, 5.0):
        for p in (0.01, 0.05, 0.1):
            m = kappa * (1 - p)
            law, target = Scaled(p, NegativeBinomial(kappa, p)), Gamma(m, 1.0)
            wb = 4 * math.sqrt(6 * m * p / (m + 2)) + 4 * m * p / (m + 2)
            kb = kolmogorov_bound(m, m, 0.5 * p)
            dw = wasserstein(law, target).value
            dk = kolmogorov(law, target).value
            ratio = max(ratio, dw / wb, dk / kb)
            if not dw <= wb:
                failures.append(f"kappa={kappa}, p={p}: d_W {dw:.4g} > {wb:.4g}")
            if not dk <= kb:
                failures.append(f"kappa={kappa}, p={p}: d_K {dk:.4g} > {kb:.4g}")
    _finish(criterion, 4, "negative binomial bound dominance", t0, 30.0, failures, f"max distance/bound {ratio:.3f}")


def test_criterion_5_gamma_pair_dominance(criterion):
    t0 = time.perf_counter()
    failures = []
    grid = (0.5, 1.0, 2.0, 3.0, 5.0)
    laws = {(r, a): Gamma(r, a) for r in grid for a in grid}
    slack = math.inf
    for (r1, a1), g1 in laws.items():
        for (r2, a2), g2 in laws.items():
            d = wasserstein(g1, g2).value
            b = gamma_pair_bound(r1, a1, r2, a2)
            slack = min(slack, b - d)
            if not d <= b + 1e-8:
                failures.append(f"({r1},{a1}) vs ({r2},{a2}): {d:.6g} > {b:.6g}")
            if a1 == a2 and not abs(d - b) <= 1e-8:
                failures.append(f"({r1},{a1}) vs ({r2},{a2}): equal rates but gap {abs(d - b):.3g}")
    _finish(criterion, 5, "gamma pair bound on the 5^4 grid", t0, 30.0, failures, f"min slack {slack:.2e}")


def test_criterion_6_concentration(criterion):
    t0 = time.perf_counter()
    failures = []
    excess = -math.inf
    deltas = np.geomspace(1e-3, 1.0, 12)
    for r in (0.3, 0.5, 1.0, 2.0, 5.0):
        for a in (0.5, 1.0, 2.0):
            g = Gamma(r, a)
            z = np.linspace(0.0, g.quantile(0.999), 50)
            for delta in deltas:
                mass = np.asarray(g.cdf(z + delta)) - np.asarray(g.cdf(z))
                e = float(np.max(mass - concentration_eps(r, a, float(delta))))
                excess = max(excess, e)
                if e > 1e-12:
                    failures.append(f"r={r}, alpha={a}, delta={delta:.3g}: excess {e:.3g}")
    _finish(criterion, 6, "gamma concentration inequality", t0, 5.0, failures, f"max excess {excess:.2e}")


def test_criterion_7_counterexample(criterion):
    t0 = time.perf_counter()
    failures = []
    pn = Poisson(1.0)
    worst = 0.0
    for lam in (10.0, 100.0, 1000.0):
        cp = CompoundPoisson(lam, Discrete((0.0, 1.0), (1 - 1 / lam, 1 / lam)))
        locs = np.union1d(cp.atoms()[0], pn.atoms()[0])
        gap = float(np.max(np.abs(np.asarray(cp.mass(locs)) - np.asarray(pn.mass(locs)))))
        worst = max(worst, gap)
        if not gap <= 1e-12:
            failures.append(f"lambda={lam}: atom gap {gap:.3g}")
    dk = kolmogorov(pn, Gamma(1.0, 1.0)).value
    if not dk >= 0.3678:
        failures.append(f"d_K = {dk:.6f}")
    _finish(criterion, 7, "compound Poisson equal to Poisson(1)", t0, 2.0, failures, f"atom gap {worst:.1e}, d_K {dk:.6f}")


def test_criterion_8_uniform_sum(criterion):
    t0 = time.perf_counter()
    failures = []
    n = 100_000
    parts = [Uniform(0.0, 1.0)] * 10
    rng_theta, rng_sum = split_rng(2024, 2)
    theta, _ = sum_bias_coupling(parts, rng_theta, n).theta()
    mu, var = 5.0, 10 / 12
    w = np.zeros(n)
    for d in parts:
        w += d.sample(rng_sum, n)
    est = wasserstein_to_dist(w, Gamma(mu * mu / var, mu / var), seed=1)
    bound = wasserstein_bound(mu, var, theta)
    if not est.value <= bound + 3 * est.error:
        failures.append(f"d_W {est.value:.4g} > bound {bound:.4g} + 3 SE")
    detail = f"d_W {est.value:.4f} (SE {est.error:.1e}) <= bound {bound:.4f} at theta {theta:.4f}"
    _finish(criterion, 8, "uniform sum against the general bound", t0, 30.0, failures, detail)


def test_criterion_9_determinism(criterion):
    t0 = time.perf_counter()
    failures = []
    argv = [sys.executable, "-m", "steinlab.cli", "reproduce", "nb", "--seed", "7"]
    a = subprocess.run(argv, capture_output=True)
    b = subprocess.run(argv, capture_output=True)
    if a.returncode != 0 or b.returncode != 0:
        failures.append(f"exit codes {a.returncode}, {b.returncode}")
    if a.stdout != b.stdout or not a.stdout:
        failures.append("outputs differ")
    _finish(criterion, 9, "byte-identical reproduce output", t0, math.inf, failures, f"{len(a.stdout)} bytes twice")
