"""Closed-form error bounds for gamma approximation.

Everything here is plain arithmetic on moments and the transform distance
``theta`` (Wasserstein distance between the size-biased and zero-biased laws),
except :func:`conv_theta`, which estimates ``theta`` for gamma convolutions by
Monte Carlo.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import special
from .distributions import DistError, make_rng
from .metrics import DistanceEstimate


class BoundError(DistError):
    pass


@dataclass(frozen=True)
class BoundReport:
    mu: float
    sigma2: float
    r: float
    alpha: float
    theta: float
    w_bound: float
    k_bound: float
    a_const: float
    b_const: float
    regime: str

    def to_json(self) -> dict:
        return asdict(self)


def _positive(**vals: float) -> None:
    for name, v in vals.items():
        if not (math.isfinite(v) and v > 0):
            raise BoundError(f"{name} must be > 0 and finite, got {v}")


def _nonneg_theta(theta: float) -> None:
    if not (math.isfinite(theta) and theta >= 0):
        raise BoundError(f"theta must be >= 0, got {theta}")


def gamma_params_from_moments(mu: float, sigma2: float) -> tuple[float, float]:
    """Shape and rate of the gamma law with mean ``mu`` and variance ``sigma2``."""
    _positive(mu=mu, sigma2=sigma2)
    return mu * mu / sigma2, mu / sigma2


def density_max(r: float, alpha: float) -> float:
    """Maximum of the Γ(r, α) density, for r >= 1."""
    _positive(r=r, alpha=alpha)
    if r < 1:
        raise BoundError("the gamma density is unbounded for shape < 1")
    if r == 1:
        return alpha
    return math.exp(math.log(alpha) - special.lgamma(r) + (r - 1.0) * (math.log(r - 1.0) - 1.0))


def wasserstein_bound(mu: float, sigma2: float, theta: float) -> float:
    r, _ = gamma_params_from_moments(mu, sigma2)
    _nonneg_theta(theta)
    return 8.0 * math.sqrt(3.0 * mu / (r + 2.0) * theta) + 8.0 * r / (r + 2.0) * theta


def kolmogorov_constants(r: float, alpha: float) -> tuple[float, float]:
    """Constants ``(a, b)`` of the Kolmogorov bound; the mean is ``r / alpha``.

    The two branches do not join continuously at ``r = 1``; they are kept
    as they are.
    """
    _positive(r=r, alpha=alpha)
    mu = r / alpha
    if r < 1:
        g = special.gamma_fn(r)
        a = (0.5 + 1.0 / r) * (48.0 * mu / (r + 2.0)) ** (r / (r + 2.0)) * (alpha**r / g) ** (2.0 / (r + 2.0))
        b = 8.0 * alpha * (mu / (r + 2.0)) ** ((r + 1.0) / (r + 2.0)) * (alpha**r / (48.0 * g)) ** (1.0 / (r + 2.0))
        return float(a), float(b)
    m = density_max(r, alpha)
    a = 3.0 * (6.0 * mu / (r + 2.0)) ** (1.0 / 3.0) * m ** (2.0 / 3.0)
    b = 4.0 * alpha * (mu / (r + 2.0)) ** (2.0 / 3.0) * (m / 6.0) ** (1.0 / 3.0)
    return float(a), float(b)


def kolmogorov_exponents(r: float) -> tuple[float, float]:
    s = min(r, 1.0)
    return s / (s + 2.0), (s + 1.0) / (s + 2.0)


def kolmogorov_bound(mu: float, sigma2: float, theta: float) -> float:
    r, alpha = gamma_params_from_moments(mu, sigma2)
    _nonneg_theta(theta)
    a, b = kolmogorov_constants(r, alpha)
    e1, e2 = kolmogorov_exponents(r)
    return a * theta**e1 + b * theta**e2


def theorem_report(mu: float, sigma2: float, theta: float) -> BoundReport:
    r, alpha = gamma_params_from_moments(mu, sigma2)
    a, b = kolmogorov_constants(r, alpha)
    return BoundReport(
        mu=mu,
        sigma2=sigma2,
        r=r,
        alpha=alpha,
        theta=theta,
        w_bound=wasserstein_bound(mu, sigma2, theta),
        k_bound=kolmogorov_bound(mu, sigma2, theta),
        a_const=a,
        b_const=b,
        regime="r<1" if r < 1 else "r>=1",
    )


def gamma_pair_bound(r1: float, alpha1: float, r2: float, alpha2: float) -> float:
    """Upper bound on the Wasserstein distance between two gamma laws."""
    _positive(r1=r1, alpha1=alpha1, r2=r2, alpha2=alpha2)
    return abs(r1 - r2) / max(alpha1, alpha2) + max(r1, r2) * abs(1.0 / alpha1 - 1.0 / alpha2)


def concentration_eps(r: float, alpha: float, delta: float) -> float:
    """Upper bound on ``P(z < Z <= z + delta)`` for ``Z ~ Γ(r, α)``, uniformly in z >= 0."""
    _positive(r=r, alpha=alpha, delta=delta)
    if r < 1:
        return math.exp(r * math.log(alpha * delta) - special.lgamma(r + 1.0))
    return density_max(r, alpha) * delta


def example1_values(delta: float) -> tuple[float, float, float]:
    """``(theta, bound, exact)`` for the truncated gamma-process compound Poisson law."""
    _positive(delta=delta)
    theta = delta * (1.0 + 0.5 * delta) / (1.0 + delta)
    bound = 8.0 * math.sqrt(delta) + 17.0 / 3.0 * delta
    exact = -math.expm1(-delta)
    return theta, bound, exact


def _nb_check(kappa: float, p: float) -> None:
    _positive(kappa=kappa)
    if not 0 < p < 1:
        raise BoundError(f"p must lie in (0, 1), got {p}")


def nb_bounds(kappa: float, p: float) -> tuple[float, float, float]:
    """``(theta, w_bound, k_bound)`` for ``p * NB(kappa, p)`` against Γ(κ(1-p), 1)."""
    _nb_check(kappa, p)
    theta = 0.5 * p
    m = kappa * (1.0 - p)
    w = 4.0 * math.sqrt(6.0 * m * p / (m + 2.0)) + 4.0 * m * p / (m + 2.0)
    return theta, w, kolmogorov_bound(m, m, theta)


def nb_report(kappa: float, p: float) -> BoundReport:
    _nb_check(kappa, p)
    m = kappa * (1.0 - p)
    return theorem_report(m, m, 0.5 * p)


def nb_sum_bound(kappa: float, p: float, nu: float) -> float:
    """Wasserstein bound for a negative binomial random sum with conditional spread ``nu``."""
    if not (math.isfinite(nu) and nu >= 0):
        raise BoundError(f"nu must be >= 0, got {nu}")
    _, w, _ = nb_bounds(kappa, p)
    return w + nu * math.sqrt(kappa * (1.0 - p) * p) + p * kappa


# ---------------------------------------------------------------------------
# gamma convolutions


def _conv_index_weights(params: Sequence[tuple[float, float]]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if len(params) == 0:
        raise BoundError("conv_theta: need at least one gamma component")
    r = np.array([float(a) for a, _ in params])
    alpha = np.array([float(b) for _, b in params])
    for ri, ai in zip(r, alpha):
        _positive(r=ri, alpha=ai)
    w1 = r / alpha
    w2 = r / alpha**2
    return alpha, w1 / w1.sum(), w2 / w2.sum()


def _joint_index_law(w1: np.ndarray, w2: np.ndarray, coupling: str) -> np.ndarray:
    if coupling == "independent":
        return np.outer(w1, w2)
    if coupling != "comonotone":
        raise BoundError(f"unknown index coupling {coupling!r}")
    c1 = np.concatenate([[0.0], np.cumsum(w1)])
    c2 = np.concatenate([[0.0], np.cumsum(w2)])
    lo = np.maximum(c1[:-1, None], c2[None, :-1])
    hi = np.minimum(c1[1:, None], c2[None, 1:])
    return np.clip(hi - lo, 0.0, None)


def _exp_abs_gap(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # E|Y_a - Y_b| for independent exponentials with rates a and b
    return 1.0 / a + 1.0 / b - 2.0 / (a + b)


def conv_theta_exact(params: Sequence[tuple[float, float]], coupling: str = "comonotone") -> float:
    """Closed form of ``E|Y_I1 - Y_I2|``; the difference vanishes when I1 = I2."""
    alpha, w1, w2 = _conv_index_weights(params)
    joint = _joint_index_law(w1, w2, coupling)
    gap = _exp_abs_gap(alpha[:, None], alpha[None, :])
    np.fill_diagonal(gap, 0.0)
    return float((joint * gap).sum())


def conv_theta(
    params: Sequence[tuple[float, float]],
    seed: int | np.random.Generator = 0,
    n: int = 100_000,
    coupling: str = "comonotone",
) -> DistanceEstimate:
    """Monte Carlo ``E|Y_I1 - Y_I2|`` for a sum of independent Γ(r_i, α_i).

    ``Y_i ~ Γ(1, α_i)`` are independent of each other and of the indices.
    ``I1`` has weights ``r_i/α_i`` and ``I2`` weights ``r_i/α_i²``. The
    default draws both indices from one uniform, which gives ``I1 = I2``
    whenever the weights agree (one component, or equal rates) and hence
    ``theta = 0`` for an exact gamma law.
    """
    alpha, w1, w2 = _conv_index_weights(params)
    if n < 2:
        raise BoundError("conv_theta: need n >= 2")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    u = rng.random(n)
    v = u if coupling == "comonotone" else rng.random(n)
    if coupling not in ("comonotone", "independent"):
        raise BoundError(f"unknown index coupling {coupling!r}")
    i1 = np.minimum(np.searchsorted(np.cumsum(w1), u, side="right"), alpha.size - 1)
    i2 = np.minimum(np.searchsorted(np.cumsum(w2), v, side="right"), alpha.size - 1)
    e = rng.standard_exponential((2, n))
    diff = np.where(i1 == i2, 0.0, np.abs(e[0] / alpha[i1] - e[1] / alpha[i2]))
    return DistanceEstimate(
        float(diff.mean()), "wasserstein", "empirical", float(diff.std(ddof=1) / math.sqrt(n)), n
    )
