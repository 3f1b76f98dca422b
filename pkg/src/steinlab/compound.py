"""Evaluating compound Poisson laws.

Three routes, chosen by the jump law:

* lattice jumps: Panjer recursion, exact up to rounding;
* gamma-process jumps on ``[delta, inf)``: a delay equation for the density,
  solved block by block with Chebyshev-Lobatto collocation;
* anything else: Poisson mixture of convolution powers (slow, generic).
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.optimize import minimize_scalar

from . import special
from .distributions import (
    CompoundPoisson,
    Discrete,
    Dist,
    DistError,
    GammaLevyJump,
    Numeric,
    Scaled,
    point_mass,
)
from .numeric import NumericLaw, convolve_pair, mixture

PANJER_TAIL = 1e-16
_MAX_EXPONENT = 600.0


def resolve_compound(cp: CompoundPoisson) -> Dist:
    jump = cp.jump
    if isinstance(jump, Scaled):
        return Scaled(jump.c, resolve_compound(CompoundPoisson(cp.lam, jump.inner)))
    if isinstance(jump, GammaLevyJump):
        return Numeric(levy_jump_compound(cp.lam, jump.delta))
    if jump.discrete:
        lattice = _lattice(jump)
        if lattice is not None:
            h, q = lattice
            g = panjer(cp.lam, q)
            k = np.nonzero(g > 0)[0]
            return Discrete(tuple((h * k).tolist()), tuple((g[k] / g[k].sum()).tolist()))
    return _poisson_mixture(cp.lam, jump)


def _lattice(jump: Dist, max_index: int = 10**6):
    locs, masses = jump.atoms()
    pos = locs[locs > 0]
    if pos.size == 0:
        return None
    h = float(pos[0])
    ratio = locs / h
    idx = np.rint(ratio)
    if idx[-1] > max_index or np.any(np.abs(ratio - idx) > 1e-9 * np.maximum(1.0, ratio)):
        return None
    q = np.zeros(int(idx[-1]) + 1)
    np.add.at(q, idx.astype(int), masses)
    return h, q


def panjer(lam: float, q: np.ndarray, tail: float = PANJER_TAIL) -> np.ndarray:
    """Mass function of a compound Poisson sum with integer jump law ``q``.

    ``g_0 = exp(-lam (1 - q_0))`` and ``g_n = (lam/n) sum_j j q_j g_{n-j}``.
    Large rates are split in halves and recombined by discrete convolution
    so that ``g_0`` does not underflow.
    """
    q = np.asarray(q, dtype=float)
    rate = lam * (1.0 - q[0])
    if rate > _MAX_EXPONENT:
        half = panjer(lam / 2.0, q, tail * 1e-2)
        g = np.convolve(half, half)
        return _trim_tail(g, tail)
    jq = np.arange(q.size) * q
    mean = lam * float(jq.sum())
    var = lam * float((np.arange(q.size) ** 2 * q).sum())
    n_cap = int(mean + 60.0 * math.sqrt(var) + 60 + q.size)
    g = np.zeros(n_cap + 1)
    g[0] = math.exp(-rate)
    cum = g[0]
    jq_rev = jq[::-1]
    for n in range(1, n_cap + 1):
        m = min(n, q.size - 1)
        # sum_{j=1..m} j q_j g_{n-j}
        g[n] = lam / n * float(np.dot(jq_rev[q.size - 1 - m : q.size - 1], g[n - m : n]))
        cum += g[n]
        if n > mean and 1.0 - cum < tail:
            return g[: n + 1]
    return g


def _trim_tail(g: np.ndarray, tail: float) -> np.ndarray:
    rest = np.cumsum(g[::-1])[::-1]
    keep = np.nonzero(rest > tail)[0]
    return g[: keep[-1] + 1] if keep.size else g[:1]


# ---------------------------------------------------------------------------
# gamma-process jumps


@lru_cache(maxsize=None)
def _lobatto(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Chebyshev-Lobatto nodes on [-1, 1] and the cumulative integration matrix."""
    t = -np.cos(np.pi * np.arange(n) / (n - 1))
    vander = cheb.chebvander(t, n - 1)
    coefs = np.linalg.solve(vander, np.eye(n))
    anti = cheb.chebint(coefs, lbnd=-1.0, axis=0)
    integ = cheb.chebval(t, anti).T
    return t, integ


def _levy_tail_point(lam: float, delta: float, target: float) -> tuple[float, float]:
    """Point x where the Chernoff bound on P(W > x) drops below ``target``."""
    e1 = float(special.exp1(delta))

    def log_bound(theta, x):
        return -theta * x + lam * (float(special.exp1(delta * (1.0 - theta))) / e1 - 1.0)

    mean = lam * math.exp(-delta) / e1
    x = max(mean, 1.0) * 2.0 + 10.0
    for _ in range(200):
        res = minimize_scalar(lambda th: log_bound(th, x), bounds=(1e-9, 1 - 1e-9), method="bounded")
        if res.fun < math.log(target):
            return x, math.exp(res.fun)
        x *= 1.25
    raise DistError("compound_poisson: tail truncation point not found")


def levy_jump_compound(lam: float, delta: float, n_nodes: int = 24, tail: float = 1e-14) -> NumericLaw:
    """Law of a compound Poisson sum with :class:`GammaLevyJump` jumps.

    With jump density ``e^{-y}/(E1(delta) y)`` on ``[delta, inf)`` the
    continuous density ``g`` of the sum satisfies, for ``u(x) = e^x g(x)``,
    ``x u(x) = rho (p0 + U(x - delta))`` where ``U`` is the antiderivative of
    ``u`` vanishing on ``[0, delta]``, ``rho = lam / E1(delta)`` and
    ``p0 = e^{-lam}`` is the atom at zero. The equation only looks back by
    ``delta``, so it is solved one block of width ``delta`` at a time.
    """
    e1 = float(special.exp1(delta))
    rho = lam / e1
    p0 = math.exp(-lam)
    x_max, tail_bound = _levy_tail_point(lam, delta, tail)
    t, integ = _lobatto(n_nodes)
    half = 0.5 * delta
    blocks = int(math.ceil((x_max - delta) / delta))
    xs = np.empty((blocks, n_nodes))
    gs = np.empty((blocks, n_nodes))
    cs = np.empty((blocks, n_nodes))
    u_prev_int = np.zeros(n_nodes)
    c_end = 0.0
    for j in range(blocks):
        x = (j + 1) * delta + (t + 1.0) * half
        u = rho * (p0 + u_prev_int) / x
        g = np.exp(-x) * u
        u_prev_int = u_prev_int[-1] + half * (integ @ u)
        c = c_end + half * (integ @ g)
        c_end = c[-1]
        xs[j], gs[j], cs[j] = x, g, c
    knots = _output_grid(delta, blocks)
    j = np.clip(np.floor((knots - delta) / delta).astype(int), 0, blocks - 1)
    tk = np.clip(2.0 * (knots - (j + 1) * delta) / delta - 1.0, -1.0, 1.0)
    g_k = _barycentric(t, gs[j], tk)
    c_k = _barycentric(t, cs[j], tk)
    return NumericLaw.build(
        knots, c_k, g_k[:-1], g_k[1:], [0.0], [p0], tol=1e-10, tail=tail_bound, breaks=[delta]
    )


def _output_grid(delta: float, blocks: int, rel: float = 0.005) -> np.ndarray:
    # knot spacing about rel * min(x, 1), so the cubic Hermite error stays near 1e-12;
    # early block ends are kept because the density has derivative jumps there
    end = (blocks + 1) * delta
    low = np.exp(np.arange(np.ceil(np.log(delta) / rel), 1) * rel)
    high = 1.0 + np.arange(1, int((end - 1.0) / rel) + 1) * rel
    n_ends = blocks if blocks <= 5000 else 20
    ends = (np.arange(1, n_ends + 1) + 1) * delta
    pts = np.concatenate([[delta, end], low, high, ends])
    return np.unique(pts[(pts >= delta) & (pts <= end)])


def _barycentric(t: np.ndarray, values: np.ndarray, tk: np.ndarray) -> np.ndarray:
    """Evaluate row-wise Lobatto interpolants at ``tk``."""
    n = t.size
    w = (-1.0) ** np.arange(n)
    w[0] *= 0.5
    w[-1] *= 0.5
    diff = tk[:, None] - t[None, :]
    hit = np.abs(diff) < 1e-14
    diff = np.where(hit, 1.0, diff)
    ratio = w / diff
    out = (ratio * values).sum(axis=1) / ratio.sum(axis=1)
    any_hit = hit.any(axis=1)
    if any_hit.any():
        out[any_hit] = values[any_hit][hit[any_hit]]
    return out


# ---------------------------------------------------------------------------
# generic route


def _poisson_mixture(lam: float, jump: Dist, tail: float = 1e-12) -> Numeric:
    n_max = int(lam + 12.0 * math.sqrt(lam) + 12)
    weights = [math.exp(-lam)]
    laws: list[Dist] = [point_mass(0.0)]
    power: Dist = jump
    log_w = -lam
    for n in range(1, n_max + 1):
        log_w += math.log(lam) - math.log(n)
        weights.append(math.exp(log_w))
        laws.append(power)
        if n > lam and math.exp(log_w) < tail:
            break
        power = convolve_pair(power, jump)
    return mixture(weights, laws)
