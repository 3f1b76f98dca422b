"""Univariate laws on the nonnegative half-line.

Every law answers the same questions: CDF, survival, continuous density,
atom list, partial moments ``E[W^k 1{W <= x}]`` and their upper-tail
complements, raw moments, quantiles and sampling. Partial moments are the
workhorse: the bias transforms and the exact Wasserstein computation are
written in terms of them.

Discrete families with infinite support carry explicit atom lists cut off
once the remaining mass drops below ``ATOM_TAIL``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from functools import cached_property
from typing import Any, ClassVar

import numpy as np

from . import special

ATOM_TAIL = 1e-16

_FAMILIES: dict[str, type["Dist"]] = {}


class DistError(ValueError):
    """Parameter outside its domain, or an operation a law cannot support."""


class DistSpecError(ValueError):
    """Malformed distribution spec text."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


def register(*names: str):
    def deco(cls):
        cls.family = names[0]
        for name in names:
            _FAMILIES[name] = cls
        return cls

    return deco


def _arr(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def _out(values: np.ndarray, like):
    if np.ndim(like) == 0:
        return float(np.asarray(values).reshape(()))
    return values


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise DistError(message)


def _finite_pos(name: str, value: float, what: str) -> None:
    _require(math.isfinite(value) and value > 0, f"{name}: {what} must be > 0 (got {value!r})")


def _open_unit(name: str, value: float) -> None:
    _require(0.0 < value < 1.0, f"{name}: p must be in (0, 1) (got {value!r})")


class Dist:
    """Base class for all laws.

    Subclasses implement ``_pm`` (and usually ``_tm``), ``raw_moment``,
    ``atoms`` and, when a continuous part exists, ``_density``. Public
    methods accept scalars or arrays and mirror the input shape.
    """

    family: ClassVar[str] = ""
    discrete: ClassVar[bool] = False

    # -- to override -------------------------------------------------
    def _pm(self, k: int, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _tm(self, k: int, x: np.ndarray) -> np.ndarray:
        return self.raw_moment(k) - self._pm(k, x)

    def _density(self, x: np.ndarray) -> np.ndarray:
        return np.zeros_like(x)

    def raw_moment(self, k: int) -> float:
        raise NotImplementedError

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        return np.empty(0), np.empty(0)

    @property
    def lower(self) -> float:
        return 0.0

    def breakpoints(self) -> np.ndarray:
        locs, _ = self.atoms()
        return np.unique(np.concatenate([[self.lower], locs]))

    @property
    def is_numeric(self) -> bool:
        """True when evaluation goes through a tabulated law."""
        return False

    # -- moments -----------------------------------------------------
    def moments(self) -> tuple[float, float]:
        m1 = self.raw_moment(1)
        return m1, self.raw_moment(2) - m1 * m1

    @property
    def mean(self) -> float:
        return self.moments()[0]

    @property
    def var(self) -> float:
        return self.moments()[1]

    # -- evaluation --------------------------------------------------
    def cdf(self, x):
        xa = _arr(x)
        return _out(np.clip(self._pm(0, xa), 0.0, 1.0), x)

    def sf(self, x):
        xa = _arr(x)
        return _out(np.clip(self._tm(0, xa), 0.0, 1.0), x)

    def mass(self, x):
        # exact match, so that cdf_left = cdf - mass is consistent with cdf
        xa = _arr(x)
        locs, masses = self.atoms()
        out = np.zeros(xa.shape)
        if locs.size:
            idx = np.clip(np.searchsorted(locs, xa), 0, locs.size - 1)
            out = np.where(locs[idx] == xa, masses[idx], 0.0)
        return _out(out, x)

    def cdf_left(self, x):
        """P(W < x)."""
        xa = _arr(x)
        return _out(np.clip(self._pm(0, xa) - _arr(self.mass(xa)), 0.0, 1.0), x)

    def density(self, x):
        xa = _arr(x)
        return _out(self._density(xa), x)

    def partial_moment(self, k: int, x):
        xa = _arr(x)
        return _out(self._pm(k, xa), x)

    def tail_moment(self, k: int, x):
        xa = _arr(x)
        return _out(self._tm(k, xa), x)

    def mass_and_first(self, x: np.ndarray, upper: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """``(F(x), E[W; W <= x])``, or ``(S(x), E[W; W > x])`` with ``upper``."""
        if upper:
            return np.asarray(self.sf(x), float), np.asarray(self.tail_moment(1, x), float)
        return np.asarray(self.cdf(x), float), np.asarray(self.partial_moment(1, x), float)

    def excess(self, x):
        """E[(W - x)^+]."""
        xa = _arr(x)
        val = self._tm(1, xa) - xa * self._tm(0, xa)
        return _out(np.maximum(val, 0.0), x)

    def upper(self, tail: float = 1e-12) -> float:
        """A point beyond which both the mass and ``E[(W-x)^+]`` are below ``tail``."""
        m, v = self.moments()
        sd = math.sqrt(max(v, 0.0))
        step = max(sd, 1e-3 * max(m, 1e-300), 1e-12)
        x = m + 8.0 * step
        for _ in range(200):
            if float(self.sf(x)) <= tail and float(self.excess(x)) <= tail:
                return x
            step *= 1.5
            x = m + 8.0 * step
        raise DistError(f"{self.family}: could not locate a truncation point for tail {tail}")

    def quantile(self, u):
        """Generalized inverse: smallest x with F(x) >= u."""
        ua = _arr(u)
        if np.any((ua <= 0) | (ua >= 1)):
            raise DistError("quantile: u must lie in (0, 1)")
        if self.discrete:
            locs, masses = self.atoms()
            cum = np.cumsum(masses)
            idx = np.searchsorted(cum, ua * (1 - 1e-15), side="left")
            return _out(locs[np.clip(idx, 0, locs.size - 1)], u)
        return _out(self._bisect_quantile(ua), u)

    def _bisect_quantile(self, ua: np.ndarray, iters: int = 200) -> np.ndarray:
        lo = np.full(ua.shape, self.lower)
        hi_val = self.upper(min(1e-14, float(np.min(1 - ua)) * 1e-3))
        hi = np.full(ua.shape, hi_val)
        at_lower = _arr(self.cdf(lo)) >= ua
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            ge = _arr(self.cdf(mid)) >= ua
            hi = np.where(ge, mid, hi)
            lo = np.where(ge, lo, mid)
            if np.all(hi - lo <= 4e-16 * np.maximum(1.0, np.abs(hi))):
                break
        out = np.where(at_lower, self.lower, hi)
        locs, _ = self.atoms()
        if locs.size:
            idx = np.clip(np.searchsorted(locs, out), 0, locs.size - 1)
            near = np.abs(locs[idx] - out) <= 1e-9 * np.maximum(1.0, np.abs(out))
            out = np.where(near, locs[idx], out)
        return out

    # -- sampling ----------------------------------------------------
    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if n < 1:
            raise DistError("sample: n must be >= 1")
        return np.asarray(self._sample(rng, int(n)), dtype=float)

    def _sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        u = rng.random(n)
        u = np.where(u <= 0.0, np.nextafter(0.0, 1.0), u)
        return _arr(self.quantile(u))

    # -- text form ---------------------------------------------------
    def params(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}  # type: ignore[arg-type]

    def __str__(self) -> str:
        return format_dist(self)


# ---------------------------------------------------------------------------
# continuous parametric families


@register("gamma")
@dataclass(frozen=True)
class Gamma(Dist):
    """Gamma law with shape ``r`` and rate ``alpha``."""

    r: float
    alpha: float

    def __post_init__(self):
        _finite_pos("gamma", self.r, "shape")
        _finite_pos("gamma", self.alpha, "rate")

    def _coef(self, k: int) -> float:
        return math.exp(special.lgamma(self.r + k) - special.lgamma(self.r) - k * math.log(self.alpha))

    def raw_moment(self, k: int) -> float:
        return self._coef(k)

    def moments(self):
        return self.r / self.alpha, self.r / self.alpha**2

    def _pm(self, k, x):
        return self._coef(k) * special.gammainc_lower(self.r + k, self.alpha * np.maximum(x, 0.0))

    def _tm(self, k, x):
        return self._coef(k) * special.gammainc_upper(self.r + k, self.alpha * np.maximum(x, 0.0))

    def mass_and_first(self, x, upper=False):
        # one incomplete gamma call: P(r+1, z) = P(r, z) - z^r e^{-z} / Gamma(r+1)
        z = self.alpha * np.maximum(np.asarray(x, float), 0.0)
        with np.errstate(divide="ignore"):
            step = np.exp(self.r * np.log(z) - z - special.lgamma(self.r + 1.0))
        m = self.r / self.alpha
        if upper:
            q = np.asarray(special.gammainc_upper(self.r, z), float)
            return q, m * np.minimum(q + step, 1.0)
        p = np.asarray(special.gammainc_lower(self.r, z), float)
        return p, m * np.maximum(p - step, 0.0)

    def _density(self, x):
        pos = x > 0
        xs = np.where(pos, x, 1.0)
        logf = self.r * math.log(self.alpha) + (self.r - 1) * np.log(xs) - self.alpha * xs - special.lgamma(self.r)
        return np.where(pos, np.exp(logf), 0.0)

    def upper(self, tail: float = 1e-12) -> float:
        # both the tail mass and E[(W-x)^+] decay like the Gamma(r+1) tail
        x = (self.r + 1) / self.alpha
        while float(self.sf(x)) > tail or float(self.excess(x)) > tail:
            x *= 1.25
        return x

    def quantile(self, u):
        ua = _arr(u)
        if np.any((ua <= 0) | (ua >= 1)):
            raise DistError("quantile: u must lie in (0, 1)")
        hi = np.full(ua.shape, self.upper(min(1e-15, float(np.min(1 - ua)) * 1e-3)))
        # P(r, z) <= z^r / Gamma(r+1), so this point never lies above the quantile
        lo = np.minimum(np.exp((np.log(ua) + special.lgamma(self.r + 1.0)) / self.r) / self.alpha, hi)
        lo = np.maximum(lo, 1e-300)
        # bisection on log x to a tight bracket, Newton to finish
        for _ in range(40):
            mid = np.sqrt(lo * hi)
            ge = _arr(self.cdf(mid)) >= ua
            hi = np.where(ge, mid, hi)
            lo = np.where(ge, lo, mid)
        x = np.sqrt(lo * hi)
        for _ in range(8):
            f = self._density(x)
            step = np.where(f > 0, (_arr(self.cdf(x)) - ua) / np.where(f > 0, f, 1.0), 0.0)
            x = np.clip(x - step, lo, hi)
        return _out(x, u)

    def log_mgf(self, theta: float) -> float:
        if theta >= self.alpha:
            return math.inf
        return -self.r * math.log1p(-theta / self.alpha)

    def _sample(self, rng, n):
        return rng.gamma(self.r, 1.0 / self.alpha, size=n)


@register("exponential", "exp")
@dataclass(frozen=True)
class Exponential(Dist):
    alpha: float

    def __post_init__(self):
        _finite_pos("exponential", self.alpha, "rate")

    @cached_property
    def _g(self) -> Gamma:
        return Gamma(1.0, self.alpha)

    def raw_moment(self, k):
        return math.factorial(k) / self.alpha**k

    def moments(self):
        return 1.0 / self.alpha, 1.0 / self.alpha**2

    def _pm(self, k, x):
        return self._g._pm(k, x)

    def _tm(self, k, x):
        return self._g._tm(k, x)

    def _density(self, x):
        return np.where(x >= 0, self.alpha * np.exp(-self.alpha * np.maximum(x, 0.0)), 0.0)

    def cdf(self, x):
        xa = np.maximum(_arr(x), 0.0)
        return _out(-np.expm1(-self.alpha * xa), x)

    def sf(self, x):
        xa = np.maximum(_arr(x), 0.0)
        return _out(np.exp(-self.alpha * xa), x)

    def upper(self, tail=1e-12):
        return self._g.upper(tail)

    def quantile(self, u):
        ua = _arr(u)
        if np.any((ua <= 0) | (ua >= 1)):
            raise DistError("quantile: u must lie in (0, 1)")
        return _out(-np.log1p(-ua) / self.alpha, u)

    def log_mgf(self, theta):
        return self._g.log_mgf(theta)

    def _sample(self, rng, n):
        return rng.exponential(1.0 / self.alpha, size=n)


@register("uniform")
@dataclass(frozen=True)
class Uniform(Dist):
    a: float
    b: float

    def __post_init__(self):
        _require(math.isfinite(self.a) and self.a >= 0, f"uniform: a must be >= 0 (got {self.a!r})")
        _require(math.isfinite(self.b) and self.b > self.a, "uniform: b must be > a")

    @property
    def lower(self):
        return self.a

    def breakpoints(self):
        return np.array([self.a, self.b])

    def raw_moment(self, k):
        return (self.b ** (k + 1) - self.a ** (k + 1)) / ((k + 1) * (self.b - self.a))

    def _pm(self, k, x):
        xc = np.clip(x, self.a, self.b)
        return (xc ** (k + 1) - self.a ** (k + 1)) / ((k + 1) * (self.b - self.a))

    def _tm(self, k, x):
        xc = np.clip(x, self.a, self.b)
        return (self.b ** (k + 1) - xc ** (k + 1)) / ((k + 1) * (self.b - self.a))

    def _density(self, x):
        return np.where((x >= self.a) & (x <= self.b), 1.0 / (self.b - self.a), 0.0)

    def upper(self, tail=1e-12):
        return self.b

    def quantile(self, u):
        ua = _arr(u)
        if np.any((ua <= 0) | (ua >= 1)):
            raise DistError("quantile: u must lie in (0, 1)")
        return _out(self.a + ua * (self.b - self.a), u)

    def _sample(self, rng, n):
        return rng.uniform(self.a, self.b, size=n)


@register("gamma_levy_jump", "levy_jump")
@dataclass(frozen=True)
class GammaLevyJump(Dist):
    """Gamma-process Levy measure ``e^{-x}/x dx`` restricted to ``[delta, inf)``, normalized."""

    delta: float

    def __post_init__(self):
        _finite_pos("gamma_levy_jump", self.delta, "delta")

    @cached_property
    def total_rate(self) -> float:
        """Normalizer ``int_delta^inf e^{-x}/x dx = E1(delta)``."""
        return float(special.exp1(self.delta))

    @property
    def lower(self):
        return self.delta

    def raw_moment(self, k):
        if k == 0:
            return 1.0
        return math.gamma(k) * special.gammainc_upper(float(k), self.delta) / self.total_rate

    def _pm(self, k, x):
        xc = np.maximum(x, self.delta)
        if k == 0:
            return (self.total_rate - special.exp1(xc)) / self.total_rate
        return math.gamma(k) * (special.gammainc_upper(float(k), self.delta) - special.gammainc_upper(float(k), xc)) / self.total_rate

    def _tm(self, k, x):
        xc = np.maximum(x, self.delta)
        if k == 0:
            return special.exp1(xc) / self.total_rate
        return math.gamma(k) * special.gammainc_upper(float(k), xc) / self.total_rate

    def _density(self, x):
        ok = x >= self.delta
        xs = np.where(ok, x, 1.0)
        return np.where(ok, np.exp(-xs) / (self.total_rate * xs), 0.0)

    def log_mgf(self, theta: float) -> float:
        if theta >= 1.0:
            return math.inf
        return math.log(float(special.exp1(self.delta * (1.0 - theta))) / self.total_rate)

    def _sample(self, rng, n):
        # two-piece rejection under the envelope e^{-delta}/x on [delta, 1)
        # and e^{-x}/start on [start, inf); pieces are picked by envelope mass
        d = self.delta
        out = np.empty(n)
        filled = 0
        start = max(d, 1.0)
        env_low = math.exp(-d) * math.log(1.0 / d) if d < 1.0 else 0.0
        env_high = math.exp(-start) / start
        p_low = env_low / (env_low + env_high)
        while filled < n:
            m = max(2 * (n - filled), 64)
            low = rng.random(m) < p_low
            u = rng.random(m)
            v = rng.random(m)
            cand = np.empty(m)
            acc = np.empty(m, dtype=bool)
            cand[low] = d * (1.0 / d) ** u[low]
            acc[low] = v[low] <= np.exp(-(cand[low] - d))
            hi = ~low
            cand[hi] = start - np.log1p(-u[hi])
            acc[hi] = v[hi] <= start / cand[hi]
            got = cand[acc][: n - filled]
            out[filled : filled + got.size] = got
            filled += got.size
        return out


# ---------------------------------------------------------------------------
# atom laws


class _AtomLaw(Dist):
    discrete: ClassVar[bool] = True

    def _build_table(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    @cached_property
    def _table(self) -> tuple[np.ndarray, np.ndarray]:
        locs, masses = self._build_table()
        keep = masses > 0
        return np.asarray(locs[keep], dtype=float), np.asarray(masses[keep], dtype=float)

    @cached_property
    def _sums(self) -> dict[int, tuple[np.ndarray, np.ndarray]]:
        return {}

    def _cum(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        got = self._sums.get(k)
        if got is None:
            locs, masses = self._table
            w = masses * locs**k if k else masses
            head = np.concatenate([[0.0], np.cumsum(w)])
            tail = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
            got = (head, tail)
            self._sums[k] = got
        return got

    def atoms(self):
        return self._table

    @property
    def lower(self):
        locs, _ = self._table
        return float(locs[0])

    def breakpoints(self):
        return self._table[0]

    def raw_moment(self, k):
        return float(self._cum(k)[0][-1])

    def _pm(self, k, x):
        locs, _ = self._table
        return self._cum(k)[0][np.searchsorted(locs, x, side="right")]

    def _tm(self, k, x):
        locs, _ = self._table
        return self._cum(k)[1][np.searchsorted(locs, x, side="right")]

    def upper(self, tail=1e-12):
        return float(self._table[0][-1])

    def _sample(self, rng, n):
        locs, masses = self._table
        cum = np.cumsum(masses)
        idx = np.searchsorted(cum, rng.random(n) * cum[-1], side="right")
        return locs[np.clip(idx, 0, locs.size - 1)]


def _trim(pmf: np.ndarray) -> np.ndarray:
    # cut trailing atoms once the mass beyond them is negligible
    tail = np.cumsum(pmf[::-1])[::-1]
    keep = np.nonzero(tail > ATOM_TAIL)[0]
    n = (keep[-1] + 1) if keep.size else 1
    return pmf[: max(n, 1)]


@register("poisson")
@dataclass(frozen=True)
class Poisson(_AtomLaw):
    lam: float

    def __post_init__(self):
        _finite_pos("poisson", self.lam, "lambda")

    def _build_table(self):
        n = int(self.lam + 40.0 * math.sqrt(self.lam) + 60)
        i = np.arange(n + 1, dtype=float)
        logp = i * math.log(self.lam) - self.lam - special.lgamma(i + 1.0)
        pmf = _trim(np.exp(logp))
        return np.arange(pmf.size, dtype=float), pmf

    def moments(self):
        return self.lam, self.lam

    def _sample(self, rng, n):
        return rng.poisson(self.lam, size=n).astype(float)


@register("geometric")
@dataclass(frozen=True)
class Geometric(_AtomLaw):
    """Mass ``p (1-p)^k`` on ``k = 0, 1, 2, ...``."""

    p: float

    def __post_init__(self):
        _open_unit("geometric", self.p)

    def _build_table(self):
        n = int(math.ceil(math.log(ATOM_TAIL * 1e-2) / math.log1p(-self.p))) + 2
        k = np.arange(n, dtype=float)
        return k, self.p * np.exp(k * math.log1p(-self.p))

    def moments(self):
        q = 1.0 - self.p
        return q / self.p, q / self.p**2

    def _sample(self, rng, n):
        return (rng.geometric(self.p, size=n) - 1).astype(float)


@register("negative_binomial", "nb")
@dataclass(frozen=True)
class NegativeBinomial(_AtomLaw):
    """Mass ``Gamma(kappa+i)/(Gamma(kappa) i!) p^kappa (1-p)^i`` on ``i >= 0``."""

    kappa: float
    p: float

    def __post_init__(self):
        _finite_pos("negative_binomial", self.kappa, "kappa")
        _open_unit("negative_binomial", self.p)

    def _build_table(self):
        m, v = self.moments()
        n = int(m + 60.0 * math.sqrt(v) + 200)
        i = np.arange(n + 1, dtype=float)
        logp = (
            special.lgamma(self.kappa + i)
            - special.lgamma(self.kappa)
            - special.lgamma(i + 1.0)
            + self.kappa * math.log(self.p)
            + i * math.log1p(-self.p)
        )
        pmf = _trim(np.exp(logp))
        return np.arange(pmf.size, dtype=float), pmf

    def moments(self):
        q = 1.0 - self.p
        return self.kappa * q / self.p, self.kappa * q / self.p**2

    def _sample(self, rng, n):
        return rng.negative_binomial(self.kappa, self.p, size=n).astype(float)


@register("logarithmic")
@dataclass(frozen=True)
class Logarithmic(_AtomLaw):
    """Mass ``-(1-p)^i / (i ln p)`` on ``i >= 1``."""

    p: float

    def __post_init__(self):
        _open_unit("logarithmic", self.p)

    def _build_table(self):
        q = 1.0 - self.p
        c = -1.0 / math.log(self.p)
        n = int(math.ceil(math.log(ATOM_TAIL * 1e-2 * self.p) / math.log(q))) + 2
        i = np.arange(1, n + 1, dtype=float)
        return i, c * np.exp(i * math.log(q)) / i

    def moments(self):
        lp = math.log(self.p)
        m1 = -(1.0 - self.p) / (self.p * lp)
        m2 = -(1.0 - self.p) / (self.p**2 * lp)
        return m1, m2 - m1 * m1

    def _sample(self, rng, n):
        # inversion of the tabulated mass function
        return super()._sample(rng, n)


@register("discrete")
@dataclass(frozen=True)
class Discrete(_AtomLaw):
    """Finite atom law."""

    values: tuple
    probs: tuple

    def __post_init__(self):
        v = tuple(float(x) for x in np.atleast_1d(self.values))
        p = tuple(float(x) for x in np.atleast_1d(self.probs))
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "probs", p)
        _require(len(v) == len(p) and len(v) > 0, "discrete: values and probs must have equal, nonzero length")
        _require(all(math.isfinite(x) and x >= 0 for x in v), "discrete: values must be finite and >= 0")
        _require(all(x >= 0 for x in p), "discrete: probs must be >= 0")
        _require(abs(sum(p) - 1.0) <= 1e-9, "discrete: probs must sum to 1")

    def _build_table(self):
        v = np.asarray(self.values)
        p = np.asarray(self.probs)
        order = np.argsort(v, kind="stable")
        v, p = v[order], p[order]
        uniq, inv = np.unique(v, return_inverse=True)
        merged = np.zeros(uniq.size)
        np.add.at(merged, inv, p)
        return uniq, merged / merged.sum()


def point_mass(c: float) -> Discrete:
    return Discrete((float(c),), (1.0,))


@register("empirical")
@dataclass(frozen=True)
class Empirical(_AtomLaw):
    """Equal-weight law on a sample; stored sorted."""

    samples: tuple

    def __post_init__(self):
        s = np.sort(np.asarray(self.samples, dtype=float).ravel())
        _require(s.size > 0, "empirical: need at least one sample")
        _require(bool(np.all(np.isfinite(s))) and s[0] >= 0, "empirical: samples must be finite and >= 0")
        object.__setattr__(self, "samples", tuple(s.tolist()))

    def _build_table(self):
        uniq, counts = np.unique(np.asarray(self.samples), return_counts=True)
        return uniq, counts / counts.sum()


# ---------------------------------------------------------------------------
# composite laws


@register("scaled")
@dataclass(frozen=True)
class Scaled(Dist):
    """Law of ``c * X``."""

    c: float
    inner: Dist

    def __post_init__(self):
        _finite_pos("scaled", self.c, "c")
        _require(isinstance(self.inner, Dist), "scaled: inner must be a distribution")

    @property
    def discrete(self):  # type: ignore[override]
        return self.inner.discrete

    @property
    def is_numeric(self):
        return self.inner.is_numeric

    @property
    def lower(self):
        return self.c * self.inner.lower

    def _scaled_points(self, pts: np.ndarray) -> np.ndarray:
        # the smallest float x with fl(x / c) >= pt, so that evaluating the
        # inner law at x / c switches on each atom exactly at its listed location
        pts = np.asarray(pts, dtype=float)
        x = self.c * pts
        for _ in range(4):
            low = x / self.c < pts
            if not low.any():
                break
            x = np.where(low, np.nextafter(x, np.inf), x)
        for _ in range(4):
            prev = np.nextafter(x, -np.inf)
            ok = prev / self.c >= pts
            if not ok.any():
                break
            x = np.where(ok, prev, x)
        return x

    def breakpoints(self):
        return self._scaled_points(self.inner.breakpoints())

    @cached_property
    def _atoms(self):
        locs, masses = self.inner.atoms()
        return self._scaled_points(locs), masses

    def atoms(self):
        return self._atoms

    def raw_moment(self, k):
        return self.c**k * self.inner.raw_moment(k)

    def moments(self):
        m, v = self.inner.moments()
        return self.c * m, self.c**2 * v

    def _pm(self, k, x):
        return self.c**k * self.inner._pm(k, x / self.c)

    def _tm(self, k, x):
        return self.c**k * self.inner._tm(k, x / self.c)

    def cdf(self, x):
        return self.inner.cdf(np.asarray(x, dtype=float) / self.c)

    def sf(self, x):
        return self.inner.sf(np.asarray(x, dtype=float) / self.c)

    def _density(self, x):
        return self.inner._density(x / self.c) / self.c

    def upper(self, tail=1e-12):
        return self.c * self.inner.upper(tail / self.c)

    def quantile(self, u):
        return self.c * self.inner.quantile(u)

    def log_mgf(self, theta):
        return self.inner.log_mgf(theta * self.c)

    def _sample(self, rng, n):
        return self.c * self.inner.sample(rng, n)


class _Resolved(Dist):
    """A law evaluated through an equivalent, resolved representation."""

    @property
    def resolved(self) -> Dist:
        return self._resolved

    @cached_property
    def _resolved(self) -> Dist:
        return self._resolve()

    def _resolve(self) -> Dist:
        raise NotImplementedError

    @property
    def is_numeric(self):
        return self.resolved.is_numeric

    @property
    def discrete(self):  # type: ignore[override]
        return self.resolved.discrete

    @property
    def lower(self):
        return self.resolved.lower

    def breakpoints(self):
        return self.resolved.breakpoints()

    def atoms(self):
        return self.resolved.atoms()

    def raw_moment(self, k):
        return self.resolved.raw_moment(k)

    def _pm(self, k, x):
        return self.resolved._pm(k, x)

    def _tm(self, k, x):
        return self.resolved._tm(k, x)

    def _density(self, x):
        return self.resolved._density(x)

    def mass(self, x):
        return self.resolved.mass(x)

    def cdf(self, x):
        return self.resolved.cdf(x)

    def sf(self, x):
        return self.resolved.sf(x)

    def upper(self, tail=1e-12):
        return self.resolved.upper(tail)

    def quantile(self, u):
        return self.resolved.quantile(u)


@register("convolution", "conv")
@dataclass(frozen=True)
class Convolution(_Resolved):
    """Law of a sum of independent parts."""

    parts: tuple

    def __post_init__(self):
        parts = tuple(self.parts)
        object.__setattr__(self, "parts", parts)
        _require(len(parts) >= 1, "convolution: need at least one part")
        _require(all(isinstance(p, Dist) for p in parts), "convolution: parts must be distributions")

    def moments(self):
        ms = [p.moments() for p in self.parts]
        return sum(m for m, _ in ms), sum(v for _, v in ms)

    def _resolve(self):
        from .numeric import convolve_all

        return convolve_all(self.parts)

    def log_mgf(self, theta):
        return sum(p.log_mgf(theta) for p in self.parts)

    def _sample(self, rng, n):
        total = np.zeros(n)
        for p in self.parts:
            total += p.sample(rng, n)
        return total


@register("compound_poisson", "cp")
@dataclass(frozen=True)
class CompoundPoisson(_Resolved):
    """Law of ``sum_{i <= N} X_i`` with ``N ~ Poisson(lam)`` independent of i.i.d. jumps."""

    lam: float
    jump: Dist

    def __post_init__(self):
        _finite_pos("compound_poisson", self.lam, "lambda")
        _require(isinstance(self.jump, Dist), "compound_poisson: jump must be a distribution")

    def moments(self):
        return self.lam * self.jump.raw_moment(1), self.lam * self.jump.raw_moment(2)

    def _resolve(self):
        from .compound import resolve_compound

        return resolve_compound(self)

    def log_mgf(self, theta):
        lm = self.jump.log_mgf(theta)
        return self.lam * math.expm1(lm) if math.isfinite(lm) else math.inf

    def _sample(self, rng, n):
        counts = rng.poisson(self.lam, size=n)
        total = int(counts.sum())
        out = np.zeros(n)
        if total:
            jumps = self.jump.sample(rng, total)
            owner = np.repeat(np.arange(n), counts)
            out = np.bincount(owner, weights=jumps, minlength=n)
        return out


@register("numeric")
@dataclass(frozen=True, eq=False)
class Numeric(Dist):
    """Tabulated law; see :class:`steinlab.numeric.NumericLaw`."""

    law: Any

    @property
    def is_numeric(self):
        return True

    @property
    def discrete(self):  # type: ignore[override]
        return self.law.knots.size == 0

    @property
    def lower(self):
        return self.law.lower

    def breakpoints(self):
        return self.law.breakpoints()

    def atoms(self):
        return self.law.atom_locs, self.law.atom_masses

    def raw_moment(self, k):
        return self.law.total_moment(k)

    def _pm(self, k, x):
        return self.law.partial_moment(k, x)

    def _tm(self, k, x):
        return self.law.tail_moment(k, x)

    def _density(self, x):
        return self.law.cont_density(x)

    def upper(self, tail=1e-12):
        return self.law.upper

    def params(self):
        return {"law": self.law.to_json()}


# ---------------------------------------------------------------------------
# module-level operations


def moments(d: Dist) -> tuple[float, float]:
    m, v = d.moments()
    if not (math.isfinite(m) and math.isfinite(v)):
        raise DistError(f"{d.family}: moments are not finite")
    return m, v


def cdf(d: Dist, x):
    return d.cdf(x)


def quantile(d: Dist, u):
    return d.quantile(u)


def density_or_mass(d: Dist, x):
    """Atom mass at ``x`` if ``x`` is an atom, else the continuous density."""
    xa = _arr(x)
    m = _arr(d.mass(xa))
    out = np.where(m > 0, m, d._density(xa))
    return _out(out, x)


def make_rng(seed: int | np.random.SeedSequence = 0) -> np.random.Generator:
    """Philox (counter-based) generator; the one RNG used everywhere."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(ss))


def split_rng(seed: int, k: int) -> list[np.random.Generator]:
    """``k`` independent streams derived from a master seed via SeedSequence.spawn."""
    return [make_rng(child) for child in np.random.SeedSequence(int(seed)).spawn(k)]


def sample(d: Dist, seed: int | np.random.Generator, n: int) -> np.ndarray:
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    return d.sample(rng, n)


# ---------------------------------------------------------------------------
# spec text format
#
#   spec  := family [':' arg (',' arg)*]
#   arg   := key '=' value
#   value := number | '(' spec ')' | '[' item (';' item)* ']'
#   item  := number | spec | '(' spec ')'


def _fmt_num(v: float) -> str:
    return repr(float(v))


def format_dist(d: Dist) -> str:
    if isinstance(d, Numeric):
        raise DistError("numeric laws have no text form; use dist_to_json")
    parts = []
    for key, val in d.params().items():
        parts.append(f"{key}={_fmt_value(val)}")
    return d.family + (":" + ",".join(parts) if parts else "")


def _fmt_value(val) -> str:
    if isinstance(val, Dist):
        return f"({format_dist(val)})"
    if isinstance(val, (tuple, list)):
        return "[" + ";".join(format_dist(v) if isinstance(v, Dist) else _fmt_num(v) for v in val) + "]"
    return _fmt_num(val)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg: str):
        raise DistSpecError(msg, self.pos)

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def expect(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def ident(self) -> str:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isalnum() or self.text[self.pos] == "_"):
            self.pos += 1
        if start == self.pos:
            self.error("expected a name")
        return self.text[start : self.pos]

    def number(self) -> float:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in ",;)]":
            self.pos += 1
        raw = self.text[start : self.pos].strip()
        try:
            return float(raw)
        except ValueError:
            self.pos = start
            self.error(f"expected a number, got {raw!r}")
        raise AssertionError  # pragma: no cover

    def spec(self) -> Dist:
        start = self.pos
        name = self.ident().lower()
        cls = Discrete if name == "point" else _FAMILIES.get(name)
        if cls is None or cls is Numeric:
            self.pos = start
            self.error(f"unknown family {name!r}")
        args: dict[str, Any] = {}
        if self.peek() == ":":
            self.pos += 1
            while True:
                key = self.ident()
                self.expect("=")
                args[key] = self.value()
                if self.peek() == ",":
                    self.pos += 1
                    continue
                break
        return _construct(cls, name, args, start)

    def value(self):
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            d = self.spec()
            self.expect(")")
            return d
        if ch == "[":
            self.pos += 1
            items = []
            while True:
                items.append(self.item())
                if self.peek() == ";":
                    self.pos += 1
                    continue
                break
            self.expect("]")
            return items
        return self.number()

    def item(self):
        ch = self.peek()
        if ch == "(":
            return self.value()
        if ch.isalpha():
            return self.spec()
        return self.number()


def _construct(cls, name: str, args: dict[str, Any], pos: int) -> Dist:
    if name == "point":
        # point:c=x is shorthand for a one-atom discrete law
        if set(args) != {"c"}:
            raise DistSpecError("point: expects exactly the parameter c", pos)
        return point_mass(args["c"])
    names = [f.name for f in fields(cls)]
    unknown = set(args) - set(names)
    if unknown:
        raise DistSpecError(f"{cls.family}: unknown parameter(s) {sorted(unknown)}", pos)
    missing = [n for n in names if n not in args]
    if missing:
        raise DistSpecError(f"{cls.family}: missing parameter(s) {missing}", pos)
    try:
        return cls(**{k: (tuple(v) if isinstance(v, list) else v) for k, v in args.items()})
    except TypeError as exc:
        raise DistSpecError(f"{cls.family}: {exc}", pos) from exc


def parse_dist(text: str) -> Dist:
    """Parse ``family:key=val,...``; see the grammar comment above."""
    p = _Parser(text)
    d = p.spec()
    if p.peek():
        p.error("unexpected trailing text")
    return d


# ---------------------------------------------------------------------------
# JSON form


def dist_to_json(d: Dist) -> dict[str, Any]:
    out: dict[str, Any] = {"family": d.family}
    for key, val in d.params().items():
        if isinstance(val, Dist):
            out[key] = dist_to_json(val)
        elif isinstance(val, (tuple, list)):
            out[key] = [dist_to_json(v) if isinstance(v, Dist) else float(v) for v in val]
        elif isinstance(val, dict):
            out[key] = val
        else:
            out[key] = float(val)
    return out


def dist_from_json(obj: dict[str, Any]) -> Dist:
    obj = dict(obj)
    name = obj.pop("family", None)
    cls = _FAMILIES.get(str(name))
    if cls is None:
        raise DistError(f"unknown family {name!r}")
    if cls is Numeric:
        from .numeric import NumericLaw

        return Numeric(NumericLaw.from_json(obj["law"]))
    args = {}
    for key, val in obj.items():
        if isinstance(val, dict):
            args[key] = dist_from_json(val)
        elif isinstance(val, list):
            args[key] = tuple(dist_from_json(v) if isinstance(v, dict) else float(v) for v in val)
        else:
            args[key] = float(val)
    return cls(**args)
