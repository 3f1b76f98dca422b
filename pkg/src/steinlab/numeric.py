"""Tabulated laws and direct convolution.

A :class:`NumericLaw` stores a list of atoms plus a continuous part given by
CDF values and one-sided densities at knots. Between knots the CDF is the
cubic Hermite interpolant, made monotone by Fritsch-Carlson limiting, so the
density is its derivative and partial moments are exact integrals of the
interpolant (Gauss-Legendre of sufficient order per panel).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .distributions import (
    Discrete,
    Dist,
    DistError,
    Exponential,
    Gamma,
    Numeric,
    Scaled,
)

_ATOM_MERGE_RTOL = 1e-12


@lru_cache(maxsize=None)
def gauss_legendre(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (x + 1.0), 0.5 * w


def merge_atoms(locs: np.ndarray, masses: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort atoms and merge locations equal up to rounding."""
    locs = np.asarray(locs, dtype=float)
    masses = np.asarray(masses, dtype=float)
    if locs.size == 0:
        return locs, masses
    order = np.argsort(locs, kind="stable")
    locs, masses = locs[order], masses[order]
    new_group = np.empty(locs.size, dtype=bool)
    new_group[0] = True
    new_group[1:] = np.diff(locs) > _ATOM_MERGE_RTOL * np.maximum(1.0, np.abs(locs[1:]))
    starts = np.nonzero(new_group)[0]
    merged_m = np.add.reduceat(masses, starts)
    merged_l = locs[starts]
    keep = merged_m > 0
    return merged_l[keep], merged_m[keep]


def _hermite_basis(t):
    t2 = t * t
    t3 = t2 * t
    return 2 * t3 - 3 * t2 + 1, t3 - 2 * t2 + t, -2 * t3 + 3 * t2, t3 - t2


def _hermite_dbasis(t):
    t2 = t * t
    return 6 * t2 - 6 * t, 3 * t2 - 4 * t + 1, -6 * t2 + 6 * t, 3 * t2 - 2 * t


def _limit_slopes(knots, ccdf, d0, d1):
    """Fritsch-Carlson: make each Hermite panel monotone."""
    h = np.diff(knots)
    delta = np.diff(ccdf) / h
    d0 = np.maximum(d0, 0.0)
    d1 = np.maximum(d1, 0.0)
    flat = delta <= 0
    d0 = np.where(flat, 0.0, d0)
    d1 = np.where(flat, 0.0, d1)
    safe = np.where(flat, 1.0, delta)
    a = d0 / safe
    b = d1 / safe
    s = a * a + b * b
    scale = np.where(s > 9.0, 3.0 / np.sqrt(np.where(s > 0, s, 1.0)), 1.0)
    return d0 * scale, d1 * scale


@dataclass(frozen=True, eq=False)
class NumericLaw:
    """Atoms plus a monotone piecewise-cubic continuous CDF.

    ``d_right[i]`` and ``d_left[i]`` are the densities at the left and right
    ends of panel ``i`` (right and left limits respectively). ``tol`` is the
    declared absolute CDF error and ``tail`` the mass dropped beyond the last
    knot.
    """

    knots: np.ndarray
    ccdf: np.ndarray
    d_right: np.ndarray
    d_left: np.ndarray
    atom_locs: np.ndarray
    atom_masses: np.ndarray
    tol: float = 1e-10
    tail: float = 0.0
    breaks: np.ndarray = field(default_factory=lambda: np.empty(0))
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, knots, ccdf, d_right, d_left, atom_locs=(), atom_masses=(), *, tol=1e-10, tail=0.0, breaks=()):
        knots = np.asarray(knots, dtype=float)
        ccdf = np.maximum.accumulate(np.clip(np.asarray(ccdf, dtype=float), 0.0, None)) if knots.size else np.empty(0)
        locs, masses = merge_atoms(np.asarray(atom_locs, dtype=float), np.asarray(atom_masses, dtype=float))
        if knots.size == 1:
            raise DistError("numeric law needs at least two knots for a continuous part")
        if knots.size:
            if np.any(np.diff(knots) <= 0):
                raise DistError("numeric law knots must be strictly increasing")
            d_right, d_left = _limit_slopes(knots, ccdf, np.asarray(d_right, float), np.asarray(d_left, float))
        else:
            d_right = d_left = np.empty(0)
        total = (ccdf[-1] if ccdf.size else 0.0) + masses.sum()
        if total > 1.0 + max(tol, 1e-9):
            raise DistError(f"numeric law has total mass {total} > 1")
        return cls(knots, ccdf, d_right, d_left, locs, masses, float(tol), float(tail), np.asarray(breaks, float))

    # -- structure ---------------------------------------------------
    @property
    def lower(self) -> float:
        cands = []
        if self.knots.size:
            cands.append(self.knots[0])
        if self.atom_locs.size:
            cands.append(self.atom_locs[0])
        return float(min(cands))

    @property
    def upper(self) -> float:
        cands = []
        if self.knots.size:
            cands.append(self.knots[-1])
        if self.atom_locs.size:
            cands.append(self.atom_locs[-1])
        return float(max(cands))

    def breakpoints(self) -> np.ndarray:
        pts = [self.atom_locs, self.breaks]
        if self.knots.size:
            pts.append(self.knots[[0, -1]])
        return np.unique(np.concatenate(pts))

    # -- continuous part ---------------------------------------------
    def _panel(self, x):
        i = np.searchsorted(self.knots, x, side="right") - 1
        return np.clip(i, 0, self.knots.size - 2)

    def _eval(self, x, derivative: bool):
        i = self._panel(x)
        x0 = self.knots[i]
        h = self.knots[i + 1] - x0
        t = np.clip((x - x0) / h, 0.0, 1.0)
        basis = _hermite_dbasis(t) if derivative else _hermite_basis(t)
        val = (
            self.ccdf[i] * basis[0]
            + h * self.d_right[i] * basis[1]
            + self.ccdf[i + 1] * basis[2]
            + h * self.d_left[i] * basis[3]
        )
        return val / h if derivative else val

    def cont_cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.knots.size == 0:
            return np.zeros(x.shape)
        val = self._eval(x, False)
        val = np.where(x < self.knots[0], 0.0, val)
        return np.where(x >= self.knots[-1], self.ccdf[-1], val)

    def cont_density(self, x):
        x = np.asarray(x, dtype=float)
        if self.knots.size == 0:
            return np.zeros(x.shape)
        val = self._eval(x, True)
        inside = (x >= self.knots[0]) & (x < self.knots[-1])
        return np.where(inside, np.maximum(val, 0.0), 0.0)

    def _gl_order(self, k: int) -> int:
        return max(3, (k + 4) // 2)

    def _panel_integrals(self, k: int, a, b, i):
        # int_a^b s^k c(s) ds with a, b inside panel i
        nodes, weights = gauss_legendre(self._gl_order(k))
        s = a[..., None] + (b - a)[..., None] * nodes
        x0 = self.knots[i][..., None]
        h = (self.knots[i + 1] - self.knots[i])[..., None]
        t = (s - x0) / h
        db = _hermite_dbasis(t)
        c = (
            self.ccdf[i][..., None] * db[0]
            + h * self.d_right[i][..., None] * db[1]
            + self.ccdf[i + 1][..., None] * db[2]
            + h * self.d_left[i][..., None] * db[3]
        ) / h
        return (b - a) * np.sum(weights * s**k * c, axis=-1)

    def _cum(self, k: int) -> np.ndarray:
        key = ("cum", k)
        got = self._cache.get(key)
        if got is None:
            if k == 0:
                got = self.ccdf.copy()
            else:
                idx = np.arange(self.knots.size - 1)
                parts = self._panel_integrals(k, self.knots[:-1], self.knots[1:], idx)
                got = np.concatenate([[0.0], np.cumsum(parts)])
            self._cache[key] = got
        return got

    def _atom_cum(self, k: int) -> np.ndarray:
        key = ("atoms", k)
        got = self._cache.get(key)
        if got is None:
            w = self.atom_masses * self.atom_locs**k if k else self.atom_masses
            got = np.concatenate([[0.0], np.cumsum(w)])
            self._cache[key] = got
        return got

    def cont_partial_moment(self, k: int, x):
        x = np.asarray(x, dtype=float)
        if self.knots.size == 0:
            return np.zeros(x.shape)
        if k == 0:
            return self.cont_cdf(x)
        cum = self._cum(k)
        xc = np.clip(x, self.knots[0], self.knots[-1])
        i = self._panel(xc)
        val = cum[i] + self._panel_integrals(k, self.knots[i], xc, i)
        return np.where(x >= self.knots[-1], cum[-1], val)

    # -- whole law ---------------------------------------------------
    def partial_moment(self, k: int, x):
        x = np.asarray(x, dtype=float)
        atoms = self._atom_cum(k)[np.searchsorted(self.atom_locs, x, side="right")]
        return atoms + self.cont_partial_moment(k, x)

    def total_moment(self, k: int) -> float:
        cont = float(self._cum(k)[-1]) if self.knots.size else 0.0
        return float(self._atom_cum(k)[-1]) + cont

    def tail_moment(self, k: int, x):
        return np.maximum(self.total_moment(k) - self.partial_moment(k, x), 0.0)

    # -- serialization -----------------------------------------------
    def to_json(self) -> dict:
        return {
            "knots": self.knots.tolist(),
            "ccdf": self.ccdf.tolist(),
            "d_right": self.d_right.tolist(),
            "d_left": self.d_left.tolist(),
            "atoms": [[float(a), float(m)] for a, m in zip(self.atom_locs, self.atom_masses)],
            "tol": self.tol,
            "tail": self.tail,
            "breaks": self.breaks.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "NumericLaw":
        atoms = np.asarray(obj.get("atoms", []), dtype=float).reshape(-1, 2)
        return cls.build(
            obj["knots"], obj["ccdf"], obj["d_right"], obj["d_left"], atoms[:, 0], atoms[:, 1],
            tol=obj.get("tol", 1e-10), tail=obj.get("tail", 0.0), breaks=obj.get("breaks", []),
        )


# ---------------------------------------------------------------------------
# adaptive tabulation


def tabulate(
    cdf_fn: Callable[[np.ndarray], np.ndarray],
    dens_fn: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    *,
    breaks: Sequence[float] = (),
    atoms: tuple[np.ndarray, np.ndarray] | None = None,
    tol: float = 1e-10,
    tail: float = 0.0,
    n_init: int = 65,
    max_knots: int = 400_000,
) -> NumericLaw:
    """Tabulate a continuous CDF part on ``[lo, hi]``.

    Panels are bisected until the Hermite interpolant matches ``cdf_fn`` at
    the panel midpoint within ``tol``. Knots at ``breaks`` get one-sided
    densities.
    """
    if not hi > lo:
        raise DistError("tabulate: need hi > lo")
    brk = np.asarray([b for b in breaks if lo < b < hi], dtype=float)
    knots = np.unique(np.concatenate([np.linspace(lo, hi, n_init), brk]))
    eps = 1e-12 * max(1.0, abs(hi))

    def one_sided(x):
        right = np.asarray(dens_fn(np.minimum(x + eps * np.isin(x, brk) + eps * (x == lo), hi)), float)
        left = np.asarray(dens_fn(np.maximum(x - eps * np.isin(x, brk) - eps * (x == hi), lo)), float)
        return right, left

    C = np.asarray(cdf_fn(knots), dtype=float)
    dr, dl = one_sided(knots)
    todo = np.ones(knots.size - 1, dtype=bool)
    worst = 0.0
    while todo.any():
        idx = np.nonzero(todo)[0]
        a, b = knots[idx], knots[idx + 1]
        mid = 0.5 * (a + b)
        h = b - a
        # Hermite prediction at the midpoint, without limiting (cheap check)
        pred = 0.5 * (C[idx] + C[idx + 1]) + h * (dr[idx] - dl[idx + 1]) / 8.0
        truth = np.asarray(cdf_fn(mid), dtype=float)
        err = np.abs(truth - pred)
        bad = err > tol
        tiny = h <= 1e-13 * max(1.0, abs(hi))
        stuck = bad & tiny
        if stuck.any():
            worst = max(worst, float(err[stuck].max()))
        split = bad & ~tiny
        if knots.size + split.sum() > max_knots:
            worst = max(worst, float(err[split].max()))
            break
        todo[:] = False
        if not split.any():
            break
        new_x = mid[split]
        new_c = truth[split]
        new_d = np.asarray(dens_fn(new_x), dtype=float)
        pos = idx[split] + 1
        knots = np.insert(knots, pos, new_x)
        C = np.insert(C, pos, new_c)
        dr = np.insert(dr, pos, new_d)
        dl = np.insert(dl, pos, new_d)
        todo = np.zeros(knots.size - 1, dtype=bool)
        # each split panel becomes two panels that need checking
        shift = np.arange(pos.size)
        left_child = idx[split] + shift
        todo[left_child] = True
        todo[left_child + 1] = True
    locs, masses = atoms if atoms is not None else (np.empty(0), np.empty(0))
    # store right densities at the left end of each panel, left densities at the right end
    return NumericLaw.build(knots, C, dr[:-1], dl[1:], locs, masses, tol=max(tol, worst), tail=tail, breaks=brk)


def _atom_cdf(d: Dist, x):
    locs, masses = d.atoms()
    if locs.size == 0:
        return np.zeros(np.shape(x))
    cum = np.concatenate([[0.0], np.cumsum(masses)])
    return cum[np.searchsorted(locs, x, side="right")]


def cont_cdf(d: Dist, x):
    """CDF of the continuous part (mass ``1 - sum(atoms)`` in total)."""
    x = np.asarray(x, dtype=float)
    if isinstance(d, Numeric):
        return d.law.cont_cdf(x)
    if d.discrete:
        return np.zeros(x.shape)
    locs, _ = d.atoms()
    if locs.size == 0:
        return np.asarray(d.cdf(x), dtype=float)
    return np.maximum(np.asarray(d.cdf(x), dtype=float) - _atom_cdf(d, x), 0.0)


def cont_mass(d: Dist) -> float:
    _, masses = d.atoms()
    return max(0.0, 1.0 - float(masses.sum()))


def to_numeric(d: Dist, tol: float = 1e-10, tail: float = 1e-12) -> NumericLaw:
    """Tabulate any law (atoms kept exactly)."""
    if isinstance(d, Numeric):
        return d.law
    locs, masses = d.atoms()
    if d.discrete:
        return NumericLaw.build([], [], [], [], locs, masses, tol=tol, tail=tail)
    lo, hi = d.lower, d.upper(tail)
    brk = d.breakpoints()
    return tabulate(lambda x: cont_cdf(d, x), d._density, lo, hi, breaks=brk, atoms=(locs, masses), tol=tol, tail=tail)


# ---------------------------------------------------------------------------
# convolution


def _graded_panels(a: float, b: float, levels: int = 16, ratio: float = 0.1) -> np.ndarray:
    # geometric grading toward both ends to absorb endpoint singularities
    g = ratio ** np.arange(levels, 0, -1)
    g = g[g < 0.5]
    pts = np.concatenate([[0.0], 0.5 * g, [0.5], 1.0 - 0.5 * g[::-1], [1.0]])
    return a + (b - a) * np.unique(pts)


def _segment_nodes(edges: np.ndarray, m: int = 8):
    nodes, weights = gauss_legendre(m)
    out_x, out_w = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        p = _graded_panels(a, b)
        h = np.diff(p)
        out_x.append((p[:-1, None] + h[:, None] * nodes).ravel())
        out_w.append((h[:, None] * weights).ravel())
    if not out_x:
        return np.empty(0), np.empty(0)
    return np.concatenate(out_x), np.concatenate(out_w)


def _support(d: Dist, tail: float) -> tuple[float, float]:
    return d.lower, d.upper(tail)


def _cont_breaks(d: Dist) -> np.ndarray:
    return np.asarray(d.breakpoints(), dtype=float)


def _mixed_sum(A: Dist, B: Dist, tol: float) -> Numeric:
    tail = min(tol, 1e-12)
    loA, hiA = _support(A, tail)
    loB, hiB = _support(B, tail)
    la, ma = A.atoms()
    lb, mb = B.atoms()
    qa, qb = cont_mass(A), cont_mass(B)
    bra, brb = _cont_breaks(A), _cont_breaks(B)
    cont_a = qa > 0 and not A.discrete
    cont_b = qb > 0 and not B.discrete
    lo, hi = loA + loB, hiA + hiB

    def integral(xs: np.ndarray, want_density: bool) -> np.ndarray:
        out = np.zeros(xs.size)
        if not (cont_a and cont_b):
            return out
        xs_all, ws_all, owner = [], [], []
        for j, x in enumerate(xs):
            lo_y = loB
            hi_y = min(hiB, x - loA)
            if hi_y <= lo_y:
                continue
            cuts = np.concatenate([[lo_y, hi_y], brb, x - bra])
            cuts = np.unique(cuts[(cuts >= lo_y) & (cuts <= hi_y)])
            ny, wy = _segment_nodes(cuts)
            xs_all.append(ny)
            ws_all.append(wy)
            owner.append(np.full(ny.size, j))
        if not xs_all:
            return out
        y = np.concatenate(xs_all)
        w = np.concatenate(ws_all)
        own = np.concatenate(owner)
        u = xs[own] - y
        first = A._density(u) if want_density else cont_cdf(A, u)
        vals = w * first * B._density(y)
        return np.bincount(own, weights=vals, minlength=xs.size)

    def atom_terms(xs: np.ndarray, want_density: bool) -> np.ndarray:
        out = np.zeros(xs.size)
        if lb.size and cont_a:
            u = xs[:, None] - lb[None, :]
            f = A._density(u) if want_density else cont_cdf(A, u)
            out += (f * mb).sum(axis=1)
        if la.size and cont_b:
            u = xs[:, None] - la[None, :]
            f = B._density(u) if want_density else cont_cdf(B, u)
            out += (f * ma).sum(axis=1)
        return out

    def cdf_fn(xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        return atom_terms(xs, False) + integral(xs, False)

    def dens_fn(xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        return atom_terms(xs, True) + integral(xs, True)

    locs = (la[:, None] + lb[None, :]).ravel() if la.size and lb.size else np.empty(0)
    masses = (ma[:, None] * mb[None, :]).ravel() if la.size and lb.size else np.empty(0)
    breaks = np.concatenate([(bra[:, None] + brb[None, :]).ravel(), bra + loB, brb + loA])
    law = tabulate(cdf_fn, dens_fn, lo, hi, breaks=np.unique(breaks), atoms=(locs, masses), tol=tol, tail=2 * tail)
    return Numeric(law)


def _as_gamma(d: Dist):
    if isinstance(d, Gamma):
        return d
    if isinstance(d, Exponential):
        return Gamma(1.0, d.alpha)
    return None


def convolve_pair(A: Dist, B: Dist, tol: float = 1e-10) -> Dist:
    """Law of ``A + B`` for independent ``A`` and ``B``."""
    ga, gb = _as_gamma(A), _as_gamma(B)
    if ga is not None and gb is not None and ga.alpha == gb.alpha:
        return Gamma(ga.r + gb.r, ga.alpha)
    if isinstance(A, Scaled) and isinstance(B, Scaled) and A.c == B.c:
        return Scaled(A.c, convolve_pair(A.inner, B.inner, tol / A.c))
    if A.discrete and B.discrete:
        la, ma = A.atoms()
        lb, mb = B.atoms()
        locs, masses = merge_atoms((la[:, None] + lb[None, :]).ravel(), (ma[:, None] * mb[None, :]).ravel())
        return Discrete(tuple(locs.tolist()), tuple((masses / masses.sum()).tolist()))
    return _mixed_sum(A, B, tol)


def convolve_all(parts: Sequence[Dist], tol: float = 1e-10) -> Dist:
    parts = list(parts)
    acc = parts[0]
    for p in parts[1:]:
        acc = convolve_pair(acc, p, tol)
    return acc


def mixture(weights: Sequence[float], laws: Sequence[Dist], tol: float = 1e-10) -> Numeric:
    """Tabulate a finite mixture of laws."""
    weights = np.asarray(weights, dtype=float)
    lo = min(d.lower for d in laws)
    hi = max(d.upper(1e-13) for d in laws)
    locs = np.concatenate([d.atoms()[0] for d in laws])
    masses = np.concatenate([w * d.atoms()[1] for w, d in zip(weights, laws)])
    cont = [(w, d) for w, d in zip(weights, laws) if not d.discrete]
    breaks = np.unique(np.concatenate([d.breakpoints() for d in laws]))

    def cdf_fn(x):
        return sum(w * cont_cdf(d, x) for w, d in cont) if cont else np.zeros(np.shape(x))

    def dens_fn(x):
        return sum(w * d._density(np.asarray(x, float)) for w, d in cont) if cont else np.zeros(np.shape(x))

    if not cont:
        return Numeric(NumericLaw.build([], [], [], [], locs, masses, tol=tol))
    cont_lo = min(d.lower for _, d in cont)
    return Numeric(tabulate(cdf_fn, dens_fn, cont_lo, hi, breaks=breaks, atoms=(locs, masses), tol=tol))
