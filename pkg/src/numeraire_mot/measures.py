"""Probability laws on (0, inf) and their distribution functionals.

Three variants share one interface: ``LogNormal`` (unit mean, closed forms),
``AtomList`` (finite support, right-continuous CDF) and ``TabulatedDensity``
(piecewise-linear density, renormalised and rescaled to unit mean on load).

Every functional comes with its complement (``sf`` for ``cdf``, ``G_tail`` for
``G``) computed without cancellation, because the coupling equations are
solved deep in both tails.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import optimize

from . import config
from .errors import AssumptionViolated, DomainError, MeanMismatch, NoDensity
from .numerics import (
    find_root_bracketed,
    find_roots_bracketed,
    normal_cdf,
    normal_pdf,
    normal_ppf,
    normal_sf,
)


def _positive(x):
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > 0)):
        raise DomainError("argument must be a positive real")
    return xa


def _probability(p, closed_right=False):
    pa = np.asarray(p, dtype=float)
    ok = (pa > 0) & ((pa <= 1) if closed_right else (pa < 1))
    if not np.all(ok):
        raise DomainError("probability argument must lie in (0, 1)")
    return pa


def _ret(y):
    return float(y) if np.ndim(y) == 0 else y


class Marginal(ABC):
    """A probability law on the positive half-line."""

    has_density = True

    @property
    @abstractmethod
    def mean(self) -> float: ...

    @property
    @abstractmethod
    def support(self) -> tuple[float, float]: ...

    @abstractmethod
    def pdf(self, x): ...

    @abstractmethod
    def cdf(self, x): ...

    @abstractmethod
    def sf(self, x): ...

    @abstractmethod
    def G(self, x):
        """Cumulated expectation: integral of y over (0, x]."""

    @abstractmethod
    def G_tail(self, x):
        """``mean - G(x)``, computed directly."""

    @abstractmethod
    def quantile(self, p): ...

    @abstractmethod
    def isf(self, p):
        """Inverse survival function: x with ``sf(x) = p``."""

    @abstractmethod
    def G_inv(self, g): ...

    @abstractmethod
    def G_tail_inv(self, t): ...

    def lower(self, q: float = config.TAIL_QUANTILE) -> float:
        return float(self.quantile(q))

    def upper(self, q: float = config.TAIL_QUANTILE) -> float:
        return float(self.isf(q))

    def call_price(self, strike):
        """E[(X - K)^+] = G_tail(K) - K sf(K)."""
        k = _positive(strike)
        return _ret(self.G_tail(k) - k * self.sf(k))

    def require_unit_mean(self, tol: float = config.MEAN_TOL) -> "Marginal":
        if abs(self.mean - 1.0) > tol:
            raise MeanMismatch(f"{self!r} has mean {self.mean!r}, expected 1")
        return self


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LogNormal(Marginal):
    """ln N(-sigma^2/2, sigma^2): the unit-mean log-normal law."""

    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError("sigma must be a positive real")

    @property
    def mean(self) -> float:
        return 1.0

    @property
    def support(self):
        return (0.0, math.inf)

    def _z(self, x):
        return (np.log(_positive(x)) + 0.5 * self.sigma**2) / self.sigma

    def pdf(self, x):
        xa = _positive(x)
        return _ret(normal_pdf(self._z(xa)) / (xa * self.sigma))

    def cdf(self, x):
        return _ret(normal_cdf(self._z(x)))

    def sf(self, x):
        return _ret(normal_sf(self._z(x)))

    def G(self, x):
        return _ret(normal_cdf(self._z(x) - self.sigma))

    def G_tail(self, x):
        return _ret(normal_sf(self._z(x) - self.sigma))

    def quantile(self, p):
        s = self.sigma
        return _ret(np.exp(s * normal_ppf(_probability(p)) - 0.5 * s * s))

    def isf(self, p):
        s = self.sigma
        return _ret(np.exp(-s * normal_ppf(_probability(p)) - 0.5 * s * s))

    def G_inv(self, g):
        s = self.sigma
        return _ret(np.exp(s * normal_ppf(_probability(g)) + 0.5 * s * s))

    def G_tail_inv(self, t):
        s = self.sigma
        return _ret(np.exp(-s * normal_ppf(_probability(t)) + 0.5 * s * s))


# --------------------------------------------------------------------------


class AtomList(Marginal):
    """Finitely supported law; right-continuous CDF."""

    has_density = False

    def __init__(self, points, weights):
        x = np.asarray(points, dtype=float).ravel()
        w = np.asarray(weights, dtype=float).ravel()
        if x.shape != w.shape or x.size == 0:
            raise ValueError("points and weights must be non-empty and of equal length")
        if np.any(~(x > 0)) or not np.all(np.isfinite(x)):
            raise DomainError("atoms must lie in (0, inf)")
        if np.any(w < 0):
            raise DomainError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > config.MASS_TOL:
            raise DomainError(f"weights sum to {w.sum()!r}, not 1")
        keep = w > 0
        x, w = x[keep], w[keep]
        order = np.argsort(x, kind="stable")
        x, w = x[order], w[order]
        ux, inv = np.unique(x, return_inverse=True)
        uw = np.zeros(ux.size)
        np.add.at(uw, inv, w)
        uw /= uw.sum()
        self.points = ux
        self.weights = uw
        self.points.setflags(write=False)
        self.weights.setflags(write=False)
        self._cw = np.concatenate([[0.0], np.cumsum(uw)])
        self._cw[-1] = 1.0
        self._tw = np.concatenate([np.cumsum(uw[::-1])[::-1], [0.0]])
        xw = ux * uw
        self._mean = float(xw.sum())
        self._cg = np.concatenate([[0.0], np.cumsum(xw)])
        self._tg = np.concatenate([np.cumsum(xw[::-1])[::-1], [0.0]])

    def __repr__(self):
        body = ", ".join(f"({a:.6g}, {b:.6g})" for a, b in zip(self.points, self.weights))
        return f"AtomList([{body}])"

    def __eq__(self, other):
        return (
            isinstance(other, AtomList)
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None

    @property
    def mean(self):
        return self._mean

    @property
    def support(self):
        return (float(self.points[0]), float(self.points[-1]))

    def pdf(self, x):
        raise NoDensity("an atom list has no density")

    def _idx(self, x):
        return np.searchsorted(self.points, _positive(x), side="right")

    def cdf(self, x):
        return _ret(self._cw[self._idx(x)])

    def sf(self, x):
        return _ret(self._tw[self._idx(x)])

    def G(self, x):
        return _ret(self._cg[self._idx(x)])

    def G_tail(self, x):
        return _ret(self._tg[self._idx(x)])

    def quantile(self, p):
        # smallest atom with F >= p
        k = np.searchsorted(self._cw[1:], _probability(p), side="left")
        return _ret(self.points[np.minimum(k, self.points.size - 1)])

    def isf(self, p):
        # smallest atom with sf <= p
        pa = _probability(p)
        k = np.searchsorted(-self._tw[1:], -pa, side="left")
        return _ret(self.points[np.minimum(k, self.points.size - 1)])

    def G_inv(self, g):
        ga = _probability(g, closed_right=True) * self._mean
        k = np.searchsorted(self._cg[1:], ga, side="left")
        return _ret(self.points[np.minimum(k, self.points.size - 1)])

    def G_tail_inv(self, t):
        ta = _probability(t, closed_right=True) * self._mean
        k = np.searchsorted(-self._tg[1:], -ta, side="left")
        return _ret(self.points[np.minimum(k, self.points.size - 1)])

    def lower(self, q=config.TAIL_QUANTILE):
        return float(self.points[0])

    def upper(self, q=config.TAIL_QUANTILE):
        return float(self.points[-1])


# --------------------------------------------------------------------------


class _PiecewiseLinearDensity:
    """Exact functionals of a piecewise-linear density on [x_0, x_n]."""

    def __init__(self, x, p):
        self.x = x
        self.p = p
        self.h = np.diff(x)
        self.s = np.diff(p) / self.h
        seg_mass = self._mass(np.arange(self.h.size), self.h)
        seg_mom = self._moment(np.arange(self.h.size), self.h)
        self.cm = np.concatenate([[0.0], np.cumsum(seg_mass)])
        self.tm = np.concatenate([np.cumsum(seg_mass[::-1])[::-1], [0.0]])
        self.cg = np.concatenate([[0.0], np.cumsum(seg_mom)])
        self.tg = np.concatenate([np.cumsum(seg_mom[::-1])[::-1], [0.0]])

    def _mass(self, k, d):
        return self.p[k] * d + 0.5 * self.s[k] * d * d

    def _moment(self, k, d):
        xk, pk, sk = self.x[k], self.p[k], self.s[k]
        return xk * pk * d + 0.5 * (xk * sk + pk) * d * d + sk * d**3 / 3.0

    def _seg(self, x):
        k = np.searchsorted(self.x, x, side="right") - 1
        return np.clip(k, 0, self.h.size - 1)

    def pdf(self, x):
        return np.interp(x, self.x, self.p, left=0.0, right=0.0)

    def _piece(self, x, cum, tail, seg_fn):
        x = np.asarray(x, dtype=float)
        k = self._seg(x)
        d = np.clip(x - self.x[k], 0.0, self.h[k])
        part = seg_fn(k, d)
        full = seg_fn(k, self.h[k])
        left = cum[k] + part
        right = tail[k + 1] + (full - part)
        return k, left, right

    def cdf(self, x):
        _, left, _ = self._piece(x, self.cm, self.tm, self._mass)
        return np.where(x < self.x[0], 0.0, np.where(x >= self.x[-1], 1.0, left))

    def sf(self, x):
        _, _, right = self._piece(x, self.cm, self.tm, self._mass)
        return np.where(x < self.x[0], 1.0, np.where(x >= self.x[-1], 0.0, right))

    def G(self, x):
        _, left, _ = self._piece(x, self.cg, self.tg, self._moment)
        return np.where(x < self.x[0], 0.0, np.where(x >= self.x[-1], self.cg[-1], left))

    def G_tail(self, x):
        _, _, right = self._piece(x, self.cg, self.tg, self._moment)
        return np.where(x < self.x[0], self.cg[-1], np.where(x >= self.x[-1], 0.0, right))

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        k = np.clip(np.searchsorted(self.cm, p, side="left") - 1, 0, self.h.size - 1)
        r = np.clip(p - self.cm[k], 0.0, None)
        pk, sk = self.p[k], self.s[k]
        disc = np.sqrt(np.maximum(pk * pk + 2.0 * sk * r, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(pk + disc > 0, 2.0 * r / (pk + disc), 0.0)
        return self.x[k] + np.clip(d, 0.0, self.h[k])

    def isf(self, t):
        t = np.asarray(t, dtype=float)
        # segment k with tm[k+1] < t <= tm[k]
        k = np.clip(np.searchsorted(-self.tm, -t, side="left") - 1, 0, self.h.size - 1)
        r = np.clip(t - self.tm[k + 1], 0.0, None)
        pk1, sk = self.p[k + 1], self.s[k]
        disc = np.sqrt(np.maximum(pk1 * pk1 - 2.0 * sk * r, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            e = np.where(pk1 + disc > 0, 2.0 * r / (pk1 + disc), 0.0)
        return self.x[k + 1] - np.clip(e, 0.0, self.h[k])

    def _invert_moment(self, target, from_right):
        target = np.asarray(target, dtype=float)
        if from_right:
            k = np.clip(np.searchsorted(-self.tg, -target, side="left") - 1, 0, self.h.size - 1)
            r = target - self.tg[k + 1]
            full = self._moment(k, self.h[k])
            r = full - r  # convert to mass of moment measured from the left end
        else:
            k = np.clip(np.searchsorted(self.cg, target, side="left") - 1, 0, self.h.size - 1)
            r = target - self.cg[k]
        r = np.clip(r, 0.0, self._moment(k, self.h[k]))
        d = find_roots_bracketed(
            lambda d, kk, rr: self._moment(kk.astype(int), d) - rr,
            np.zeros_like(r),
            self.h[k],
            args=(k.astype(float), r),
        )
        return self.x[k] + d


class TabulatedDensity(Marginal):
    """Piecewise-linear density read from a table.

    The table is renormalised to unit mass and rescaled (x -> x/mean) to unit
    mean on construction.  ``reflected=True`` denotes the law of 1/X under the
    measure x p(x) dx, i.e. the numeraire-changed law, evaluated exactly from
    the underlying table rather than re-tabulated.
    """

    def __init__(self, grid, density, reflected: bool = False, _normalised: bool = False):
        x = np.asarray(grid, dtype=float).ravel()
        p = np.asarray(density, dtype=float).ravel()
        if x.shape != p.shape or x.size < 2:
            raise ValueError("grid and density must have equal length >= 2")
        if np.any(~(x > 0)) or np.any(np.diff(x) <= 0):
            raise DomainError("grid must be positive and strictly increasing")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise DomainError("density values must be finite and nonnegative")
        if not _normalised:
            raw = _PiecewiseLinearDensity(x, p)
            mass = raw.cm[-1]
            if not mass > 0:
                raise DomainError("density has zero mass")
            mean = raw.cg[-1] / mass
            x = x / mean
            p = p * mean / mass
        self.grid = x
        self.density = p
        self.grid.setflags(write=False)
        self.density.setflags(write=False)
        self.reflected = bool(reflected)
        self._b = _PiecewiseLinearDensity(x, p)

    @classmethod
    def from_file(cls, path) -> "TabulatedDensity":
        data = np.loadtxt(Path(path), dtype=float, comments="#", delimiter=None, ndmin=2)
        if data.shape[1] != 2:
            raise ValueError(f"{path}: expected two numeric columns (x, density)")
        return cls(data[:, 0], data[:, 1])

    def reflect(self) -> "TabulatedDensity":
        return TabulatedDensity(self.grid, self.density, not self.reflected, _normalised=True)

    def __repr__(self):
        tag = ", reflected" if self.reflected else ""
        return f"TabulatedDensity(n={self.grid.size}, [{self.grid[0]:.4g}, {self.grid[-1]:.4g}]{tag})"

    @property
    def mean(self):
        if self.reflected:
            return float(self._b.cm[-1])
        return float(self._b.cg[-1])

    @property
    def support(self):
        lo, hi = float(self.grid[0]), float(self.grid[-1])
        return (1.0 / hi, 1.0 / lo) if self.reflected else (lo, hi)

    def pdf(self, x):
        xa = _positive(x)
        if self.reflected:
            return _ret(self._b.pdf(1.0 / xa) / xa**3)
        return _ret(self._b.pdf(xa))

    def cdf(self, x):
        xa = _positive(x)
        return _ret(self._b.G_tail(1.0 / xa) if self.reflected else self._b.cdf(xa))

    def sf(self, x):
        xa = _positive(x)
        return _ret(self._b.G(1.0 / xa) if self.reflected else self._b.sf(xa))

    def G(self, x):
        xa = _positive(x)
        return _ret(self._b.sf(1.0 / xa) if self.reflected else self._b.G(xa))

    def G_tail(self, x):
        xa = _positive(x)
        return _ret(self._b.cdf(1.0 / xa) if self.reflected else self._b.G_tail(xa))

    def quantile(self, p):
        pa = _probability(p)
        if self.reflected:
            return _ret(1.0 / self._b._invert_moment(pa, from_right=True))
        return _ret(self._b.quantile(pa))

    def isf(self, p):
        pa = _probability(p)
        if self.reflected:
            return _ret(1.0 / self._b._invert_moment(pa, from_right=False))
        return _ret(self._b.isf(pa))

    def G_inv(self, g):
        ga = _probability(g, closed_right=True)
        if self.reflected:
            return _ret(1.0 / self._b.isf(ga))
        return _ret(self._b._invert_moment(ga * self.mean, from_right=False))

    def G_tail_inv(self, t):
        ta = _probability(t, closed_right=True)
        if self.reflected:
            return _ret(1.0 / self._b.quantile(ta))
        return _ret(self._b._invert_moment(ta * self.mean, from_right=True))

    def lower(self, q=config.TAIL_QUANTILE):
        return max(float(self.quantile(q)), self.support[0])

    def upper(self, q=config.TAIL_QUANTILE):
        return min(float(self.isf(q)), self.support[1])


# --------------------------------------------------------------------------
# module-level functional API


def cdf(m: Marginal, x):
    return m.cdf(x)


def quantile(m: Marginal, p):
    return m.quantile(p)


def cumulated_expectation(m: Marginal, x):
    return m.G(x)


def inverse_cumulated_expectation(m: Marginal, g):
    """Smallest x with G(x) >= g (g given as a fraction of the mean)."""
    return m.G_inv(g)


def delta_F(mu: Marginal, nu: Marginal, x):
    """F_nu - F_mu, switching to survival functions right of 1."""
    xa = _positive(x)
    left = nu.cdf(xa) - mu.cdf(xa)
    right = mu.sf(xa) - nu.sf(xa)
    return _ret(np.where(xa <= 1.0, left, right))


def delta_G(mu: Marginal, nu: Marginal, x):
    xa = _positive(x)
    left = nu.G(xa) - mu.G(xa)
    right = (mu.G_tail(xa) - nu.G_tail(xa)) + (nu.mean - mu.mean)
    return _ret(np.where(xa <= 1.0, left, right))


def scan_grid(mu: Marginal, nu: Marginal, n: int = config.SCAN_POINTS) -> np.ndarray:
    lo = min(nu.lower(), mu.lower())
    hi = max(nu.upper(), mu.upper())
    return np.geomspace(lo, hi, n)


# --------------------------------------------------------------------------
# order and dispersion checks


@dataclass(frozen=True)
class ConvexOrderReport:
    ok: bool
    worst_violation: float
    location: float


def check_convex_order(mu: Marginal, nu: Marginal, n_grid: int = 1000) -> ConvexOrderReport:
    """Call-price dominance C_mu(K) <= C_nu(K) on a log-spaced strike grid."""
    if abs(mu.mean - nu.mean) > config.MEAN_TOL:
        raise MeanMismatch(f"means differ: {mu.mean!r} vs {nu.mean!r}")
    ks = [scan_grid(mu, nu, n_grid)]
    for m in (mu, nu):
        if isinstance(m, AtomList):
            ks.append(m.points)
    k = np.unique(np.concatenate(ks))
    gap = mu.call_price(k) - nu.call_price(k)
    i = int(np.argmax(gap))
    worst = max(float(gap[i]), 0.0)
    return ConvexOrderReport(worst <= config.CONVEX_ORDER_TOL, worst, float(k[i]))


def _significant_sign_runs(values, scale):
    """Signs of ``values`` with entries below ``scale`` dropped, runs collapsed."""
    sig = np.abs(values) > scale
    signs = np.sign(values[sig])
    idx = np.flatnonzero(sig)
    if signs.size == 0:
        return np.array([]), np.array([], dtype=int)
    change = np.flatnonzero(np.diff(signs) != 0)
    starts = np.concatenate([[0], change + 1])
    return signs[starts], idx[starts]


@dataclass(frozen=True)
class DispersionReport:
    ok: bool
    a: float
    b: float
    sign_changes: int
    compact_support: bool = False


def check_dispersion(mu: Marginal, nu: Marginal) -> DispersionReport:
    """Does p_mu - p_nu change sign exactly twice, as (-, +, -)?"""
    if not (mu.has_density and nu.has_density):
        raise NoDensity("dispersion check needs two densities")
    x = scan_grid(mu, nu)
    diff = mu.pdf(x) - nu.pdf(x)
    scale = 1e-12 * max(np.max(mu.pdf(x)), np.max(nu.pdf(x)))
    runs, starts = _significant_sign_runs(diff, scale)
    compact = any(isinstance(m, TabulatedDensity) for m in (mu, nu))
    n_changes = max(runs.size - 1, 0)
    if not np.array_equal(runs, [-1.0, 1.0, -1.0]):
        return DispersionReport(False, math.nan, math.nan, n_changes, compact)

    f = lambda t: float(mu.pdf(t) - nu.pdf(t))

    def edge(start_idx):
        # last insignificant/opposite point before the run start
        j = start_idx - 1
        lo, hi = x[j], x[start_idx]
        if f(lo) * f(hi) > 0:
            return 0.5 * (lo + hi)
        return find_root_bracketed(f, lo, hi)

    return DispersionReport(True, edge(starts[1]), edge(starts[2]), n_changes, compact)


# --------------------------------------------------------------------------
# delta profile


@dataclass(frozen=True)
class DeltaProfile:
    mu: Marginal
    nu: Marginal
    m: float
    m_tilde: float
    x: np.ndarray = field(repr=False)
    dF: np.ndarray = field(repr=False)
    dG: np.ndarray = field(repr=False)
    plateau_width: float = 0.0

    def delta_F(self, x):
        return delta_F(self.mu, self.nu, x)

    def delta_G(self, x):
        return delta_G(self.mu, self.nu, x)

    @property
    def max_value(self) -> float:
        return float(self.delta_F(self.m))

    @property
    def min_value(self) -> float:
        return float(self.delta_F(self.m_tilde))


def _refine_extremum(f, x, i):
    """Golden-section refinement of a grid extremum of ``f`` at index ``i``."""
    lo, mid, hi = x[max(i - 1, 0)], x[i], x[min(i + 1, x.size - 1)]
    if not (lo < mid < hi):
        return float(mid)
    res = optimize.minimize_scalar(f, bracket=(lo, mid, hi), method="golden", tol=1e-12)
    xm = float(res.x)
    return xm if lo <= xm <= hi and f(xm) <= f(mid) else float(mid)


def _plateau(values, i, x):
    top = values[i]
    near = np.flatnonzero(np.abs(values - top) <= 4 * np.finfo(float).eps * abs(top))
    # contiguous block around i
    block = [i]
    for step in (-1, 1):
        j = i + step
        while j in near:
            block.append(j)
            j += step
    block.sort()
    return x[block[0]], x[block[-1]]


def delta_profile(mu: Marginal, nu: Marginal) -> DeltaProfile:
    """Locate the maximiser m and minimiser m~ of F_nu - F_mu."""
    if not (mu.has_density and nu.has_density):
        raise NoDensity("delta_profile needs two densities")
    x = scan_grid(mu, nu)
    dF = np.asarray(delta_F(mu, nu, x))
    dG = np.asarray(delta_G(mu, nu, x))
    if np.max(np.abs(dF)) <= 1e-12:
        raise AssumptionViolated("F_nu - F_mu vanishes identically")
    slope = nu.pdf(x) - mu.pdf(x)
    scale = 1e-12 * max(np.max(mu.pdf(x)), np.max(nu.pdf(x)))
    runs, _ = _significant_sign_runs(slope, scale)
    if not np.array_equal(runs, [1.0, -1.0, 1.0]):
        raise AssumptionViolated(
            f"F_nu - F_mu does not have a single local maximiser (slope sign pattern {runs.tolist()})"
        )
    i_max, i_min = int(np.argmax(dF)), int(np.argmin(dF))
    fmax = lambda t: -float(delta_F(mu, nu, t))
    fmin = lambda t: float(delta_F(mu, nu, t))
    lo, hi = _plateau(dF, i_max, x)
    if hi > lo:
        m, width = 0.5 * (lo + hi), hi - lo
    else:
        m, width = _refine_extremum(fmax, x, i_max), 0.0
    m_tilde = _refine_extremum(fmin, x, i_min)
    if not m < m_tilde:
        raise AssumptionViolated(f"maximiser {m} is not left of minimiser {m_tilde}")
    return DeltaProfile(mu, nu, m, m_tilde, x, dF, dG, width)


def lognormal_extremizer_closed_form(sigma_mu: float, sigma_nu: float) -> tuple[float, float]:
    """Crossing points of two unit-mean log-normal densities (m < 1 < 1/m)."""
    if not (0 < sigma_mu < sigma_nu):
        raise DomainError("need 0 < sigma_mu < sigma_nu")
    a2, b2 = sigma_mu**2, sigma_nu**2
    log2 = 2.0 * a2 * b2 / (b2 - a2) * math.log(sigma_nu / sigma_mu) + a2 * b2 / 4.0
    m = math.exp(-math.sqrt(log2))
    return m, 1.0 / m


# --------------------------------------------------------------------------
# spec strings


def _parse_number(text: str) -> float:
    text = text.strip()
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a number: {text!r}") from exc


def parse_marginal(spec: str) -> Marginal:
    """``lognormal:sigma=0.2``, ``atoms:0.5=2/3,2.0=1/3`` or ``table:<path>``."""
    kind, _, body = spec.strip().partition(":")
    kind = kind.strip().lower()
    if kind == "lognormal":
        params = dict(kv.split("=", 1) for kv in body.split(",") if kv.strip())
        if set(params) != {"sigma"}:
            raise ValueError(f"lognormal needs exactly sigma=..., got {spec!r}")
        return LogNormal(_parse_number(params["sigma"]))
    if kind == "atoms":
        pts, wts = [], []
        for item in body.split(","):
            if not item.strip():
                continue
            a, _, w = item.partition("=")
            pts.append(_parse_number(a))
            wts.append(_parse_number(w))
        return AtomList(pts, wts)
    if kind == "table":
        return TabulatedDensity.from_file(body.strip())
    raise ValueError(f"unknown marginal spec {spec!r}")
