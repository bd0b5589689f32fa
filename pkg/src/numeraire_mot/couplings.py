"""Explicit martingale transference plans between two densities.

* ``build_hk`` -- three-point plan {p(x), x, q(x)} minimising ATM forward start
  straddles.  (p, q) solve the mass and mean balance equations
  dF(p) + dF(q) = dF(x), dG(p) + dG(q) = dG(x) on (a, b).
* ``build_left_monotone`` / ``build_right_monotone`` -- the two-point curtain
  plans, identity on one side of x_star and split onto {T_d(x), T_u(x)} on the
  other.

All plans are solved node by node (vectorised over nodes) and stored as
monotone function tables; between nodes they are evaluated by PCHIP.  Weights
are always recomputed from the interpolated support points so the martingale
identity holds exactly at every x, not only at the nodes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import config
from .errors import (
    AssumptionViolated,
    BracketError,
    MethodMismatch,
    NoConvergence,
    NumericsFailure,
    OutOfRange,
)
from .measures import (
    AtomList,
    DeltaProfile,
    Marginal,
    check_convex_order,
    check_dispersion,
    delta_F,
    delta_G,
    delta_profile,
)
from .numerics import FunctionTable, Monotonicity, find_roots_bracketed

log = logging.getLogger(__name__)

# Quantile level at which root brackets are capped.  Deeper than the support
# truncation so that tail nodes still bracket their roots.
BRACKET_QUANTILE = 1e-14
_TINY = 1e-300

_INC, _DEC = Monotonicity.INCREASING, Monotonicity.DECREASING
_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


# --------------------------------------------------------------------------
# kernel types


class Kernel:
    """Transition kernel x -> law of Y given X = x, over base marginal mu."""

    mu: Marginal
    nu: Marginal

    def kernel_at(self, x: float) -> list[tuple[float, float]]:
        raise NotImplementedError


@dataclass(frozen=True)
class IdentityKernel(Kernel):
    """Y = X almost surely (requires nu = mu)."""

    mu: Marginal

    @property
    def nu(self):
        return self.mu

    def kernel_at(self, x):
        if not x > 0:
            raise OutOfRange("x must be positive")
        return [(float(x), 1.0)]


@dataclass(frozen=True, eq=False)
class DiscreteKernel(Kernel):
    """Finite kernel: row i of ``matrix`` is the law of Y given X = x_points[i]."""

    x_points: np.ndarray
    x_weights: np.ndarray
    y_points: np.ndarray
    matrix: np.ndarray

    def __post_init__(self):
        for name in ("x_points", "x_weights", "y_points", "matrix"):
            object.__setattr__(self, name, np.array(getattr(self, name), dtype=float))
        n, m = self.matrix.shape
        if self.x_points.shape != (n,) or self.x_weights.shape != (n,) or self.y_points.shape != (m,):
            raise ValueError("inconsistent kernel dimensions")
        if np.any(self.matrix < -1e-12):
            raise ValueError("kernel weights must be nonnegative")
        if np.any(np.abs(self.matrix.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("kernel rows must sum to one")

    @classmethod
    def from_coupling(cls, x_points, x_weights, y_points, coupling) -> "DiscreteKernel":
        coupling = np.clip(np.asarray(coupling, dtype=float), 0.0, None)
        xw = np.asarray(x_weights, dtype=float)
        return cls(x_points, xw, y_points, coupling / coupling.sum(axis=1, keepdims=True))

    @classmethod
    def product(cls, mu: AtomList, nu: AtomList) -> "DiscreteKernel":
        rows = np.tile(nu.weights, (mu.points.size, 1))
        return cls(mu.points, mu.weights, nu.points, rows)

    @property
    def mu(self):
        return AtomList(self.x_points, self.x_weights)

    @property
    def nu(self):
        w = self.x_weights @ self.matrix
        keep = w > 1e-15
        return AtomList(self.y_points[keep], w[keep] / w[keep].sum())

    @property
    def coupling(self) -> np.ndarray:
        return self.x_weights[:, None] * self.matrix

    def kernel_at(self, x):
        i = np.flatnonzero(np.isclose(self.x_points, x, rtol=1e-12, atol=0.0))
        if i.size == 0:
            raise OutOfRange(f"{x!r} is not an atom of the base marginal")
        row = self.matrix[i[0]]
        return [(float(y), float(w)) for y, w in zip(self.y_points, row) if w > 0]


class _TabulatedKernel(Kernel):
    """Shared evaluation for kernels that split mass on a tabulated interval."""

    @property
    def split_interval(self) -> tuple[float, float]:
        raise NotImplementedError

    def _is_identity(self, x):
        raise NotImplementedError

    def atoms(self, x):
        """Support points and weights, each of shape (k, len(x)), on the split interval."""
        raise NotImplementedError

    def branch_monotonicity(self) -> list[Monotonicity]:
        raise NotImplementedError

    def kernel_at(self, x):
        if not x > 0:
            raise OutOfRange("x must be positive")
        if self._is_identity(x):
            return [(float(x), 1.0)]
        lo, hi = self.split_interval
        if not lo <= x <= hi:
            raise OutOfRange(f"x={x!r} outside the tabulated range [{lo}, {hi}]")
        ys, ws = self.atoms(np.array([x], dtype=float))
        return [(float(y[0]), float(w[0])) for y, w in zip(ys, ws) if w[0] > 0]


@dataclass(frozen=True, eq=False)
class ThreeBandKernel(_TabulatedKernel):
    """Three-point plan: mass at x in (a, b) goes to p(x), x and q(x)."""

    a: float
    b: float
    p: FunctionTable
    q: FunctionTable
    l: FunctionTable
    u: FunctionTable
    mu: Marginal
    nu: Marginal
    flagged: tuple = ()
    _z: FunctionTable = field(init=False, repr=False)

    def __post_init__(self):
        z = FunctionTable(self.q.abscissae, 1.0 / self.q.ordinates, _INC)
        object.__setattr__(self, "_z", z)

    @property
    def nodes(self) -> np.ndarray:
        return self.p.abscissae

    @property
    def split_interval(self):
        return (self.p.lo, self.p.hi)

    def _is_identity(self, x):
        return x <= self.a or x >= self.b

    def excess_ratio(self, x):
        """(p_mu - p_nu) / p_mu: the fraction of mass at x that moves."""
        fm = self.mu.pdf(x)
        return np.clip((fm - self.nu.pdf(x)) / fm, 0.0, 1.0)

    def atoms(self, x):
        x = np.asarray(x, dtype=float)
        p = np.minimum(self.p(x), x)
        q = np.maximum(1.0 / self._z(x), x)
        r = self.excess_ratio(x)
        span = q - p
        u = np.where(span > 0, (x - p) / span, 0.0) * r
        l = np.where(span > 0, (q - x) / span, 0.0) * r
        return np.stack([p, x, q]), np.stack([l, 1.0 - l - u, u])

    def branch_monotonicity(self):
        return [_DEC, _INC, _DEC]


@dataclass(frozen=True, eq=False)
class TwoBandKernel(_TabulatedKernel):
    """Curtain plan: identity on one side of x_star, {T_d, T_u} on the other.

    ``prob`` tabulates the probability of moving up to T_u; at the x_star node
    it holds the one-sided limit.
    """

    direction: str
    x_star: float
    T_d: FunctionTable
    T_u: FunctionTable
    prob: FunctionTable
    mu: Marginal
    nu: Marginal
    flagged: tuple = ()

    def __post_init__(self):
        if self.direction not in ("left", "right"):
            raise ValueError("direction must be 'left' or 'right'")

    @property
    def nodes(self):
        return self.T_d.abscissae

    @property
    def split_interval(self):
        return (self.T_d.lo, self.T_d.hi)

    def _is_identity(self, x):
        return x <= self.x_star if self.direction == "left" else x >= self.x_star

    def atoms(self, x):
        x = np.asarray(x, dtype=float)
        d = np.minimum(self.T_d(x), x)
        u = np.maximum(self.T_u(x), x)
        span = u - d
        q = np.where(span > 0, (x - d) / np.where(span > 0, span, 1.0), 0.5)
        return np.stack([d, u]), np.stack([1.0 - q, q])

    def branch_monotonicity(self):
        return [_DEC, _INC] if self.direction == "left" else [_INC, _DEC]

    def split_nodes(self) -> np.ndarray:
        """Nodes strictly inside the split region (the x_star node excluded)."""
        x = self.nodes
        return x[x != self.x_star]


def kernel_at(k: Kernel, x: float) -> list[tuple[float, float]]:
    return k.kernel_at(x)


# --------------------------------------------------------------------------
# assumptions and grids


def check_assumptions(mu: Marginal, nu: Marginal) -> DeltaProfile:
    """Unit means, convex order and a single-peaked dF; returns the profile."""
    for m in (mu, nu):
        if abs(m.mean - 1.0) > config.MEAN_TOL:
            raise AssumptionViolated(f"{m!r} does not have unit mean")
    if not (mu.has_density and nu.has_density):
        raise AssumptionViolated("explicit plans need marginals with densities")
    order = check_convex_order(mu, nu)
    if not order.ok:
        raise AssumptionViolated(
            f"marginals are not in convex order (violation {order.worst_violation:.3g} at K={order.location:.6g})"
        )
    disp = check_dispersion(mu, nu)
    if not disp.ok:
        raise AssumptionViolated(f"dispersion fails: density difference changes sign {disp.sign_changes} times")
    return delta_profile(mu, nu)


def hk_nodes(a: float, b: float, n: int) -> np.ndarray:
    """Nodes in (a, b), geometrically clustered towards both ends."""
    half = max(n // 2, 2)
    t = np.geomspace(1e-4, 0.5, half)
    x = np.concatenate([a + (b - a) * t, b - (b - a) * t[::-1]])
    return np.unique(x[(x > a) & (x < b)])


def two_band_nodes(x_star: float, end: float, n: int) -> np.ndarray:
    """Split-region nodes: offsets from x_star log-spaced up to ``end``."""
    span = end - x_star
    return x_star + span * np.geomspace(1.0 / n, 1.0, n)


# --------------------------------------------------------------------------
# monotone branch inversions


def _invert(f, target, lo, hi, args=()):
    """Solve f(t, *args) = target on [lo, hi] for monotone f; clamps outside the range."""
    target, lo, hi, *args = np.broadcast_arrays(
        np.asarray(target, float), np.asarray(lo, float), np.asarray(hi, float),
        *(np.asarray(a, float) for a in args),
    )
    flo, fhi = f(lo, *args), f(hi, *args)
    inc = fhi >= flo
    below = np.where(inc, target <= flo, target >= flo)
    above = np.where(inc, target >= fhi, target <= fhi)
    out = np.where(below, lo, hi).astype(float)
    mid = ~(below | above)
    if np.any(mid):
        out[mid] = find_roots_bracketed(
            lambda t, tg, *a: f(t, *a) - tg,
            lo[mid],
            hi[mid],
            args=(target[mid], *(a[mid] for a in args)),
            xatol=1e-15,
        )
    return out


class _Pair:
    """Vectorised dF, dG and tail-aware inverses for one marginal pair."""

    def __init__(self, mu: Marginal, nu: Marginal):
        self.mu, self.nu = mu, nu
        self.lo_cap = max(nu.quantile(BRACKET_QUANTILE), mu.support[0], nu.support[0])
        self.hi_cap = min(nu.isf(BRACKET_QUANTILE), mu.support[1], nu.support[1])
        if not np.isfinite(self.hi_cap):
            self.hi_cap = float(nu.isf(BRACKET_QUANTILE))

    def dF(self, x):
        return np.asarray(delta_F(self.mu, self.nu, x))

    def dG(self, x):
        return np.asarray(delta_G(self.mu, self.nu, x))

    def _between(self, lo, hi, weight):
        # composite Gauss-Legendre in log t; avoids cancelling two nearly equal
        # cumulative differences when lo and hi are close
        lo, hi = np.broadcast_arrays(np.log(lo), np.log(hi))
        edges = lo[..., None] + (hi - lo)[..., None] * np.linspace(0.0, 1.0, 9)
        a, b = edges[..., :-1], edges[..., 1:]
        s = 0.5 * (a + b)[..., None] + 0.5 * (b - a)[..., None] * _GL_X
        t = np.exp(s)
        f = (self.nu.pdf(t) - self.mu.pdf(t)) * weight(t) * t
        return np.sum(np.sum(f * _GL_W, axis=-1) * 0.5 * (b - a), axis=-1)

    def dF_between(self, lo, hi):
        """dF(hi) - dF(lo)."""
        return self._between(lo, hi, lambda t: 1.0)

    def dG_between(self, lo, hi):
        """dG(hi) - dG(lo)."""
        return self._between(lo, hi, lambda t: t)

    def nu_quantile(self, p):
        return np.asarray(self.nu.quantile(np.clip(p, _TINY, 1.0 - 1e-16)))

    def nu_isf(self, p):
        return np.asarray(self.nu.isf(np.clip(p, _TINY, 1.0 - 1e-16)))

    def nu_G_inv(self, g):
        return np.asarray(self.nu.G_inv(np.clip(g, _TINY, 1.0)))

    def nu_G_tail_inv(self, t):
        return np.asarray(self.nu.G_tail_inv(np.clip(t, _TINY, 1.0)))


def _solve_where_bracketed(f, lo, hi, args, what):
    """Roots of f on [lo, hi] elementwise; unbracketed entries come back NaN."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    flo, fhi = f(lo, *args), f(hi, *args)
    ok = (np.sign(flo) != np.sign(fhi)) | (flo == 0) | (fhi == 0)
    ok &= np.isfinite(flo) & np.isfinite(fhi) & (lo < hi)
    out = np.full(lo.shape, np.nan)
    if np.any(ok):
        try:
            out[ok] = find_roots_bracketed(
                f, lo[ok], hi[ok], args=tuple(a[ok] for a in args), xatol=config.ROOT_TOL
            )
        except (BracketError, NoConvergence) as exc:
            raise NumericsFailure(f"{what}: {exc}") from exc
    return out


# --------------------------------------------------------------------------
# Hobson-Klimmek


def _solve_hk(pair: _Pair, a: float, b: float, x: np.ndarray):
    """(p, q) at each node.

    The outer unknown is the far point, the one deep in a tail: q for x below
    sqrt(a b), p above.  Its partner, close to x, is recovered from the
    integral of the density difference between it and x, which stays
    accurate where the two cumulative values nearly cancel.
    """
    dFx = pair.dF(x)
    dFa, dFb = float(pair.dF(a)), float(pair.dF(b))
    lo_cap, hi_cap = pair.lo_cap, pair.hi_cap
    p = np.full(x.shape, np.nan)
    q = np.full(x.shape, np.nan)

    def near_p(qq, xx):
        # dF(x) - dF(p) = dF(q)
        return _invert(pair.dF_between, pair.dF(qq), lo_cap, a, args=(xx,))

    def near_q(pp, xx):
        # dF(q) - dF(x) = -dF(p)
        return _invert(lambda t, xv: pair.dF_between(xv, t), -pair.dF(pp), b, hi_cap, args=(xx,))

    def residual_q(qq, xx):
        return pair.dG(qq) - pair.dG_between(near_p(qq, xx), xx)

    def residual_p(pp, xx):
        return pair.dG(pp) + pair.dG_between(xx, near_q(pp, xx))

    low = x <= np.sqrt(a * b)
    if np.any(low):
        xl, f = x[low], dFx[low]
        lo = np.where(f - dFa > dFb, _invert(pair.dF, f - dFa, b, hi_cap), b)
        hi = np.where(f < 0, _invert(pair.dF, np.minimum(f, 0.0), b, hi_cap), hi_cap)
        ql = _solve_where_bracketed(residual_q, lo, hi, (xl,), "hk node")
        ok = np.isfinite(ql)
        pl = np.full_like(ql, np.nan)
        pl[ok] = near_p(ql[ok], xl[ok])
        p[low], q[low] = pl, ql
    high = ~low
    if np.any(high):
        xh, f = x[high], dFx[high]
        lo = np.where(f > 0, _invert(pair.dF, np.maximum(f, 0.0), lo_cap, a), lo_cap)
        hi = np.where(f - dFb < dFa, _invert(pair.dF, f - dFb, lo_cap, a), a)
        ph = _solve_where_bracketed(residual_p, lo, hi, (xh,), "hk node")
        ok = np.isfinite(ph)
        qh = np.full_like(ph, np.nan)
        qh[ok] = near_q(ph[ok], xh[ok])
        p[high], q[high] = ph, qh
    return p, q


def build_hk(
    mu: Marginal,
    nu: Marginal,
    n_grid: int = config.GRID_POINTS,
    nodes: Optional[np.ndarray] = None,
    profile: Optional[DeltaProfile] = None,
) -> ThreeBandKernel:
    """Three-band plan for (mu, nu) tabulated on ``n_grid`` nodes in (a, b)."""
    profile = profile or check_assumptions(mu, nu)
    a, b = profile.m, profile.m_tilde
    x = hk_nodes(a, b, n_grid) if nodes is None else np.asarray(nodes, dtype=float)
    x = x[(x > a) & (x < b)]
    pair = _Pair(mu, nu)
    p, q = _solve_hk(pair, a, b, x)
    ok = np.isfinite(p) & np.isfinite(q) & (p < x) & (q > x)
    flagged = tuple(float(v) for v in x[~ok])
    if flagged:
        log.warning("hk: %d nodes without a bracketed solution dropped", len(flagged))
    x, p, q = x[ok], p[ok], q[ok]
    if x.size < 4:
        raise NumericsFailure("hk: fewer than four solvable nodes", x=flagged[:1] or None)
    fm = mu.pdf(x)
    r = (fm - nu.pdf(x)) / fm
    u = (x - p) / (q - p) * r
    l = (q - x) / (q - p) * r
    try:
        return ThreeBandKernel(
            a=a,
            b=b,
            p=FunctionTable(x, p, _DEC),
            q=FunctionTable(x, q, _DEC),
            l=FunctionTable(x, l),
            u=FunctionTable(x, u),
            mu=mu,
            nu=nu,
            flagged=flagged,
        )
    except ValueError as exc:
        raise NumericsFailure(f"hk tables rejected: {exc}") from exc


# --------------------------------------------------------------------------
# left and right curtains


def _solve_left(pair: _Pair, x_star: float, x: np.ndarray):
    mu = pair.mu
    sfx, gtx = np.asarray(mu.sf(x)), np.asarray(mu.G_tail(x))
    dF_star, dG_star = float(pair.dF(x_star)), float(pair.dG(x_star))
    lo = np.full(x.shape, pair.lo_cap)
    hi = np.full(x.shape, x_star)
    cut = sfx < dF_star
    if np.any(cut):
        hi[cut] = np.minimum(hi[cut], _invert(pair.dF, sfx[cut], pair.lo_cap, x_star))
    cut = gtx < dG_star
    if np.any(cut):
        hi[cut] = np.minimum(hi[cut], _invert(pair.dG, gtx[cut], pair.lo_cap, x_star))

    def residual(l, sf, gt):
        return pair.nu_isf(sf - pair.dF(l)) - pair.nu_G_tail_inv(gt - pair.dG(l))

    Ld = _solve_where_bracketed(residual, lo, hi, (sfx, gtx), "left node")
    Lu = np.full_like(Ld, np.nan)
    ok = np.isfinite(Ld)
    Lu[ok] = pair.nu_isf(sfx[ok] - pair.dF(Ld[ok]))
    return Ld, Lu


def _solve_right(pair: _Pair, x_star: float, x: np.ndarray):
    mu = pair.mu
    fx, gx = np.asarray(mu.cdf(x)), np.asarray(mu.G(x))
    dF_star, dG_star = float(pair.dF(x_star)), float(pair.dG(x_star))
    lo = np.full(x.shape, x_star)
    hi = np.full(x.shape, pair.hi_cap)
    cut = -fx > dF_star
    if np.any(cut):
        lo[cut] = np.maximum(lo[cut], _invert(pair.dF, -fx[cut], x_star, pair.hi_cap))
    cut = -gx > dG_star
    if np.any(cut):
        lo[cut] = np.maximum(lo[cut], _invert(pair.dG, -gx[cut], x_star, pair.hi_cap))

    def residual(r, f, g):
        return pair.nu_quantile(f + pair.dF(r)) - pair.nu_G_inv(g + pair.dG(r))

    Ru = _solve_where_bracketed(residual, lo, hi, (fx, gx), "right node")
    Rd = np.full_like(Ru, np.nan)
    ok = np.isfinite(Ru)
    Rd[ok] = pair.nu_quantile(fx[ok] + pair.dF(Ru[ok]))
    return Rd, Ru


def _two_band(direction, x_star, x, Td, Tu, mu, nu, flagged) -> TwoBandKernel:
    ok = np.isfinite(Td) & np.isfinite(Tu) & (Td < x) & (Tu > x)
    flagged = tuple(flagged) + tuple(float(v) for v in x[~ok])
    if np.count_nonzero(~ok):
        log.warning("%s plan: %d nodes dropped", direction, np.count_nonzero(~ok))
    x, Td, Tu = x[ok], Td[ok], Tu[ok]
    if x.size < 4:
        raise NumericsFailure(f"{direction} plan: fewer than four solvable nodes")
    prob = (x - Td) / (Tu - Td)
    # x_star node: identity, with the one-sided limit of the up-probability
    limit = 1.0 if direction == "left" else 0.0
    if direction == "left":
        xs = np.concatenate([[x_star], x])
        Td, Tu, prob = (np.concatenate([[x_star], v]) for v in (Td, Tu, prob))
        prob[0] = limit
        td_mono, tu_mono = _DEC, _INC
    else:
        xs = np.concatenate([x, [x_star]])
        Td, Tu, prob = (np.concatenate([v, [x_star]]) for v in (Td, Tu, prob))
        prob[-1] = limit
        td_mono, tu_mono = _INC, _DEC
    try:
        return TwoBandKernel(
            direction=direction,
            x_star=x_star,
            T_d=FunctionTable(xs, Td, td_mono),
            T_u=FunctionTable(xs, Tu, tu_mono),
            prob=FunctionTable(xs, prob),
            mu=mu,
            nu=nu,
            flagged=flagged,
        )
    except ValueError as exc:
        raise NumericsFailure(f"{direction} plan tables rejected: {exc}") from exc


def build_left_monotone(
    mu: Marginal,
    nu: Marginal,
    n_grid: int = config.GRID_POINTS,
    nodes: Optional[np.ndarray] = None,
    profile: Optional[DeltaProfile] = None,
) -> TwoBandKernel:
    """Left-curtain plan; identity up to x_star = argmax dF."""
    profile = profile or check_assumptions(mu, nu)
    x_star = profile.m
    if nodes is None:
        nodes = two_band_nodes(x_star, mu.upper(), n_grid)
    x = np.asarray(nodes, dtype=float)
    x = x[x > x_star]
    Ld, Lu = _solve_left(_Pair(mu, nu), x_star, x)
    return _two_band("left", x_star, x, Ld, Lu, mu, nu, ())


def reflect_two_band(k: TwoBandKernel, mu_s: Marginal, nu_s: Marginal) -> TwoBandKernel:
    """Node-wise image of a curtain plan under the coupling numeraire change.

    Mass w on y at x becomes mass w y / x on 1/y at 1/x: a left plan becomes a
    right plan with T_d' = 1/T_u, T_u' = 1/T_d and up-probability
    (1 - prob) T_d / x evaluated at the reflected node.
    """
    x = k.nodes
    Td, Tu, prob = k.T_d.ordinates, k.T_u.ordinates, k.prob.ordinates
    new_x = (1.0 / x)[::-1]
    new_Td = (1.0 / Tu)[::-1]
    new_Tu = (1.0 / Td)[::-1]
    new_prob = ((1.0 - prob) * Td / x)[::-1]
    direction = "right" if k.direction == "left" else "left"
    mono = (_INC, _DEC) if direction == "right" else (_DEC, _INC)
    return TwoBandKernel(
        direction=direction,
        x_star=1.0 / k.x_star,
        T_d=FunctionTable(new_x, new_Td, mono[0]),
        T_u=FunctionTable(new_x, new_Tu, mono[1]),
        prob=FunctionTable(new_x, new_prob),
        mu=mu_s,
        nu=nu_s,
        flagged=tuple(1.0 / v for v in k.flagged),
    )


def reflect_three_band(k: ThreeBandKernel, mu_s: Marginal, nu_s: Marginal) -> ThreeBandKernel:
    """Image of a three-band plan: p' = 1/q, q' = 1/p, l' = u q / x, u' = l p / x."""
    x = k.nodes
    p, q, l, u = k.p.ordinates, k.q.ordinates, k.l.ordinates, k.u.ordinates
    nx = (1.0 / x)[::-1]
    return ThreeBandKernel(
        a=1.0 / k.b,
        b=1.0 / k.a,
        p=FunctionTable(nx, (1.0 / q)[::-1], _DEC),
        q=FunctionTable(nx, (1.0 / p)[::-1], _DEC),
        l=FunctionTable(nx, (u * q / x)[::-1]),
        u=FunctionTable(nx, (l * p / x)[::-1]),
        mu=mu_s,
        nu=nu_s,
        flagged=tuple(1.0 / v for v in k.flagged),
    )


def compare_two_band(k1: TwoBandKernel, k2: TwoBandKernel) -> dict:
    """Sup differences of (T_d, T_u, up-probability) at the nodes of ``k1``."""
    x = k1.split_nodes()
    lo, hi = k2.split_interval
    x = x[(x >= lo) & (x <= hi)]
    y1, w1 = k1.atoms(x)
    y2, w2 = k2.atoms(x)
    return {
        "T_d": float(np.max(np.abs(y1[0] - y2[0]))),
        "T_u": float(np.max(np.abs(y1[1] - y2[1]))),
        "prob": float(np.max(np.abs(w1[1] - w2[1]))),
        "x_star": abs(k1.x_star - k2.x_star),
        "nodes": int(x.size),
    }


def build_right_monotone(
    mu: Marginal,
    nu: Marginal,
    n_grid: int = config.GRID_POINTS,
    method: str = "reflection",
    nodes: Optional[np.ndarray] = None,
    profile: Optional[DeltaProfile] = None,
    cross_check: bool = False,
    tol: float = config.SYMMETRY_TOL,
) -> TwoBandKernel:
    """Right-curtain plan; identity from x_star = argmin dF upwards.

    ``reflection`` builds the left plan of the numeraire-changed pair and maps
    it back; ``direct`` solves the right-curtain balance equations.  With
    ``cross_check`` both are built on the same nodes and MethodMismatch is
    raised if they differ by more than ``tol``.
    """
    if method not in ("reflection", "direct"):
        raise ValueError("method must be 'reflection' or 'direct'")
    from .numeraire import symmetrize_marginal

    profile = profile or check_assumptions(mu, nu)
    if nodes is None:
        nodes = two_band_nodes(profile.m_tilde, mu.lower(), n_grid)[::-1]
    x = np.sort(np.asarray(nodes, dtype=float))

    def direct():
        xs = profile.m_tilde
        xx = x[x < xs]
        Rd, Ru = _solve_right(_Pair(mu, nu), xs, xx)
        return _two_band("right", xs, xx, Rd, Ru, mu, nu, ())

    def reflection():
        mu_s, nu_s = symmetrize_marginal(mu), symmetrize_marginal(nu)
        prof_s = check_assumptions(mu_s, nu_s)
        u = np.sort(1.0 / x)
        left_s = build_left_monotone(mu_s, nu_s, nodes=u, profile=prof_s)
        return reflect_two_band(left_s, mu, nu)

    k = direct() if method == "direct" else reflection()
    if cross_check:
        other = reflection() if method == "direct" else direct()
        diff = compare_two_band(k, other)
        worst = max(diff["T_d"], diff["T_u"], diff["prob"], diff["x_star"])
        if worst > tol:
            raise MethodMismatch(f"reflection and direct right plans differ: {diff}")
    return k


# --------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class CouplingReport:
    marginal_err: float
    martingale_err: float
    location: float
    untabulated_mass: float = 0.0

    def ok(self, marginal_tol=config.MARGINAL_TOL, martingale_tol=config.MARTINGALE_TOL) -> bool:
        return self.marginal_err <= marginal_tol and self.martingale_err <= martingale_tol


def _gauss(f, lo, hi):
    """Fixed 16-point Gauss-Legendre on each [lo_i, hi_i] (vectorised)."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    half = 0.5 * (hi - lo)
    t = (0.5 * (hi + lo))[..., None] + half[..., None] * _GL_X
    return np.sum(f(t) * _GL_W, axis=-1) * half


def _y_grid(nu: Marginal) -> np.ndarray:
    levels = np.concatenate([np.geomspace(1e-7, 1e-2, 11), np.linspace(0.01, 0.99, 99)])
    levels = np.unique(np.concatenate([levels, 1.0 - levels]))
    return np.unique(np.concatenate([nu.quantile(levels), nu.isf(levels)]))


def _second_marginal_cdf(k: _TabulatedKernel, ys: np.ndarray) -> tuple[np.ndarray, float]:
    mu = k.mu
    lo, hi = k.split_interval
    nodes = k.nodes
    f_lo, f_hi = float(mu.cdf(lo)), float(mu.cdf(hi))
    # identity outside the tabulated interval
    out = np.asarray(mu.cdf(np.minimum(ys, lo))) + np.maximum(np.asarray(mu.cdf(ys)) - f_hi, 0.0)
    untab = 0.0
    if isinstance(k, ThreeBandKernel):
        # slivers (a, x_1) and (x_n, b) are treated as identity
        untab = _gauss(lambda t: np.clip(mu.pdf(t) - k.nu.pdf(t), 0, None), [k.a, hi], [lo, k.b]).sum()

    node_y, _ = k.atoms(nodes)
    monos = k.branch_monotonicity()
    dens = lambda t, i: k.atoms(t.ravel())[1][i].reshape(t.shape) * mu.pdf(t)
    for i, mono in enumerate(monos):
        # per-interval weight mass, then cumulative
        seg = _gauss(lambda t: dens(t, i), nodes[:-1], nodes[1:])
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        yb = node_y[i]
        for j, y in enumerate(ys):
            below = yb <= y
            if mono is _INC:
                # set {x : y_i(x) <= y} = [lo, c]
                if below.all():
                    out[j] += cum[-1]
                    continue
                if not below.any():
                    continue
                s = np.flatnonzero(~below)[0] - 1
                c = _cross(k, i, nodes[s], nodes[s + 1], y)
                out[j] += cum[s] + _gauss(lambda t: dens(t, i), [nodes[s]], [c])[0]
            else:
                # set = [c, hi]
                if below.all():
                    out[j] += cum[-1]
                    continue
                if not below.any():
                    continue
                s = np.flatnonzero(below)[0] - 1
                c = _cross(k, i, nodes[s], nodes[s + 1], y)
                out[j] += (cum[-1] - cum[s + 1]) + _gauss(lambda t: dens(t, i), [c], [nodes[s + 1]])[0]
    return out, float(untab)


def _cross(k, i, lo, hi, y):
    f = lambda t: k.atoms(np.array([t]))[0][i][0] - y
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0 or np.sign(flo) == np.sign(fhi):
        return hi
    from .numerics import find_root_bracketed

    return find_root_bracketed(f, lo, hi, tol=1e-13)


def _stored_drift(k: _TabulatedKernel) -> float:
    """Martingale residual of the tabulated weights against the tabulated branches."""
    x = k.nodes
    if isinstance(k, ThreeBandKernel):
        p, q, l, u = k.p.ordinates, k.q.ordinates, k.l.ordinates, k.u.ordinates
        return float(np.max(np.abs(l * p + u * q + (1.0 - l - u) * x - x)))
    d, up, pr = k.T_d.ordinates, k.T_u.ordinates, k.prob.ordinates
    return float(np.max(np.abs(pr * up + (1.0 - pr) * d - x)))


def validate_coupling(k: Kernel, mu: Marginal = None, nu: Marginal = None) -> CouplingReport:
    """Second-marginal CDF error and martingale residual of a kernel."""
    mu = mu or k.mu
    nu = nu or k.nu
    if isinstance(k, IdentityKernel):
        ys = _y_grid(nu) if nu.has_density else nu.points
        err = np.abs(np.asarray(mu.cdf(ys)) - np.asarray(nu.cdf(ys)))
        i = int(np.argmax(err))
        return CouplingReport(float(err[i]), 0.0, float(ys[i]))
    if isinstance(k, DiscreteKernel):
        mart = np.abs(k.matrix @ k.y_points - k.x_points)
        col = k.x_weights @ k.matrix
        ys = np.union1d(k.y_points, nu.points if isinstance(nu, AtomList) else _y_grid(nu))
        fy = np.array([col[k.y_points <= y].sum() for y in ys])
        err = np.abs(fy - np.asarray(nu.cdf(ys)))
        i = int(np.argmax(err))
        return CouplingReport(float(err[i]), float(mart.max()), float(ys[i]))
    if not isinstance(k, _TabulatedKernel):
        raise TypeError(f"cannot validate {type(k).__name__}")
    x = k.nodes
    mid = np.sqrt(x[:-1] * x[1:])
    xs = np.concatenate([x, mid])
    ys_at, ws_at = k.atoms(xs)
    mart = max(float(np.max(np.abs((ys_at * ws_at).sum(axis=0) - xs))), _stored_drift(k))
    ys = _y_grid(nu)
    fy, untab = _second_marginal_cdf(k, ys)
    err = np.abs(fy - np.asarray(nu.cdf(ys)))
    i = int(np.argmax(err))
    return CouplingReport(float(err[i]), mart, float(ys[i]), untab)
