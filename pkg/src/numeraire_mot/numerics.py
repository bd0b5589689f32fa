"""Root finding, quadrature, monotone interpolation and Gaussian helpers.

Thin, contract-checking wrappers over scipy: Brent (scalar) and Chandrupatla
(elementwise) for bracketed roots, QUADPACK for adaptive Gauss-Kronrod
quadrature, PCHIP for shape-preserving interpolation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, interpolate, optimize, special
from scipy.optimize import elementwise

from . import config
from .errors import BracketError, NoConvergence, OutOfRange

erf = special.erf


def normal_cdf(z):
    return special.ndtr(z)


def normal_sf(z):
    return special.ndtr(-np.asarray(z, dtype=float))


def normal_ppf(p):
    return special.ndtri(p)


def normal_isf(p):
    return -special.ndtri(p)


def normal_pdf(z):
    z = np.asarray(z, dtype=float)
    return np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


# --------------------------------------------------------------------------
# roots


def find_root_bracketed(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = config.ROOT_TOL,
    maxiter: int = config.ROOT_MAXITER,
) -> float:
    """Root of ``f`` inside ``[lo, hi]`` by Brent's method.

    Raises BracketError if ``f(lo)`` and ``f(hi)`` have the same strict sign and
    NoConvergence if ``maxiter`` iterations do not shrink the bracket to ``tol``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if lo > hi:
        lo, hi = hi, lo
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return float(lo)
    if fhi == 0.0:
        return float(hi)
    if np.sign(flo) == np.sign(fhi):
        raise BracketError(f"f({lo!r})={flo!r} and f({hi!r})={fhi!r} have the same sign")
    try:
        root = optimize.brentq(f, lo, hi, xtol=tol, maxiter=maxiter)
    except RuntimeError as exc:
        raise NoConvergence(str(exc)) from exc
    return float(root)


def find_roots_bracketed(
    f: Callable[..., np.ndarray],
    lo,
    hi,
    args: Sequence = (),
    xatol: float = config.ROOT_TOL,
    xrtol: float = 4 * np.finfo(float).eps,
    maxiter: int = config.ROOT_MAXITER,
) -> np.ndarray:
    """Elementwise bracketed roots of a vectorised ``f(x, *args)``.

    ``lo``, ``hi`` and ``args`` broadcast together; ``f`` must be elementwise.
    Endpoints where ``f`` vanishes exactly are returned as-is.
    """
    args = tuple(np.asarray(a, dtype=float) for a in args)
    lo, hi, *args = np.broadcast_arrays(np.asarray(lo, float), np.asarray(hi, float), *args)
    lo, hi = np.minimum(lo, hi), np.maximum(lo, hi)
    out = np.full(lo.shape, np.nan)
    flo = f(lo, *args)
    fhi = f(hi, *args)
    at_lo = flo == 0.0
    at_hi = (fhi == 0.0) & ~at_lo
    out[at_lo] = lo[at_lo]
    out[at_hi] = hi[at_hi]
    todo = ~(at_lo | at_hi)
    bad = todo & (np.sign(flo) == np.sign(fhi))
    if np.any(bad):
        k = np.flatnonzero(bad)[0]
        raise BracketError(
            f"{bad.sum()} brackets without sign change, e.g. [{lo.flat[k]!r}, {hi.flat[k]!r}]"
        )
    if np.any(todo):
        sub_args = tuple(a[todo] for a in args)
        res = elementwise.find_root(
            f,
            (lo[todo], hi[todo]),
            args=sub_args,
            tolerances=dict(xatol=xatol, xrtol=xrtol),
            maxiter=maxiter,
        )
        if not np.all(res.success):
            raise NoConvergence(f"{np.count_nonzero(~res.success)} roots did not converge")
        out[todo] = res.x
    return out


# --------------------------------------------------------------------------
# quadrature


def integrate_adaptive(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = config.QUAD_TOL,
    breakpoints: Sequence[float] = (),
    return_error: bool = False,
    limit: int = config.QUAD_LIMIT,
):
    """Adaptive Gauss-Kronrod integral of ``f`` over ``[lo, hi]``.

    Interior ``breakpoints`` are where the integrand switches regime; pass them,
    the integrator does not look for kinks by itself.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    pts = sorted(p for p in breakpoints if lo < p < hi)
    kwargs = dict(epsabs=tol, epsrel=0.0, limit=limit)
    if pts and np.isfinite(lo) and np.isfinite(hi):
        kwargs["points"] = pts
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(f, lo, hi, **kwargs)
        except integrate.IntegrationWarning as exc:
            raise NoConvergence(f"quadrature on [{lo}, {hi}] failed: {exc}") from exc
    if err > tol:
        raise NoConvergence(f"quadrature error estimate {err:.3g} exceeds {tol:.3g}")
    return (value, err) if return_error else value


# --------------------------------------------------------------------------
# monotone tables


class Monotonicity(str, Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"
    NONE = "none"


@dataclass(frozen=True)
class FunctionTable:
    """Sampled function on a strictly increasing abscissa grid."""

    abscissae: np.ndarray
    ordinates: np.ndarray
    monotonicity: Monotonicity = Monotonicity.NONE
    _interp: interpolate.PchipInterpolator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        x = np.array(self.abscissae, dtype=float)
        y = np.array(self.ordinates, dtype=float)
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "abscissae", x)
        object.__setattr__(self, "ordinates", y)
        object.__setattr__(self, "monotonicity", Monotonicity(self.monotonicity))
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError("abscissae and ordinates must be 1-d of equal length")
        if x.size < 2:
            raise ValueError("a table needs at least two points")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise ValueError("table entries must be finite")
        if np.any(np.diff(x) <= 0):
            raise ValueError("abscissae must be strictly increasing")
        slack = config.MONOTONE_TOL * np.maximum(1.0, np.abs(y[1:]))
        dy = np.diff(y)
        if self.monotonicity is Monotonicity.INCREASING and np.any(dy < -slack):
            raise ValueError("ordinates are not increasing")
        if self.monotonicity is Monotonicity.DECREASING and np.any(dy > slack):
            raise ValueError("ordinates are not decreasing")
        object.__setattr__(self, "_interp", interpolate.PchipInterpolator(x, y, extrapolate=False))

    @property
    def lo(self) -> float:
        return float(self.abscissae[0])

    @property
    def hi(self) -> float:
        return float(self.abscissae[-1])

    def __len__(self):
        return self.abscissae.size

    def __call__(self, x):
        return interpolate_monotone(self, x)


def interpolate_monotone(table: FunctionTable, x):
    """Shape-preserving (PCHIP) interpolation; raises OutOfRange off the table."""
    xa = np.asarray(x, dtype=float)
    # absorb rounding at the table ends
    eps = 1e-13 * max(abs(table.lo), abs(table.hi), 1.0)
    if np.any(xa < table.lo - eps) or np.any(xa > table.hi + eps) or np.any(np.isnan(xa)):
        raise OutOfRange(f"x outside table range [{table.lo}, {table.hi}]")
    y = table._interp(np.clip(xa, table.lo, table.hi))
    return float(y) if np.ndim(y) == 0 else y
