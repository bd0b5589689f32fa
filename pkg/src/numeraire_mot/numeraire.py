"""Change of numeraire: mass at x with weight w moves to 1/x with weight x w.

Applied to marginals, payoffs, couplings and hedges.  Every map here is an
involution; payoffs keep a back-reference so applying the map twice returns
the original object exactly.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from . import config
from .errors import MartingaleViolation, MeanMismatch
from .measures import AtomList, LogNormal, Marginal, TabulatedDensity
from .payoffs import Payoff, _flip, estimate_growth


def symmetrize_marginal(m: Marginal) -> Marginal:
    """Law of 1/X under the measure with density X relative to m."""
    if abs(m.mean - 1.0) > config.MEAN_TOL:
        raise MeanMismatch(f"numeraire change needs a unit-mean marginal, got mean {m.mean!r}")
    if isinstance(m, LogNormal):
        return m
    if isinstance(m, AtomList):
        x, w = m.points, m.weights
        return AtomList(1.0 / x, x * w / np.sum(x * w))
    if isinstance(m, TabulatedDensity):
        return m.reflect()
    raise TypeError(f"no numeraire change for {type(m).__name__}")


def symmetrize_payoff(c: Payoff) -> Payoff:
    """(x, y) -> y C(1/x, 1/y); the sign of C_xyy flips."""
    if c.reflected_from is not None:
        return c.reflected_from
    f = c.evaluator

    def reflected(x, y):
        return y * f(1.0 / x, 1.0 / y)

    return Payoff(
        reflected,
        f"S({c.name})",
        kappa=estimate_growth(reflected),
        kappa_exact=False,
        sm_sign=_flip(c.sm_sign),
        symmetry=c.symmetry,
        reflected_from=c,
    )


def symmetrize_hedge(phi, psi, h):
    """Hedge of the reflected payoff: x phi(1/x), y psi(1/y), phi(1/x) - h(1/x)/x."""

    def phi_s(x):
        x = np.asarray(x, dtype=float)
        return x * phi(1.0 / x)

    def psi_s(y):
        y = np.asarray(y, dtype=float)
        return y * psi(1.0 / y)

    def h_s(x):
        x = np.asarray(x, dtype=float)
        return phi(1.0 / x) - h(1.0 / x) / x

    return phi_s, psi_s, h_s


def symmetrize_hedge_arrays(x, y, phi, psi, h):
    """Same map on tabulated hedges: returns (1/x, 1/y, phi', psi', h') sorted."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    phi, psi, h = (np.asarray(v, float) for v in (phi, psi, h))
    ix, iy = np.argsort(1.0 / x), np.argsort(1.0 / y)
    # at u = 1/x: phi'(u) = u phi(x), h'(u) = phi(x) - x h(x); psi'(1/y) = psi(y) / y
    u, v = 1.0 / x, 1.0 / y
    phi_s = u * phi
    h_s = phi - x * h
    psi_s = v * psi
    return u[ix], v[iy], phi_s[ix], psi_s[iy], h_s[ix]


def symmetrize_coupling(k):
    """Push a coupling through the numeraire change (both marginals reflected)."""
    from . import couplings as cp

    if isinstance(k, cp.IdentityKernel):
        return cp.IdentityKernel(symmetrize_marginal(k.mu))
    if isinstance(k, cp.DiscreteKernel):
        x, y = k.x_points, k.y_points
        drift = np.abs(k.matrix @ y - x)
        if drift.max(initial=0.0) > 1e-8:
            raise MartingaleViolation(f"conditional mean misses x by {drift.max():.3g}")
        # pi'(1/x, 1/y) = y pi(x, y)
        pi = k.coupling * y[None, :]
        pi /= pi.sum()
        ix, iy = np.argsort(1.0 / x), np.argsort(1.0 / y)
        pi = pi[np.ix_(ix, iy)]
        return cp.DiscreteKernel.from_coupling((1.0 / x)[ix], pi.sum(axis=1), (1.0 / y)[iy], pi)
    mu_s, nu_s = symmetrize_marginal(k.mu), symmetrize_marginal(k.nu)
    if isinstance(k, cp.TwoBandKernel):
        return cp.reflect_two_band(k, mu_s, nu_s)
    if isinstance(k, cp.ThreeBandKernel):
        return cp.reflect_three_band(k, mu_s, nu_s)
    raise TypeError(f"no numeraire change for {type(k).__name__}")
