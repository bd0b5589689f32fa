"""Expected payoffs under explicit plans, model-free bounds and model risk."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import config
from .couplings import (
    DiscreteKernel,
    IdentityKernel,
    Kernel,
    _TabulatedKernel,
    build_hk,
)
from .errors import DomainError, NoConvergence, NumericsFailure
from .lp_oracle import MAX, MIN, quantized_instance, solve_bounds
from .measures import AtomList, Marginal
from .numeraire import symmetrize_payoff
from .payoffs import (  # noqa: F401  (re-exported registry)
    MIXED,
    NEGATIVE,
    POSITIVE,
    SYMMETRIC,
    UNKNOWN,
    ZERO,
    Payoff,
    call,
    forward,
    hedgeable,
    linear_combination,
    parse_payoff,
    straddle_type_I,
    straddle_type_II,
    x_exp,
)


@dataclass(frozen=True)
class PriceResult:
    value: float
    error: float  # quadrature estimate plus the truncated-tail bound
    tail_bound: float = 0.0

    def __float__(self):
        return self.value


def _tail_bound(mu: Marginal, kappa: float, lo: float, hi: float) -> float:
    """kappa E[(1 + X + Y); X outside [lo, hi]]; E[Y | X] = X gives 1 + 2X."""
    mass = float(mu.cdf(lo) + mu.sf(hi))
    first = float(mu.G(lo) + mu.G_tail(hi))
    return kappa * (mass + 2.0 * first)


def price(k: Kernel, C: Payoff, quad_tol: float = config.QUAD_TOL) -> PriceResult:
    """E[C(X, Y)] under mu(dx) k(x, dy)."""
    mu = k.mu
    if isinstance(k, DiscreteKernel):
        cost = C(k.x_points[:, None], k.y_points[None, :])
        return PriceResult(float(np.sum(k.coupling * cost)), 0.0)
    if isinstance(mu, AtomList):
        if not isinstance(k, IdentityKernel):
            raise TypeError("atomic base marginals need a DiscreteKernel")
        return PriceResult(float(mu.weights @ C(mu.points, mu.points)), 0.0)

    lo_t, hi_t = mu.lower(), mu.upper()
    tail = _tail_bound(mu, C.kappa, lo_t, hi_t)

    def diagonal(x):
        return float(C(x, x)) * float(mu.pdf(x))

    def integrate(f, lo, hi, breaks=()):
        if not lo < hi:
            return 0.0, 0.0
        try:
            return _integrate(f, lo, hi, quad_tol, breaks)
        except NoConvergence as exc:
            raise NumericsFailure(f"pricing quadrature failed on [{lo:.6g}, {hi:.6g}]: {exc}") from exc

    if isinstance(k, IdentityKernel):
        v, e = integrate(diagonal, lo_t, hi_t)
        return PriceResult(v, e + tail, tail)
    if not isinstance(k, _TabulatedKernel):
        raise TypeError(f"cannot price under {type(k).__name__}")

    s_lo, s_hi = k.split_interval
    s_lo, s_hi = max(s_lo, lo_t), min(s_hi, hi_t)

    def split(x):
        ys, ws = k.atoms(np.array([x]))
        return float(np.sum(ws[:, 0] * C(np.full(ys.shape[0], x), ys[:, 0]))) * float(mu.pdf(x))

    total, err = 0.0, 0.0
    for f, lo, hi in ((diagonal, lo_t, s_lo), (split, s_lo, s_hi), (diagonal, s_hi, hi_t)):
        v, e = integrate(f, lo, hi)
        total += v
        err += e
    return PriceResult(total, err + tail, tail)


def _integrate(f, lo, hi, tol, breaks):
    from .numerics import integrate_adaptive

    # subdivide so the adaptive rule resolves the kernel's steep ends
    edges = np.unique(np.concatenate([np.geomspace(lo, hi, 9), [b for b in breaks if lo < b < hi]]))
    total, err = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        v, e = integrate_adaptive(f, a, b, tol=tol / (edges.size - 1), return_error=True)
        total += v
        err += e
    return total, err


def _same_law(mu: Marginal, nu: Marginal) -> bool:
    try:
        return mu == nu
    except Exception:
        return mu is nu


def straddle_lower_bounds(mu: Marginal, nu: Marginal, n_grid: int = config.GRID_POINTS):
    """Both ATM straddle lower bounds priced on one three-band plan.

    Returns ({"I": value, "II": value}, kernel).
    """
    if _same_law(mu, nu):
        return {"I": 0.0, "II": 0.0}, IdentityKernel(mu)
    k = build_hk(mu, nu, n_grid)
    return {"I": price(k, straddle_type_I(1.0)).value, "II": price(k, straddle_type_II(1.0)).value}, k


def lower_bound_straddle(mu: Marginal, nu: Marginal, type: str = "II", kernel: Optional[Kernel] = None,
                         n_grid: int = config.GRID_POINTS):
    """(value, kernel): the ATM forward-start straddle lower bound."""
    if type not in ("I", "II"):
        raise ValueError("type must be 'I' or 'II'")
    if kernel is None:
        if _same_law(mu, nu):
            return 0.0, IdentityKernel(mu)
        kernel = build_hk(mu, nu, n_grid)
    C = straddle_type_I(1.0) if type == "I" else straddle_type_II(1.0)
    return price(kernel, C).value, kernel


# --------------------------------------------------------------------------
# Spence-Mirrlees sign probe


@dataclass(frozen=True)
class SignReport:
    sign: str
    values: np.ndarray
    noise: np.ndarray
    reflected_sign: Optional[str] = None

    @property
    def flip_consistent(self) -> bool:
        if self.reflected_sign is None or self.sign not in (POSITIVE, NEGATIVE):
            return True
        return {POSITIVE: NEGATIVE, NEGATIVE: POSITIVE}[self.sign] == self.reflected_sign


def _cxyy(C: Payoff, x, y, h):
    hx, hy = h * x, h * y

    def dyy(xx):
        return (C(xx, y + hy) - 2.0 * C(xx, y) + C(xx, y - hy)) / (hy * hy)

    return (dyy(x + hx) - dyy(x - hx)) / (2.0 * hx)


def _classify(values, noise) -> str:
    sig = np.abs(values) > 10.0 * noise
    if not np.any(sig):
        return ZERO
    if np.all(values[sig] > 0):
        return POSITIVE
    if np.all(values[sig] < 0):
        return NEGATIVE
    return MIXED


def _probe(C: Payoff, x, y, h):
    coarse = _cxyy(C, x, y, h)
    fine = _cxyy(C, x, y, h / 2)
    values = (4.0 * fine - coarse) / 3.0
    scale = np.max(np.abs([C(x + s * h * x, y + t * h * y) for s in (-1, 0, 1) for t in (-1, 0, 1)]), axis=0)
    eps = np.finfo(float).eps
    # rounding noise of the fine stencil (its coefficients sum to 4 / (hx hy^2)), Richardson-amplified
    noise = eps * scale * 4.0 / ((h / 2) ** 3 * x * y * y) * (4.0 / 3.0) + np.abs(fine - coarse) / 3.0
    return values, noise


def sm_sign_probe(C: Payoff, n_samples: int = 64, seed: int = 0, h: float = 1e-4,
                  box: tuple[float, float] = (0.5, 2.0), check_flip: bool = True) -> SignReport:
    """Sign of C_xyy by nested central differences at random points of a log box."""
    rng = np.random.default_rng(seed)
    lx, ly = (rng.uniform(np.log(box[0]), np.log(box[1]), n_samples) for _ in range(2))
    x, y = np.exp(lx), np.exp(ly)
    values, noise = _probe(C, x, y, h)
    sign = _classify(values, noise)
    reflected = None
    if check_flip:
        reflected = sm_sign_probe(symmetrize_payoff(C), n_samples, seed, h, box, check_flip=False).sign
    return SignReport(sign, values, noise, reflected)


# --------------------------------------------------------------------------
# model risk


def alpha_portfolio(C: Payoff, alpha: float) -> Payoff:
    """alpha C + (1 - alpha) S*(C); alpha = 1/2 is numeraire symmetric."""
    if not 0.0 <= alpha <= 1.0:
        raise DomainError("alpha must lie in [0, 1]")
    if alpha == 1.0:
        return C
    S = symmetrize_payoff(C)
    if alpha == 0.0:
        return S
    f, g = C.evaluator, S.evaluator
    return Payoff(
        lambda x, y: alpha * f(x, y) + (1.0 - alpha) * g(x, y),
        f"alpha-portfolio:base={C.name},alpha={alpha:g}",
        kappa=alpha * C.kappa + (1.0 - alpha) * S.kappa,
        symmetry=SYMMETRIC if alpha == 0.5 else C.symmetry,
    )


@dataclass(frozen=True)
class ModelRisk:
    value: float
    lower: float
    upper: float
    duality_gap: float

    def __float__(self):
        return self.value


def model_risk(mu: Marginal, nu: Marginal, C: Payoff, n: int = 100, symmetric: bool = False) -> ModelRisk:
    """Spread of the discrete LP bounds; ``symmetric`` quantises numeraire-invariantly."""
    inst = quantized_instance(mu, nu, C, n, symmetric=symmetric)
    lo, hi = solve_bounds(inst, MIN), solve_bounds(inst, MAX)
    return ModelRisk(hi.value - lo.value, lo.value, hi.value, max(lo.duality_gap, hi.duality_gap))
