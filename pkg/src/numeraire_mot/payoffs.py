"""Two-date payoffs C(x, y) and the fixed registry of payoff spec strings."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import DomainError
from .measures import _parse_number

POSITIVE, NEGATIVE, ZERO, UNKNOWN, MIXED = "positive", "negative", "zero", "unknown", "mixed"
SYMMETRIC, ASYMMETRIC = "symmetric", "asymmetric"

_KAPPA_BOX = np.geomspace(1e-2, 1e2, 65)


def estimate_growth(evaluator) -> float:
    """max |C| / (1 + x + y) over a log box; a numerical stand-in for kappa."""
    x, y = np.meshgrid(_KAPPA_BOX, _KAPPA_BOX, indexing="ij")
    return float(np.max(np.abs(evaluator(x, y)) / (1.0 + x + y)))


@dataclass(frozen=True)
class Payoff:
    """A vectorised payoff with the metadata the pricing layer consults.

    ``sm_sign`` is the sign of the mixed derivative C_xyy where it is known
    analytically; ``unknown`` otherwise.  ``kappa`` bounds |C| <= kappa (1 + x + y)
    and is marked approximate when it was measured rather than derived.
    """

    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    name: str
    kappa: float = np.nan
    kappa_exact: bool = False
    sm_sign: str = UNKNOWN
    symmetry: str = "unknown"
    reflected_from: Optional["Payoff"] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if np.isnan(self.kappa):
            object.__setattr__(self, "kappa", estimate_growth(self.evaluator))

    def __call__(self, x, y):
        out = self.evaluator(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        return float(out) if np.ndim(out) == 0 else out


def straddle_type_II(alpha: float = 1.0) -> Payoff:
    """|y - alpha x|."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    return Payoff(
        lambda x, y: np.abs(y - alpha * x),
        f"straddle2:alpha={alpha:g}",
        kappa=max(1.0, alpha),
        kappa_exact=True,
        symmetry=ASYMMETRIC,
    )


def straddle_type_I(alpha: float = 1.0) -> Payoff:
    """|y/x - alpha|; no linear growth bound near x = 0."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    return Payoff(lambda x, y: np.abs(y / x - alpha), f"straddle1:alpha={alpha:g}", symmetry=ASYMMETRIC)


def x_exp() -> Payoff:
    """x exp(-y); C_xyy = exp(-y) > 0."""
    return Payoff(lambda x, y: x * np.exp(-y), "xexp", kappa=1.0, kappa_exact=True,
                  sm_sign=POSITIVE, symmetry=ASYMMETRIC)


def call(strike: float) -> Payoff:
    if not strike > 0:
        raise DomainError("strike must be positive")
    return Payoff(lambda x, y: np.maximum(y - strike, 0.0), f"call:strike={strike:g}",
                  kappa=1.0, kappa_exact=True, sm_sign=ZERO, symmetry=ASYMMETRIC)


def forward() -> Payoff:
    return Payoff(lambda x, y: y - x, "forward", kappa=1.0, kappa_exact=True,
                  sm_sign=ZERO, symmetry=ASYMMETRIC)


def hedgeable(phi, psi, h, name="hedgeable") -> Payoff:
    """phi(x) + psi(y) + h(x)(y - x)."""
    return Payoff(lambda x, y: phi(x) + psi(y) + h(x) * (y - x), name, sm_sign=ZERO)


def linear_combination(a: float, c1: Payoff, b: float, c2: Payoff, name: str = None) -> Payoff:
    """a C1 + b C2, keeping a sign of C_xyy only when both terms agree."""
    signs = {c1.sm_sign if a > 0 else _flip(c1.sm_sign) if a < 0 else ZERO,
             c2.sm_sign if b > 0 else _flip(c2.sm_sign) if b < 0 else ZERO} - {ZERO}
    sm = ZERO if not signs else signs.pop() if len(signs) == 1 else UNKNOWN
    return Payoff(
        lambda x, y: a * c1.evaluator(x, y) + b * c2.evaluator(x, y),
        name or f"{a:g}*({c1.name})+{b:g}*({c2.name})",
        kappa=abs(a) * c1.kappa + abs(b) * c2.kappa,
        kappa_exact=c1.kappa_exact and c2.kappa_exact,
        sm_sign=sm,
    )


def _flip(sign: str) -> str:
    return {POSITIVE: NEGATIVE, NEGATIVE: POSITIVE}.get(sign, sign)


def parse_payoff(spec: str) -> Payoff:
    """Registry lookup; see README for the accepted spec strings."""
    spec = spec.strip()
    kind, _, body = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "alpha-portfolio":
        # base=<spec>,alpha=<a>; the base spec may itself contain commas
        head, sep, alpha_txt = body.rpartition(",alpha=")
        if not sep or not head.startswith("base="):
            raise ValueError(f"expected alpha-portfolio:base=<spec>,alpha=<a>, got {spec!r}")
        from .pricing import alpha_portfolio

        return alpha_portfolio(parse_payoff(head[len("base="):]), _parse_number(alpha_txt))
    params = {}
    for kv in body.split(","):
        if kv.strip():
            k, _, v = kv.partition("=")
            params[k.strip()] = _parse_number(v)
    table = {
        "straddle1": (straddle_type_I, {"alpha"}),
        "straddle2": (straddle_type_II, {"alpha"}),
        "xexp": (x_exp, set()),
        "call": (call, {"strike"}),
        "forward": (forward, set()),
    }
    if kind not in table:
        raise ValueError(f"unknown payoff {spec!r}")
    fn, keys = table[kind]
    if set(params) - keys:
        raise ValueError(f"unexpected parameters {sorted(set(params) - keys)} for {kind}")
    if kind in ("straddle1", "straddle2"):
        return fn(params.get("alpha", 1.0))
    if kind == "call":
        if "strike" not in params:
            raise ValueError("call needs strike=K")
        return fn(params["strike"])
    return fn()


def renamed(c: Payoff, name: str) -> Payoff:
    return replace(c, name=name)
