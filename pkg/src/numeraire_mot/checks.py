"""Named invariant checks grouped into suites (used by ``verify``)."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from . import config
from . import couplings as cp
from . import lp_oracle as lp
from .errors import MOTError
from .measures import AtomList, LogNormal, Marginal, check_convex_order, delta_profile
from .numeraire import symmetrize_coupling, symmetrize_hedge, symmetrize_marginal, symmetrize_payoff
from .payoffs import straddle_type_I, straddle_type_II


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    tol: float
    detail: str = ""

    def as_dict(self):
        return asdict(self)


def _check(name, value, tol, detail="") -> Check:
    value = float(value)
    return Check(name, bool(np.isfinite(value) and value <= tol), value, tol, detail)


def _guard(name: str, fn: Callable[[], Iterable[Check]]) -> list[Check]:
    try:
        return list(fn())
    except MOTError as exc:
        return [Check(name, False, float("nan"), 0.0, f"{type(exc).__name__}: {exc}")]


def cdf_grid(m: Marginal, n: int = 1000) -> np.ndarray:
    if isinstance(m, AtomList):
        # just off each atom: reciprocal round trips move atoms by an ulp
        pts = m.points
        return np.unique(np.concatenate([pts * (1 - 1e-9), pts * (1 + 1e-9)]))
    return np.geomspace(m.lower(1e-12), m.upper(1e-12), n)


def involution_error(m: Marginal) -> float:
    back = symmetrize_marginal(symmetrize_marginal(m))
    y = cdf_grid(m)
    err = float(np.max(np.abs(np.asarray(back.cdf(y)) - np.asarray(m.cdf(y)))))
    if isinstance(m, AtomList):
        if back.points.size != m.points.size:
            return float("inf")
        err = max(err, float(np.max(np.abs(back.points - m.points) / m.points)),
                  float(np.max(np.abs(back.weights - m.weights))))
    return err


def reflection_identity_errors(m: Marginal) -> tuple[float, float]:
    """sup |F_S(y) - (1 - G(1/y))| and sup |G_S(y) - (1 - F(1/y))|."""
    s = symmetrize_marginal(m)
    # for atomic laws the grid avoids atoms, where one-sided limits differ
    y = cdf_grid(s)
    ef = np.abs(np.asarray(s.cdf(y)) - (1.0 - np.asarray(m.G(1.0 / y))))
    eg = np.abs(np.asarray(s.G(y)) - (1.0 - np.asarray(m.cdf(1.0 / y))))
    return float(ef.max()), float(eg.max())


def hk_symmetry_errors(mu: Marginal, nu: Marginal, n_grid: int = config.GRID_POINTS) -> tuple[float, float]:
    """Direct plan against the reflected plan of the numeraire-changed pair, at the same nodes.

    The reflection pairs p(x) with 1 / q^S(1/x) and q(x) with 1 / p^S(1/x).
    """
    k = cp.build_hk(mu, nu, n_grid)
    x = k.nodes
    ks = cp.build_hk(symmetrize_marginal(mu), symmetrize_marginal(nu), nodes=np.sort(1.0 / x))
    kr = symmetrize_coupling(ks)
    # reflected nodes equal x up to rounding, so interpolation returns node values
    lo, hi = kr.split_interval
    sel = (x >= lo) & (x <= hi)
    return (float(np.max(np.abs(kr.p(x[sel]) - k.p.ordinates[sel]))),
            float(np.max(np.abs(kr.q(x[sel]) - k.q.ordinates[sel]))))


def right_exchange_errors(mu: Marginal, nu: Marginal, n_grid: int = config.GRID_POINTS) -> dict:
    direct = cp.build_right_monotone(mu, nu, n_grid, method="direct")
    # reflection built on the direct nodes so both are compared node for node
    refl = cp.build_right_monotone(mu, nu, method="reflection", nodes=direct.split_nodes())
    out = cp.compare_two_band(direct, refl)
    mu_s, nu_s = symmetrize_marginal(mu), symmetrize_marginal(nu)
    out["x_star_reciprocal"] = abs(direct.x_star - 1.0 / delta_profile(mu_s, nu_s).m)
    return out


def hedge_reconstruction_error(rng: np.random.Generator, n_payoffs: int = 20, n_points: int = 200) -> float:
    """Worst error of S*(C) rebuilt from the transformed hedge, over random hedgeable C."""
    worst = 0.0
    for _ in range(n_payoffs):
        a = rng.normal(size=6)
        phi = lambda x, a=a: a[0] * np.sin(x) + a[1] * x ** 2
        psi = lambda y, a=a: a[2] * np.log(y) + a[3] * np.sqrt(y)
        h = lambda x, a=a: a[4] * np.exp(-x) + a[5]
        C = lambda x, y: phi(x) + psi(y) + h(x) * (y - x)
        x = np.exp(rng.uniform(-1.5, 1.5, n_points))
        y = np.exp(rng.uniform(-1.5, 1.5, n_points))
        target = y * C(1.0 / x, 1.0 / y)
        ps, qs, hs = symmetrize_hedge(phi, psi, h)
        rebuilt = ps(x) + qs(y) + hs(x) * (y - x)
        worst = max(worst, float(np.max(np.abs(rebuilt - target))))
    return worst


# --------------------------------------------------------------------------
# suites


def suite_symmetry(mu: Marginal, nu: Marginal, n_grid: int = config.GRID_POINTS) -> list[Check]:
    out: list[Check] = []
    marginals = {
        "mu": mu,
        "nu": nu,
        "two-atom": AtomList([0.5, 2.0], [2 / 3, 1 / 3]),
        "quantized-mu": lp.quantize_marginal(mu, 50),
    }
    for label, m in marginals.items():
        out += _guard(f"involution[{label}]", lambda m=m, label=label: [
            _check(f"involution[{label}]", involution_error(m), 1e-9)])
        ef, eg = reflection_identity_errors(m)
        out.append(_check(f"reflected-cdf-identity[{label}]", ef, 1e-9))
        out.append(_check(f"reflected-G-identity[{label}]", eg, 1e-9))

    def order():
        ok = check_convex_order(symmetrize_marginal(mu), symmetrize_marginal(nu)).ok
        return [Check("convex-order-preserved", ok, 0.0 if ok else 1.0, 0.0)]

    out += _guard("convex-order-preserved", order)

    def extremizers():
        d = delta_profile(mu, nu)
        ds = delta_profile(symmetrize_marginal(mu), symmetrize_marginal(nu))
        return [_check("extremizer-reciprocity", abs(ds.m_tilde - 1.0 / d.m), 1e-6)]

    out += _guard("extremizer-reciprocity", extremizers)

    grid = np.exp(np.random.default_rng(7).uniform(-2, 2, (2, 500)))
    diff = np.abs(symmetrize_payoff(straddle_type_II(1.0))(*grid) - straddle_type_I(1.0)(*grid))
    out.append(_check("payoff-reflection[straddle]", diff.max(), 1e-12))
    out.append(_check("hedge-transform", hedge_reconstruction_error(np.random.default_rng(11)), 1e-10))

    def hk():
        ep, eq = hk_symmetry_errors(mu, nu, n_grid)
        return [_check("hk-symmetry[p]", ep, 1e-6), _check("hk-symmetry[q]", eq, 1e-6)]

    out += _guard("hk-symmetry", hk)

    def exchange():
        e = right_exchange_errors(mu, nu, n_grid)
        return [_check(f"left-right-exchange[{k}]", e[k], 1e-6)
                for k in ("T_d", "T_u", "prob", "x_star_reciprocal")]

    out += _guard("left-right-exchange", exchange)
    return out


def suite_coupling(mu: Marginal, nu: Marginal, n_grid: int = config.GRID_POINTS,
                   marginal_tol: float = config.MARGINAL_TOL,
                   martingale_tol: float = config.MARTINGALE_TOL) -> list[Check]:
    out: list[Check] = []
    builders = {
        "hk": cp.build_hk,
        "left": cp.build_left_monotone,
        "right": cp.build_right_monotone,
    }
    for name, build in builders.items():
        def run(name=name, build=build):
            k = build(mu, nu, n_grid)
            r = cp.validate_coupling(k)
            return [
                _check(f"{name}-marginal", r.marginal_err, marginal_tol),
                _check(f"{name}-martingale", r.martingale_err, martingale_tol),
            ]
        out += _guard(f"{name}-build", run)
    return out


def suite_oracle(fixtures: Optional[dict] = None, tol: float = 1e-9) -> list[Check]:
    out: list[Check] = []
    fixtures = fixtures if fixtures is not None else lp.fixture_instances()
    for name, inst in fixtures.items():
        def run(name=name, inst=inst):
            res = []
            for d in (lp.MIN, lp.MAX):
                r = lp.solve_bounds(inst, d)
                if d in inst.expected:
                    res.append(_check(f"{name}-{d}-value", abs(r.value - inst.expected[d]), tol,
                                      f"got {r.value!r}, expected {inst.expected[d]!r}"))
                res.append(_check(f"{name}-{d}-duality-gap", r.duality_gap, 1e-8))
                res.append(_check(f"{name}-{d}-hedge", lp.check_hedge(inst, r.hedge, d).max_violation, 1e-8))
                s = lp.solve_bounds(lp.symmetrize_instance(inst), d)
                res.append(_check(f"{name}-{d}-numeraire-invariance", abs(s.value - r.value), tol))
            return res
        out += _guard(f"{name}-solve", run)
    return out


SUITES = ("symmetry", "coupling", "oracle")


def run_suite(name: str, mu: Marginal = None, nu: Marginal = None, n_grid: int = config.GRID_POINTS,
              fixtures: Optional[dict] = None) -> list[Check]:
    mu = mu or LogNormal(0.2)
    nu = nu or LogNormal(0.3)
    if name == "all":
        return [c for s in SUITES for c in run_suite(s, mu, nu, n_grid, fixtures)]
    if name == "symmetry":
        return suite_symmetry(mu, nu, n_grid)
    if name == "coupling":
        return suite_coupling(mu, nu, n_grid)
    if name == "oracle":
        return suite_oracle(fixtures)
    raise ValueError(f"unknown suite {name!r}")
