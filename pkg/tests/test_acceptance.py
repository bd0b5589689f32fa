"""Acceptance criteria, one PASS/FAIL line each.

Under pytest every criterion is its own test and its line is printed even when
output capture is on.  ``python3 tests/test_acceptance.py`` prints the twelve
lines and exits nonzero if any fails.
"""

import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from numeraire_mot import couplings as cp  # noqa: E402
from numeraire_mot import lp_oracle as lp  # noqa: E402
from numeraire_mot.checks import (  # noqa: E402
    hedge_reconstruction_error,
    hk_symmetry_errors,
    involution_error,
    reflection_identity_errors,
    right_exchange_errors,
)
from numeraire_mot.measures import AtomList, LogNormal, delta_profile, lognormal_extremizer_closed_form  # noqa: E402
from numeraire_mot.numeraire import symmetrize_marginal, symmetrize_payoff  # noqa: E402
from numeraire_mot.pricing import (  # noqa: E402
    alpha_portfolio,
    call,
    model_risk,
    price,
    straddle_type_I,
    straddle_type_II,
    x_exp,
)

from oracles import ln_cdf, ln_G, random_martingale_pair  # noqa: E402

MU, NU = LogNormal(0.2), LogNormal(0.3)
SOLVER_TOL = 1e-9

CRITERIA = {}


def criterion(number, title):
    def register(fn):
        CRITERIA[number] = (title, fn)
        return fn
    return register


def run(number):
    title, fn = CRITERIA[number]
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crash is a failure, reported on the same line
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    secs = time.perf_counter() - t0
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d} {title}: {detail} [{secs:.1f} s]"
    return ok, line


def fmt(x):
    return f"{x:.2e}"


# --------------------------------------------------------------------------


@criterion(1, "involution and reflected CDF identities")
def c1():
    t0 = time.perf_counter()
    marginals = {
        "LN(0.2)": MU,
        "LN(0.3)": NU,
        "atoms 0.5/2": AtomList([0.5, 2.0], [2 / 3, 1 / 3]),
        "quantized LN(0.2)": lp.quantize_marginal(MU, 50),
    }
    worst = 0.0
    for m in marginals.values():
        ef, eg = reflection_identity_errors(m)
        worst = max(worst, involution_error(m), ef, eg)
    secs = time.perf_counter() - t0
    return worst <= 1e-9 and secs < 1.0, f"sup error {fmt(worst)} (tol 1e-9), {secs:.2f} s (limit 1 s)"


@criterion(2, "log-normal laws are fixed by the numeraire change")
def c2():
    worst = 0.0
    for s in (0.1, 0.2, 0.5):
        m = LogNormal(s)
        y = np.geomspace(m.lower(), m.upper(), 1000)
        sm = symmetrize_marginal(m)
        worst = max(worst,
                    np.max(np.abs(sm.cdf(y) - m.cdf(y))),
                    # the fixed point itself, from the independent closed forms
                    np.max(np.abs((1.0 - ln_G(s, 1.0 / y)) - ln_cdf(s, y))))
    return worst <= 1e-9, f"sup |F_S - F| {fmt(worst)} (tol 1e-9)"


@criterion(3, "extremizers of F_nu - F_mu")
def c3():
    d = delta_profile(MU, NU)
    err = max(abs(d.m - 0.783887), abs(d.m_tilde - 1.275693))
    cf = lognormal_extremizer_closed_form(0.2, 0.3)
    err_cf = max(abs(d.m - cf[0]), abs(d.m_tilde - cf[1]))
    prod = 0.0
    for s_mu, s_nu in [(0.2, 0.3), (0.1, 0.2), (0.15, 0.4), (0.3, 0.35), (0.25, 0.6)]:
        e = delta_profile(LogNormal(s_mu), LogNormal(s_nu))
        prod = max(prod, abs(e.m * e.m_tilde - 1.0))
    ok = err <= 1e-6 and err_cf <= 1e-6 and prod <= 1e-6
    return ok, (f"m={d.m:.6f} m~={d.m_tilde:.6f}, vs frozen {fmt(err)}, vs closed form {fmt(err_cf)}, "
                f"max |m m~ - 1| {fmt(prod)}")


@criterion(4, "coupling validity at 512 nodes")
def c4():
    t0 = time.perf_counter()
    parts, ok = [], True
    for name, build in (("hk", cp.build_hk), ("left", cp.build_left_monotone), ("right", cp.build_right_monotone)):
        r = cp.validate_coupling(build(MU, NU, 512))
        ok &= r.marginal_err <= 1e-4 and r.martingale_err <= 1e-8
        parts.append(f"{name} {fmt(r.marginal_err)}/{fmt(r.martingale_err)}")
    secs = time.perf_counter() - t0
    return ok and secs < 30, f"marginal/martingale {', '.join(parts)}; {secs:.1f} s (limit 30 s)"


@criterion(5, "three-band plan attains the LP straddle lower bounds")
def c5():
    t0 = time.perf_counter()
    k = cp.build_hk(MU, NU, 512)
    parts, ok = [], True
    for label, c in (("II", straddle_type_II(1.0)), ("I", straddle_type_I(1.0))):
        v = price(k, c).value
        lo = lp.solve_bounds(lp.quantized_instance(MU, NU, c, 200), lp.MIN).value
        rel = abs(v - lo) / lo
        ok &= rel <= 0.01
        parts.append(f"type {label} plan {v:.6f} LP {lo:.6f} rel {rel:.2%}")
    secs = time.perf_counter() - t0
    return ok and secs < 60, f"{'; '.join(parts)}; {secs:.1f} s (limit 60 s)"


@criterion(6, "three-band plan commutes with the numeraire change")
def c6():
    ep, eq = hk_symmetry_errors(MU, NU, 512)
    return max(ep, eq) <= 1e-6, f"sup |p| {fmt(ep)}, sup |q| {fmt(eq)} (tol 1e-6)"


@criterion(7, "reflected left plan equals directly built right plan")
def c7():
    e = right_exchange_errors(MU, NU, 512)
    keys = ("T_d", "T_u", "prob", "x_star_reciprocal")
    worst = max(e[k] for k in keys)
    return worst <= 1e-6, ", ".join(f"{k} {fmt(e[k])}" for k in keys) + " (tol 1e-6)"


@criterion(8, "curtain plans attain the LP upper bounds for x exp(-y) and its mirror")
def c8():
    c = x_exp()
    s = symmetrize_payoff(c)
    v_left = price(cp.build_left_monotone(MU, NU, 512), c).value
    v_right = price(cp.build_right_monotone(MU, NU, 512), s).value
    hi_c = lp.solve_bounds(lp.quantized_instance(MU, NU, c, 100), lp.MAX).value
    hi_s = lp.solve_bounds(lp.quantized_instance(MU, NU, s, 100), lp.MAX).value
    r1, r2 = abs(v_left - hi_c) / abs(hi_c), abs(v_right - hi_s) / abs(hi_s)
    return max(r1, r2) <= 0.01, (f"left {v_left:.6f} vs LP {hi_c:.6f} ({r1:.3%}); "
                                 f"right {v_right:.6f} vs LP {hi_s:.6f} ({r2:.3%})")


@criterion(9, "exact LP fixtures, duality and hedge feasibility")
def c9():
    worst_v = worst_gap = worst_h = 0.0
    for inst in lp.fixture_instances().values():
        for d in (lp.MIN, lp.MAX):
            r = lp.solve_bounds(inst, d)
            worst_v = max(worst_v, abs(r.value - inst.expected[d]))
            worst_gap = max(worst_gap, r.duality_gap)
            worst_h = max(worst_h, lp.check_hedge(inst, r.hedge, d).max_violation)
    ok = worst_v <= 1e-9 and worst_gap <= 1e-8 and worst_h <= 1e-8
    return ok, f"value error {fmt(worst_v)}, duality gap {fmt(worst_gap)}, hedge violation {fmt(worst_h)}"


@criterion(10, "LP bounds are invariant under the numeraire change")
def c10():
    instances = list(lp.fixture_instances().values())
    instances.append(lp.quantized_instance(MU, NU, x_exp(), 30))
    instances.append(lp.quantized_instance(MU, NU, straddle_type_II(1.0), 30))
    x, w, y, v, _ = random_martingale_pair(np.random.default_rng(5), 8)
    instances.append(lp.DiscreteMOTInstance(x, w, y, v, np.random.default_rng(6).normal(size=(x.size, y.size))))
    worst = 0.0
    for inst in instances:
        s = lp.symmetrize_instance(inst)
        for d in (lp.MIN, lp.MAX):
            worst = max(worst, abs(lp.solve_bounds(s, d).value - lp.solve_bounds(inst, d).value))
    return worst <= 1e-9, f"{len(instances)} instances, max bound change {fmt(worst)} (tol 1e-9)"


def _risk_symmetry(base, n):
    risk = {a: model_risk(MU, NU, alpha_portfolio(base, a), n=n, symmetric=True).value
            for a in (0.0, 0.25, 0.5, 0.75, 1.0)}
    pair = max(abs(risk[0.0] - risk[1.0]), abs(risk[0.25] - risk[0.75]))
    excess = max(risk[0.5] - r for r in risk.values())
    return risk, pair, excess


@criterion(11, "model risk is symmetric in alpha and smallest at 1/2")
def c11():
    # the call depends on y alone, so every portfolio is hedgeable and R = 0;
    # x exp(-y) gives the same statements a nonzero spread to act on
    parts, ok = [], True
    for label, base, n in (("call:strike=1.1", call(1.1), 50), ("xexp", x_exp(), 40)):
        risk, pair, excess = _risk_symmetry(base, n)
        ok &= pair <= 2 * SOLVER_TOL and excess <= SOLVER_TOL
        parts.append(f"{label} R(1)={risk[1.0]:.3e} R(1/2)={risk[0.5]:.3e} "
                     f"|R(a)-R(1-a)| {fmt(pair)}, R(1/2)-min {fmt(excess)}")
    return ok, "; ".join(parts)


@criterion(12, "hedge transform reproduces the reflected payoff")
def c12():
    err = hedge_reconstruction_error(np.random.default_rng(12), n_payoffs=20)
    return err <= 1e-10, f"max reconstruction error over 20 payoffs {fmt(err)} (tol 1e-10)"


# --------------------------------------------------------------------------


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_acceptance(number, capsys):
    ok, line = run(number)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [run(n) for n in sorted(CRITERIA)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
