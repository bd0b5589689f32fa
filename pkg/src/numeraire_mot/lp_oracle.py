"""Discrete martingale transport: quantisation, LP bounds and dual hedges.

The LP over couplings q_ij >= 0 has three constraint families

    sum_j q_ij = w_i                (rows; duals phi_i)
    sum_i q_ij = v_j,  j < m-1      (columns; duals psi_j, psi_{m-1} = 0)
    sum_j q_ij (y_j - x_i) = 0      (martingale; duals h_i)

One column constraint is implied by the others and is dropped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import sparse

from . import config
from .errors import DomainError, Infeasible, NumericsFailure
from .measures import AtomList, Marginal, _parse_number
from .payoffs import Payoff, parse_payoff
from .simplex import SimplexResult, solve_lp

MIN, MAX = "min", "max"


# --------------------------------------------------------------------------
# quantisation


def _partial_mean(m: Marginal, levels: np.ndarray) -> np.ndarray:
    """int_0^u F^{-1}(s) ds at each level u; tail form above the median."""
    levels = np.asarray(levels, dtype=float)
    out = np.empty_like(levels)
    if isinstance(m, AtomList):
        cw = np.concatenate([[0.0], np.cumsum(m.weights)])
        cx = np.concatenate([[0.0], np.cumsum(m.weights * m.points)])
        for i, u in enumerate(levels):
            k = min(np.searchsorted(cw, u, side="right") - 1, m.points.size - 1)
            out[i] = cx[k] + (u - cw[k]) * m.points[k]
        return out
    for i, u in enumerate(levels):
        if u <= 0.0:
            out[i] = 0.0
        elif u >= 1.0:
            out[i] = m.mean
        elif u <= 0.5:
            out[i] = m.G(m.quantile(u))
        else:
            out[i] = m.mean - m.G_tail(m.isf(1.0 - u))
    return out


def quantize(m: Marginal, n: int) -> tuple[np.ndarray, np.ndarray]:
    """n equal-probability cells, each replaced by its conditional mean."""
    if n < 2:
        raise DomainError("need at least two cells")
    if isinstance(m, AtomList) and n >= m.points.size:
        return m.points.copy(), m.weights.copy()
    edges = np.arange(n + 1) / n
    pm = _partial_mean(m, edges)
    atoms = n * np.diff(pm)
    if not np.all(np.isfinite(atoms)) or np.any(atoms <= 0) or np.any(np.diff(atoms) <= 0):
        raise NumericsFailure("quantisation produced non-increasing atoms")
    weights = np.full(n, 1.0 / n)
    if abs(atoms @ weights - m.mean) > 1e-9:
        raise NumericsFailure(f"quantisation lost the mean: {atoms @ weights!r} vs {m.mean!r}")
    return atoms, weights


def quantize_marginal(m: Marginal, n: int) -> AtomList:
    return AtomList(*quantize(m, n))


def quantize_symmetric(m: Marginal, n: int) -> AtomList:
    """(Q + S(Q)) / 2 for Q the n-cell quantisation: invariant under the numeraire change."""
    x, w = quantize(m, n)
    xs, ws = 1.0 / x, x * w / np.sum(x * w)
    return AtomList(np.concatenate([x, xs]), np.concatenate([w, ws]) / 2.0)


# --------------------------------------------------------------------------
# instances


def call_prices(points, weights, strikes) -> np.ndarray:
    return np.maximum(np.asarray(points)[None, :] - np.asarray(strikes)[:, None], 0.0) @ weights


def discrete_convex_order_gap(xa, xw, ya, yw) -> float:
    """max over union strikes of C_mu(K) - C_nu(K); <= 0 iff convex order (equal means)."""
    k = np.union1d(xa, ya)
    return float(np.max(call_prices(xa, xw, k) - call_prices(ya, yw, k)))


@dataclass(frozen=True, eq=False)
class DiscreteMOTInstance:
    x_atoms: np.ndarray
    x_weights: np.ndarray
    y_atoms: np.ndarray
    y_weights: np.ndarray
    cost: np.ndarray
    cost_spec: Optional[str] = None
    expected: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("x_atoms", "x_weights", "y_atoms", "y_weights", "cost"):
            object.__setattr__(self, name, np.array(getattr(self, name), dtype=float))
        n, m = self.x_atoms.size, self.y_atoms.size
        if self.x_weights.shape != (n,) or self.y_weights.shape != (m,) or self.cost.shape != (n, m):
            raise DomainError("inconsistent instance dimensions")
        if np.any(self.x_atoms <= 0) or np.any(self.y_atoms <= 0):
            raise DomainError("atoms must be positive")
        if np.any(self.x_weights <= 0) or np.any(self.y_weights <= 0):
            raise DomainError("weights must be positive")
        for w in (self.x_weights, self.y_weights):
            if abs(w.sum() - 1.0) > 1e-12:
                raise DomainError(f"weights sum to {w.sum()!r}, not one")
        if abs(self.x_atoms @ self.x_weights - self.y_atoms @ self.y_weights) > 1e-9:
            raise DomainError("the two marginals have different means")
        if not np.all(np.isfinite(self.cost)):
            raise DomainError("cost must be finite")

    @classmethod
    def from_marginals(cls, mu: AtomList, nu: AtomList, payoff: Payoff, **kw) -> "DiscreteMOTInstance":
        x, y = mu.points, nu.points
        # payoffs that ignore one argument come back with a singleton axis
        cost = np.broadcast_to(payoff(x[:, None], y[None, :]), (x.size, y.size))
        return cls(x, mu.weights, y, nu.weights, cost, cost_spec=payoff.name, **kw)

    @property
    def shape(self):
        return self.cost.shape

    def convex_order_gap(self) -> float:
        return discrete_convex_order_gap(self.x_atoms, self.x_weights, self.y_atoms, self.y_weights)


def symmetrize_instance(inst: DiscreteMOTInstance) -> DiscreteMOTInstance:
    """Reciprocal atoms, weights x w, cost y C(1/x, 1/y) evaluated as C(x_i, y_j) / y_j."""
    ix = np.argsort(1.0 / inst.x_atoms)
    iy = np.argsort(1.0 / inst.y_atoms)
    xw = inst.x_atoms * inst.x_weights
    yw = inst.y_atoms * inst.y_weights
    cost = inst.cost / inst.y_atoms[None, :]
    return DiscreteMOTInstance(
        (1.0 / inst.x_atoms)[ix],
        (xw / xw.sum())[ix],
        (1.0 / inst.y_atoms)[iy],
        (yw / yw.sum())[iy],
        cost[np.ix_(ix, iy)],
        cost_spec=f"S({inst.cost_spec})" if inst.cost_spec else None,
    )


# --------------------------------------------------------------------------
# LP


def constraint_matrix(inst: DiscreteMOTInstance):
    """(A, b) for the equality-form LP over vec(q) in row-major order."""
    n, m = inst.shape
    idx = np.arange(n * m)
    i, j = np.divmod(idx, m)
    rows = [i, n + j, n + (m - 1) + i]
    vals = [np.ones(n * m), np.ones(n * m), (inst.y_atoms[j] - inst.x_atoms[i])]
    keep_col = j < m - 1
    r = np.concatenate([rows[0], rows[1][keep_col], rows[2]])
    c = np.concatenate([idx, idx[keep_col], idx])
    v = np.concatenate([vals[0], vals[1][keep_col], vals[2]])
    A = sparse.csc_matrix((v, (r, c)), shape=(2 * n + m - 1, n * m))
    b = np.concatenate([inst.x_weights, inst.y_weights[:-1], np.zeros(n)])
    return A, b


@dataclass(frozen=True)
class HedgeTriple:
    phi: np.ndarray
    psi: np.ndarray
    h: np.ndarray

    def value(self, inst: DiscreteMOTInstance) -> float:
        return float(self.phi @ inst.x_weights + self.psi @ inst.y_weights)

    def payoff_matrix(self, inst: DiscreteMOTInstance) -> np.ndarray:
        d = inst.y_atoms[None, :] - inst.x_atoms[:, None]
        return self.phi[:, None] + self.psi[None, :] + self.h[:, None] * d


@dataclass(frozen=True)
class BoundResult:
    direction: str
    value: float
    coupling: np.ndarray
    hedge: HedgeTriple
    status: str
    duality_gap: float
    iterations: int
    degenerate: bool


def _hedge_from_duals(inst, y, sgn) -> HedgeTriple:
    n, m = inst.shape
    y = sgn * y
    phi = y[:n]
    psi = np.concatenate([y[n : n + m - 1], [0.0]])
    h = y[n + m - 1 :]
    return HedgeTriple(phi.copy(), psi, h.copy())


def solve_bounds(inst: DiscreteMOTInstance, direction: str = MIN) -> BoundResult:
    """Optimal value, a vertex coupling and the dual hedge for one direction."""
    if direction not in (MIN, MAX):
        raise ValueError("direction must be 'min' or 'max'")
    gap = inst.convex_order_gap()
    if gap > 1e-12:
        raise Infeasible(f"marginals are not in convex order (call-price gap {gap:.3g})")
    A, b = constraint_matrix(inst)
    sgn = 1.0 if direction == MIN else -1.0
    res: SimplexResult = solve_lp(A, b, sgn * inst.cost.ravel())
    value = sgn * res.value
    hedge = _hedge_from_duals(inst, res.y, sgn)
    dual_value = hedge.value(inst)
    return BoundResult(
        direction=direction,
        value=value,
        coupling=res.x.reshape(inst.shape),
        hedge=hedge,
        status="optimal",
        duality_gap=abs(value - dual_value),
        iterations=res.iterations,
        degenerate=res.degenerate,
    )


def extract_dual_hedge(inst: DiscreteMOTInstance, direction: str = MIN,
                       result: Optional[BoundResult] = None) -> HedgeTriple:
    result = result or solve_bounds(inst, direction)
    return result.hedge


@dataclass(frozen=True)
class HedgeReport:
    max_violation: float
    value: float


def check_hedge(inst: DiscreteMOTInstance, hedge: HedgeTriple, direction: str = MIN) -> HedgeReport:
    """Sub-replication (min) or super-replication (max) on every atom pair."""
    diff = hedge.payoff_matrix(inst) - inst.cost
    viol = diff.max() if direction == MIN else (-diff).max()
    return HedgeReport(max(float(viol), 0.0), hedge.value(inst))


# --------------------------------------------------------------------------
# convex-order repair


def repair_convex_order(xa, xw, ya, yw) -> np.ndarray:
    """Closest (sup norm) y weights putting the pair in discrete convex order.

    Variables (v, t, s): v new weights, t the sup deviation, s slacks.
    """
    xa, xw, ya, yw = (np.asarray(a, float) for a in (xa, xw, ya, yw))
    m = ya.size
    strikes = np.union1d(xa, ya)
    target = call_prices(xa, xw, strikes)
    payoff = np.maximum(ya[None, :] - strikes[:, None], 0.0)
    k = strikes.size
    # rows: sum v = 1; sum v y = mean; call rows - s_c = target;
    #        v - yw + t - s_up = 0  -> v + t - s_up = yw ; -v + t - s_dn = -yw
    n_var = m + 1 + k + 2 * m
    blocks = []
    b = []
    I = sparse.identity(m)
    Z = lambda r, c: sparse.csr_matrix((r, c))
    blocks.append(sparse.hstack([np.ones((1, m)), Z(1, 1 + k + 2 * m)]))
    b.append([1.0])
    blocks.append(sparse.hstack([ya[None, :], Z(1, 1 + k + 2 * m)]))
    b.append([xa @ xw])
    blocks.append(sparse.hstack([payoff, Z(k, 1), -sparse.identity(k), Z(k, 2 * m)]))
    b.append(target)
    ones = np.ones((m, 1))
    blocks.append(sparse.hstack([I, ones, Z(m, k), -I, Z(m, m)]))
    b.append(yw)
    blocks.append(sparse.hstack([-I, ones, Z(m, k), Z(m, m), -I]))
    b.append(-yw)
    A = sparse.vstack(blocks).tocsc()
    c = np.zeros(n_var)
    c[m] = 1.0
    res = solve_lp(A, np.concatenate(b), c)
    v = np.maximum(res.x[:m], 0.0)
    return v / v.sum()


def quantized_instance(mu: Marginal, nu: Marginal, payoff: Payoff, n: int, symmetric: bool = False
                       ) -> DiscreteMOTInstance:
    """Quantise both marginals (optionally numeraire-symmetrised) and build the LP instance."""
    q = quantize_symmetric if symmetric else quantize_marginal
    a, b = q(mu, n), q(nu, n)
    yw = b.weights
    if discrete_convex_order_gap(a.points, a.weights, b.points, yw) > 1e-12:
        yw = repair_convex_order(a.points, a.weights, b.points, yw)
        keep = yw > 1e-15
        b = AtomList(b.points[keep], yw[keep])
        yw = b.weights
    # exact mean match for the instance invariant
    xw = a.weights / a.weights.sum()
    yw = yw / yw.sum()
    return DiscreteMOTInstance.from_marginals(AtomList(a.points, xw), AtomList(b.points, yw), payoff)


# --------------------------------------------------------------------------
# text format

_NUM = r"[-+0-9.eE/]+"


def dump_instance(inst: DiscreteMOTInstance, path=None) -> str:
    lines = []
    if inst.cost_spec:
        lines.append(f"cost = {inst.cost_spec}")
    for key, val in inst.expected.items():
        lines.append(f"expected_{key} = {float(val)!r}")
    lines.append("[x]")
    lines += [f"{float(a)!r} {float(w)!r}" for a, w in zip(inst.x_atoms, inst.x_weights)]
    lines.append("[y]")
    lines += [f"{float(a)!r} {float(w)!r}" for a, w in zip(inst.y_atoms, inst.y_weights)]
    if not inst.cost_spec:
        lines.append("[cost]")
        lines += [" ".join(repr(float(v)) for v in row) for row in inst.cost]
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text, newline="\n")
    return text


def parse_instance(text: str) -> DiscreteMOTInstance:
    """Inverse of dump_instance; numbers may be written as fractions."""
    section = None
    blocks = {"x": [], "y": [], "cost": []}
    spec = None
    expected = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head = re.fullmatch(r"\[(x|y|cost)\]", line)
        if head:
            section = head.group(1)
            continue
        if "=" in line and section is None or line.startswith(("cost =", "cost=", "expected_")):
            key, _, val = line.partition("=")
            key = key.strip()
            if key == "cost":
                spec = val.strip()
            elif key.startswith("expected_"):
                expected[key[len("expected_"):]] = _parse_number(val.strip())
            else:
                raise ValueError(f"unknown key {key!r}")
            continue
        if section is None:
            raise ValueError(f"data outside a block: {raw!r}")
        blocks[section].append([_parse_number(t) for t in line.split()])
    x = np.array(blocks["x"], dtype=float)
    y = np.array(blocks["y"], dtype=float)
    if x.ndim != 2 or x.shape[1] != 2 or y.ndim != 2 or y.shape[1] != 2:
        raise ValueError("[x] and [y] blocks need 'atom weight' lines")
    if spec:
        c = parse_payoff(spec)(x[:, 0][:, None], y[:, 0][None, :])
    elif blocks["cost"]:
        c = np.array(blocks["cost"], dtype=float)
    else:
        raise ValueError("instance needs 'cost = <spec>' or a [cost] block")
    return DiscreteMOTInstance(x[:, 0], x[:, 1], y[:, 0], y[:, 1], c, cost_spec=spec, expected=expected)


def load_instance(path) -> DiscreteMOTInstance:
    return parse_instance(Path(path).read_text())


# --------------------------------------------------------------------------
# fixtures with hand-derived optima


def fixture_instances() -> dict[str, DiscreteMOTInstance]:
    """Small instances whose optimal values were derived by vertex enumeration."""
    absdiff = parse_payoff("straddle2:alpha=1")
    ratio = parse_payoff("straddle1:alpha=1")
    one = AtomList([1.0], [1.0])
    two = AtomList([0.5, 1.5], [0.5, 0.5])
    return {
        "point-mass": DiscreteMOTInstance.from_marginals(
            one, two, absdiff, expected={"min": 0.5, "max": 0.5}),
        "two-by-two": DiscreteMOTInstance.from_marginals(
            two, AtomList([0.25, 1.75], [0.5, 0.5]), absdiff, expected={"min": 5 / 12, "max": 5 / 12}),
        "two-by-three": DiscreteMOTInstance.from_marginals(
            AtomList([0.9, 1.1], [0.5, 0.5]), AtomList([0.5, 1.0, 1.5], [0.25, 0.5, 0.25]), ratio,
            expected={"min": 134 / 495, "max": 146 / 495}),
    }
