"""Two-phase revised simplex for  min c.x  s.t.  A x = b, x >= 0.

Dense explicit basis inverse with product-form (rank one) updates and periodic
refactorisation; A is a scipy CSC matrix so reduced costs are one sparse
mat-vec.  Pricing is Dantzig's rule, falling back to Bland's rule after a run
of degenerate pivots so the method cannot cycle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg.blas import dger

from . import config
from .errors import DegenerateBasis, Infeasible, NoConvergence, Unbounded

REFACTOR_EVERY = 80
DEGENERATE_RUN = 50


@dataclass(frozen=True)
class SimplexResult:
    x: np.ndarray
    y: np.ndarray  # duals of the equality rows
    value: float
    basis: np.ndarray
    iterations: int
    degenerate: bool  # some basic variable sits at zero in the optimal basis


class _Solver:
    def __init__(self, A, b, c, pivot_tol, feas_tol, dual_tol, max_iter):
        self.m, self.n = A.shape
        # one artificial per row; b >= 0 is arranged by flipping rows
        sign = np.where(b < 0, -1.0, 1.0)
        A = sparse.diags(sign) @ A
        self.b = b * sign
        self.sign = sign
        self.A = sparse.hstack([A, sparse.identity(self.m, format="csc")], format="csc")
        self.c = np.concatenate([c, np.zeros(self.m)])
        self.pivot_tol, self.feas_tol, self.dual_tol = pivot_tol, feas_tol, dual_tol
        self.max_iter = max_iter
        self.basis = np.arange(self.n, self.n + self.m)
        self.Binv = np.asfortranarray(np.eye(self.m))
        self.xB = self.b.copy()
        self.iterations = 0
        self.AT = self.A.T.tocsr()

    def column(self, k):
        A = self.A
        lo, hi = A.indptr[k], A.indptr[k + 1]
        return self.Binv[:, A.indices[lo:hi]] @ A.data[lo:hi]

    def refactor(self):
        B = self.A[:, self.basis].toarray()
        try:
            self.Binv = np.asfortranarray(np.linalg.inv(B))
        except np.linalg.LinAlgError as exc:
            raise DegenerateBasis("basis matrix became singular") from exc
        self.xB = self.Binv @ self.b
        self.xB[np.abs(self.xB) < self.feas_tol * 1e-3] = 0.0

    def pivot(self, r, k, col):
        piv = col[r]
        row = self.Binv[r] / piv
        self.Binv = dger(-1.0, col, row, a=self.Binv, overwrite_a=True)
        self.Binv[r] = row
        theta = self.xB[r] / piv
        self.xB -= theta * col
        self.xB[r] = theta
        self.basis[r] = k

    def ratio_test(self, col, bland):
        """Harris two-pass test: among rows whose ratio is within the feasibility
        slack of the minimum, pivot on the largest entry."""
        pos = np.flatnonzero(col > self.pivot_tol)
        if pos.size == 0:
            return -1, 0.0
        xb, cp = np.maximum(self.xB[pos], 0.0), col[pos]
        bound = np.min((xb + self.feas_tol * 1e-3) / cp)
        cand = pos[xb / cp <= bound]
        if bland:
            r = int(cand[np.argmin(self.basis[cand])])
        else:
            r = int(cand[np.argmax(col[cand])])
        return r, max(self.xB[r], 0.0) / col[r]

    def run(self, cost, allowed):
        """Iterate to optimality for ``cost``; ``allowed`` masks enterable columns."""
        degenerate_run = 0
        since_refactor = 0
        y = cost[self.basis] @ self.Binv
        while True:
            if self.iterations >= self.max_iter:
                raise NoConvergence(f"simplex hit the iteration limit {self.max_iter}")
            d = cost - self.AT @ y
            d[~allowed] = np.inf
            d[self.basis] = np.inf
            bland = degenerate_run >= DEGENERATE_RUN
            if bland:
                cand = np.flatnonzero(d < -self.dual_tol)
                k = int(cand[0]) if cand.size else -1
            else:
                k = int(np.argmin(d))
                if not d[k] < -self.dual_tol:
                    k = -1
            if k < 0:
                # confirm on a fresh factorisation before declaring optimality
                if since_refactor:
                    self.refactor()
                    y = cost[self.basis] @ self.Binv
                    since_refactor = 0
                    continue
                return y
            col = self.column(k)
            r, theta = self.ratio_test(col, bland)
            if r < 0:
                raise Unbounded("objective unbounded along an improving edge")
            degenerate_run = degenerate_run + 1 if theta <= 1e-15 else 0
            dk = d[k]
            self.pivot(r, k, col)
            y = y + dk * self.Binv[r]
            self.iterations += 1
            since_refactor += 1
            if since_refactor >= REFACTOR_EVERY:
                self.refactor()
                y = cost[self.basis] @ self.Binv
                since_refactor = 0

    def drive_out_artificials(self):
        for r in range(self.m):
            if self.basis[r] < self.n:
                continue
            row = self.AT[: self.n] @ self.Binv[r]
            cand = np.flatnonzero(np.abs(row) > 1e-7)
            cand = cand[~np.isin(cand, self.basis)]
            if cand.size:
                k = int(cand[np.argmax(np.abs(row[cand]))])
                self.pivot(r, k, self.column(k))
        self.refactor()


def solve_lp(
    A,
    b,
    c,
    pivot_tol: float = config.PIVOT_TOL,
    feas_tol: float = config.LP_FEAS_TOL,
    dual_tol: float = 1e-10,
    max_iter: int = 200_000,
) -> SimplexResult:
    """Minimise c.x subject to A x = b, x >= 0."""
    A = sparse.csc_matrix(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    if b.shape != (m,) or c.shape != (n,):
        raise ValueError("dimension mismatch between A, b and c")
    s = _Solver(A, b, c, pivot_tol, feas_tol, dual_tol, max_iter)
    real = np.concatenate([np.ones(n, bool), np.zeros(m, bool)])

    phase1 = np.concatenate([np.zeros(n), np.ones(m)])
    s.run(phase1, np.ones(n + m, bool))
    infeas = float(phase1[s.basis] @ s.xB)
    if infeas > feas_tol * max(1.0, np.abs(b).sum()):
        raise Infeasible(f"no feasible point (phase one residual {infeas:.3g})")
    s.drive_out_artificials()

    y = s.run(s.c, real)
    x = np.zeros(n + m)
    x[s.basis] = s.xB
    if np.any(x < -feas_tol):
        raise NoConvergence(f"primal infeasibility {-x.min():.3g} at the final basis")
    x = np.maximum(x, 0.0)
    if np.any(x[n:] > feas_tol):
        raise Infeasible("artificial variables remain positive")
    return SimplexResult(
        x=x[:n],
        y=y * s.sign,
        value=float(c @ x[:n]),
        basis=s.basis.copy(),
        iterations=s.iterations,
        degenerate=bool(np.any(np.abs(s.xB) <= feas_tol)),
    )
