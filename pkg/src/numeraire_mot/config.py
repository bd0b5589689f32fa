"""Shared numerical tolerances and defaults.

Every constant here is referenced by name from the modules that use it, so a
caller wanting different behaviour can override at the call site instead of
mutating these values.
"""

MASS_TOL = 1e-9
MEAN_TOL = 1e-6
MONOTONE_TOL = 1e-12

ROOT_TOL = 1e-12
ROOT_MAXITER = 200
QUAD_TOL = 1e-10
QUAD_LIMIT = 500

# Support truncation used wherever an unbounded support must be cut.
TAIL_QUANTILE = 1e-9

SCAN_POINTS = 4096
CONVEX_ORDER_TOL = 1e-9

GRID_POINTS = 512
MARTINGALE_TOL = 1e-8
MARGINAL_TOL = 1e-4
SYMMETRY_TOL = 1e-6

PIVOT_TOL = 1e-11
LP_FEAS_TOL = 1e-9
LP_DUAL_TOL = 1e-8
