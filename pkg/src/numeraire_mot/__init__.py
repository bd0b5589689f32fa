"""Explicit martingale transport plans, change of numeraire and model-free bounds.

Two-period martingale optimal transport between unit-mean marginals on
(0, inf): three-band and curtain plans built from the marginals' CDF and
cumulated-expectation differences, the numeraire change acting on marginals,
couplings, payoffs and hedges, and an LP oracle for discretised bounds.
"""

from .couplings import (
    DiscreteKernel,
    IdentityKernel,
    ThreeBandKernel,
    TwoBandKernel,
    build_hk,
    build_left_monotone,
    build_right_monotone,
    kernel_at,
    validate_coupling,
)
from .errors import MOTError
from .lp_oracle import (
    DiscreteMOTInstance,
    HedgeTriple,
    check_hedge,
    extract_dual_hedge,
    quantize,
    solve_bounds,
)
from .measures import AtomList, LogNormal, TabulatedDensity, parse_marginal
from .numeraire import symmetrize_coupling, symmetrize_hedge, symmetrize_marginal, symmetrize_payoff
from .payoffs import Payoff, parse_payoff
from .pricing import alpha_portfolio, lower_bound_straddle, model_risk, price, sm_sign_probe

__version__ = "0.1.0"
