"""Worst-case wrong-way-risk CVA engine with option-based static hedging.

Computes upper bounds on the CVA of an uncollateralized receive-float
interest-rate swap under adverse default/exposure dependence, prices the
Bermudan payer swaption that caps the exposure, and finds the strike
minimizing total worst-case cost across counterparty credit levels and
default-probability volatility levels.
"""

from .market import (
    DiscountCurve,
    SwapSpec,
    SwaptionQuote,
    SwapMarket,
    annuity,
    forward_swap_rate,
    bachelier_payer,
    bachelier_receiver,
)
from .credit import (
    CreditSpec,
    DefaultMarginals,
    DPVolParam,
    hazard_from_cds,
    marginals,
    two_point_dp,
)
from .exposure import (
    ExposureDistribution,
    swap_rate_density,
    exposure_from_rate,
    build_exposure,
    build_exposure_set,
)
from .bermudan import (
    CalibrationError,
    HedgeSpec,
    LatticeModel,
    calibrate,
    price_bermudan,
    make_bermudan_pricer,
)
from .engine import (
    JointDefaultAssignment,
    CvaReport,
    expected_shortfall,
    implied_assignment,
    wc_interval,
    fv_interval,
    cva_total,
    optimize_strike,
    savings,
)
from .oracle import SmallInstance, lp_max, best_permutation

__version__ = "0.1.0"
