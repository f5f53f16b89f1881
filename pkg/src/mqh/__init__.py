"""Multiple quantile hedging prices via the semi-discrete transport dual."""

__version__ = "0.1.0"

from .dual_sga import PriceEstimate, SgaConfig, SgaResult, adam_run, price_with_ci
from .market import FIGURE_PARAMS, BsParams, ScenarioBatch, SeededStream, bs_vanilla_price, simulate_bs
from .measures import DiscreteMeasure, dominates, project_to_cone, survival, validate_measure
from .oracles import FiniteInstance, finite_kp_exact, finite_mp_exact, pnl_ot_semianalytic, qh_dual_1d
from .payoffs import Level, PayoffLadder, build_costs, evaluate_ladder

__all__ = [
    "BsParams", "DiscreteMeasure", "FIGURE_PARAMS", "FiniteInstance", "Level", "PayoffLadder",
    "PriceEstimate", "ScenarioBatch", "SeededStream", "SgaConfig", "SgaResult", "adam_run",
    "bs_vanilla_price", "build_costs", "dominates", "evaluate_ladder", "finite_kp_exact",
    "finite_mp_exact", "pnl_ot_semianalytic", "price_with_ci", "project_to_cone", "qh_dual_1d",
    "simulate_bs", "survival", "validate_measure",
]
