"""Monte Carlo side: path simulation, hedging, and the P&L expansion law."""

from .basis import BasisComponent, VolatilityBasis, constant_vol
from .config import SimulationConfig
from .hedging import ensemble_pnls, hedge_pnl
from .law import PnLLawEstimate, TestFunctionJet, estimate_law
from .paths import PathEnsemble, normal_increments, simulate_paths
from .pricers import (
    ConstantVolCallPricer,
    NestedMCPricer,
    SmoothedCallPricer,
    pricer_for,
)
from .validate import ChebyshevCheck, ValidationReport, draws_csv, validate_expansion

__all__ = [
    "BasisComponent",
    "VolatilityBasis",
    "constant_vol",
    "SimulationConfig",
    "ensemble_pnls",
    "hedge_pnl",
    "PnLLawEstimate",
    "TestFunctionJet",
    "estimate_law",
    "PathEnsemble",
    "normal_increments",
    "simulate_paths",
    "ConstantVolCallPricer",
    "NestedMCPricer",
    "SmoothedCallPricer",
    "pricer_for",
    "ChebyshevCheck",
    "ValidationReport",
    "draws_csv",
    "validate_expansion",
]
