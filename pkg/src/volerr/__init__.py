"""Option quoting under parameter uncertainty.

Propagates (variance, bias) pairs for uncertain model parameters through
pricing maps, turns them into bid/ask quotes and implied-volatility
smiles, and checks the underlying P&L expansion by simulation.
"""

from .error_calculus import (
    GaussianExpansion,
    SmoothFunctionJet,
    UncertainParameter,
    chebyshev_tail,
    combine_independent,
    gaussian_expansion,
    propagate,
)
from .errors import (
    BumpResolutionError,
    DomainError,
    InsufficientGridError,
    InvalidInputError,
    RootBracketError,
    VolerrError,
)
from .lognormal import (
    CallSpec,
    LognormalMarket,
    TotalVolUncertainty,
    atm_convexity_condition,
    atm_sign_condition,
    bias_strike_derivative,
    call_bias,
    call_price,
    call_variance,
    rr_ratio,
    time_evolution_condition,
)
from .payoffs import OptionSpec, sigmoid, softplus
from .quotes import QuoteTriple, RiskPolicy, make_quote, quote_call
from .surface import (
    SmileDiagnostics,
    SmileGrid,
    build_smile,
    implied_vol,
    smile_diagnostics,
    smile_to_csv,
)

__version__ = "0.1.0"

__all__ = [
    "GaussianExpansion",
    "SmoothFunctionJet",
    "UncertainParameter",
    "chebyshev_tail",
    "combine_independent",
    "gaussian_expansion",
    "propagate",
    "BumpResolutionError",
    "DomainError",
    "InsufficientGridError",
    "InvalidInputError",
    "RootBracketError",
    "VolerrError",
    "CallSpec",
    "LognormalMarket",
    "TotalVolUncertainty",
    "atm_convexity_condition",
    "atm_sign_condition",
    "bias_strike_derivative",
    "call_bias",
    "call_price",
    "call_variance",
    "rr_ratio",
    "time_evolution_condition",
    "OptionSpec",
    "sigmoid",
    "softplus",
    "QuoteTriple",
    "RiskPolicy",
    "make_quote",
    "quote_call",
    "SmileDiagnostics",
    "SmileGrid",
    "build_smile",
    "implied_vol",
    "smile_diagnostics",
    "smile_to_csv",
    "__version__",
]
