"""Bid/ask quoting from propagated price uncertainty.

A seller who knows the bias and variance coefficients of a fair value F
charges the smallest premium that keeps the probability of underpricing
at or below a tolerated level alpha:

    ask = F + epsilon * bias + sqrt(epsilon * variance) * q(alpha)
    bid = F + epsilon * bias - sqrt(epsilon * variance) * q(alpha)

where q is either the Gaussian quantile N_{1-alpha} (valid when the
first-order error law is taken literally) or the distribution-free
Chebyshev multiplier sqrt(1/alpha - 1).  The mid value F + epsilon*bias
carries the entire bias correction and does not depend on alpha; the
half-spread carries the entire variance contribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from scipy.special import ndtri

from .errors import DomainError, InvalidInputError
from .lognormal import CallSpec, LognormalMarket, TotalVolUncertainty, call_bias, call_price, call_variance

__all__ = ["RiskPolicy", "QuoteTriple", "quantile", "make_quote", "quote_call"]

_MODES = ("gaussian", "chebyshev")


@dataclass(frozen=True)
class RiskPolicy:
    """Tolerated underpricing probability and the tail model used for it."""

    alpha: float
    quantile_mode: str = "gaussian"

    def __post_init__(self):
        a = float(self.alpha)
        if not (0.0 < a < 0.5):
            raise InvalidInputError(f"alpha must lie in (0, 0.5), got {a!r}")
        object.__setattr__(self, "alpha", a)
        if self.quantile_mode not in _MODES:
            raise InvalidInputError(
                f"quantile_mode must be one of {_MODES}, got {self.quantile_mode!r}"
            )


@dataclass(frozen=True)
class QuoteTriple:
    """A bid/mid/ask triple with its additive decomposition.

    mid = fair + bias_component and ask - mid = mid - bid = spread_component
    hold exactly by construction.  ``below_intrinsic`` flags a bid that
    fell below the payoff's intrinsic value (the quote is still reported
    as computed).
    """

    bid: float
    mid: float
    ask: float
    fair: float
    bias_component: float
    spread_component: float
    below_intrinsic: bool = False


def quantile(policy: RiskPolicy) -> float:
    """Spread multiplier for the policy's tail level.

    gaussian:  N_{1-alpha}, the standard normal upper-alpha quantile;
    chebyshev: sqrt(1/alpha - 1), the smallest k with 1/(1+k^2) <= alpha.
    """
    if policy.quantile_mode == "gaussian":
        return float(ndtri(1.0 - policy.alpha))
    return math.sqrt(1.0 / policy.alpha - 1.0)


def make_quote(
    fair: float,
    bias: float,
    variance: float,
    epsilon: float,
    policy: RiskPolicy,
) -> QuoteTriple:
    """Assemble a quote triple from propagated price descriptors."""
    if not all(map(math.isfinite, (fair, bias, variance, epsilon))):
        raise InvalidInputError("fair, bias, variance and epsilon must be finite")
    if variance < 0.0:
        raise DomainError(f"variance must be >= 0, got {variance}")
    if epsilon < 0.0:
        raise DomainError(f"epsilon must be >= 0, got {epsilon}")
    bias_component = epsilon * bias
    spread_component = math.sqrt(epsilon * variance) * quantile(policy)
    mid = fair + bias_component
    return QuoteTriple(
        bid=mid - spread_component,
        mid=mid,
        ask=mid + spread_component,
        fair=fair,
        bias_component=bias_component,
        spread_component=spread_component,
    )


def quote_call(
    m: LognormalMarket,
    c: CallSpec,
    u: TotalVolUncertainty,
    policy: RiskPolicy,
) -> QuoteTriple:
    """Quote a call under total-volatility uncertainty.

    Composes the closed-form price, bias and variance coefficients with
    :func:`make_quote`.  If the bias correction pushes the bid below the
    intrinsic value max(spot - strike, 0) the triple is flagged but not
    floored.
    """
    q = make_quote(
        fair=call_price(m, c),
        bias=call_bias(m, c, u),
        variance=call_variance(m, c, u),
        epsilon=u.epsilon,
        policy=policy,
    )
    intrinsic = max(m.spot - c.strike, 0.0)
    if q.bid < intrinsic:
        q = replace(q, below_intrinsic=True)
    return q
