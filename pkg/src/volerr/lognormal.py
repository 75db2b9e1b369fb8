"""Closed-form call pricing under a lognormal model with uncertain volatility.

The model is parametrised by the total volatility to expiry,
``v = sigma0 * sqrt(T)``.  Uncertainty on ``v`` (variance coefficient
``gamma``, bias coefficient ``bias``, see :mod:`volerr.error_calculus`)
propagates to the undiscounted call price C(x, K, v) through

    bias[C]  = x phi(d1) * (bias + d1 d2 / (2 v) * gamma)
    gamma[C] = x^2 exp(-d1^2) / (2 pi) * gamma

with d1 = (ln(x/K) + v^2/2) / v and d2 = d1 - v.  These are exactly the
generic propagation rules applied to the jet (C, dC/dv, d2C/dv2), since
dC/dv = x phi(d1) and d2C/dv2 = x phi(d1) d1 d2 / v.

The shape of the price correction across strikes is governed by a single
dimensionless ratio r = 2 v * bias / gamma; the classification helpers at
the bottom of the module (sign at the money, convexity in strike, growth
of the strike-curvature in maturity) are all thresholds on r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import ndtr

from .error_calculus import SmoothFunctionJet, UncertainParameter, propagate
from .errors import DomainError, InvalidInputError

__all__ = [
    "LognormalMarket",
    "CallSpec",
    "TotalVolUncertainty",
    "d1_d2",
    "call_price",
    "call_delta",
    "call_vega",
    "call_total_vol_jet",
    "call_bias",
    "call_variance",
    "rr_ratio",
    "bias_strike_derivative",
    "atm_sign_condition",
    "atm_convexity_condition",
    "time_evolution_condition",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / _SQRT_2PI


def _positive(name: str, x: float) -> float:
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise InvalidInputError(f"{name} must be finite and > 0, got {x!r}")
    return x


@dataclass(frozen=True)
class LognormalMarket:
    """Spot, reference volatility and real-world drift of the underlying."""

    spot: float
    sigma0: float
    mu: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "spot", _positive("spot", self.spot))
        object.__setattr__(self, "sigma0", _positive("sigma0", self.sigma0))
        mu = float(self.mu)
        if not math.isfinite(mu):
            raise InvalidInputError(f"mu must be finite, got {mu!r}")
        object.__setattr__(self, "mu", mu)


@dataclass(frozen=True)
class CallSpec:
    """Strike and maturity of a European call."""

    strike: float
    maturity: float

    def __post_init__(self):
        object.__setattr__(self, "strike", _positive("strike", self.strike))
        object.__setattr__(self, "maturity", _positive("maturity", self.maturity))


@dataclass(frozen=True)
class TotalVolUncertainty:
    """Error descriptors of the total volatility v = sigma0 * sqrt(T).

    ``gamma`` and ``bias`` are the variance and bias coefficients of v
    itself.  Descriptors stated on sigma0 instead convert with the
    deterministic factor sqrt(T): gamma picks up T, bias picks up sqrt(T)
    (the map sigma -> sigma*sqrt(T) is linear, so no second-order term).
    """

    gamma: float
    bias: float = 0.0
    epsilon: float = 1.0

    def __post_init__(self):
        for name in ("gamma", "bias", "epsilon"):
            x = float(getattr(self, name))
            if not math.isfinite(x):
                raise InvalidInputError(f"{name} must be finite, got {x!r}")
            object.__setattr__(self, name, x)
        if self.gamma < 0.0:
            raise InvalidInputError(f"gamma must be >= 0, got {self.gamma}")
        if self.epsilon < 0.0:
            raise InvalidInputError(f"epsilon must be >= 0, got {self.epsilon}")

    @classmethod
    def from_sigma(cls, u: UncertainParameter, maturity: float) -> "TotalVolUncertainty":
        """Convert descriptors on sigma0 to descriptors on sigma0*sqrt(T)."""
        t = _positive("maturity", maturity)
        return cls(gamma=t * u.gamma, bias=math.sqrt(t) * u.bias, epsilon=u.epsilon)

    def as_parameter(self, value: float) -> UncertainParameter:
        return UncertainParameter(
            value=value, gamma=self.gamma, bias=self.bias, epsilon=self.epsilon
        )


def _total_vol(m: LognormalMarket, c: CallSpec) -> float:
    return m.sigma0 * math.sqrt(c.maturity)


def d1_d2(m: LognormalMarket, c: CallSpec) -> tuple[float, float]:
    """Standard lognormal arguments: d1 = (ln(x/K) + v^2/2)/v, d2 = d1 - v."""
    v = _total_vol(m, c)
    d1 = math.log(m.spot / c.strike) / v + 0.5 * v
    return d1, d1 - v


def call_price(m: LognormalMarket, c: CallSpec) -> float:
    """Undiscounted call price x N(d1) - K N(d2)."""
    d1, d2 = d1_d2(m, c)
    return float(m.spot * ndtr(d1) - c.strike * ndtr(d2))


def call_delta(m: LognormalMarket, c: CallSpec) -> float:
    d1, _ = d1_d2(m, c)
    return float(ndtr(d1))


def call_vega(m: LognormalMarket, c: CallSpec) -> float:
    """Price sensitivity to sigma0 (not to the total volatility)."""
    d1, _ = d1_d2(m, c)
    return m.spot * _norm_pdf(d1) * math.sqrt(c.maturity)


def call_total_vol_jet(m: LognormalMarket, c: CallSpec) -> SmoothFunctionJet:
    """Jet of the price as a function of the total volatility v.

    dC/dv = x phi(d1), d2C/dv2 = x phi(d1) d1 d2 / v.  Feeding this jet to
    :func:`volerr.error_calculus.propagate` reproduces :func:`call_bias`
    and :func:`call_variance` exactly.
    """
    v = _total_vol(m, c)
    d1, d2 = d1_d2(m, c)
    dv = m.spot * _norm_pdf(d1)
    return SmoothFunctionJet(value=call_price(m, c), d1=dv, d2=dv * d1 * d2 / v)


def call_bias(m: LognormalMarket, c: CallSpec, u: TotalVolUncertainty) -> float:
    """Bias coefficient of the call price induced by uncertainty on v."""
    v = _total_vol(m, c)
    d1, d2 = d1_d2(m, c)
    return m.spot * _norm_pdf(d1) * (u.bias + d1 * d2 / (2.0 * v) * u.gamma)


def call_variance(m: LognormalMarket, c: CallSpec, u: TotalVolUncertainty) -> float:
    """Variance coefficient of the call price induced by uncertainty on v."""
    d1, _ = d1_d2(m, c)
    return m.spot * m.spot * math.exp(-d1 * d1) / (2.0 * math.pi) * u.gamma


def rr_ratio(m: LognormalMarket, c: CallSpec, u: TotalVolUncertainty) -> float:
    """Dimensionless bias-to-variance ratio r = 2 v bias / gamma."""
    if u.gamma == 0.0:
        raise DomainError("rr_ratio undefined for gamma = 0 (pure-bias uncertainty)")
    return 2.0 * _total_vol(m, c) * u.bias / u.gamma


def bias_strike_derivative(
    m: LognormalMarket, c: CallSpec, u: TotalVolUncertainty
) -> float:
    """Strike derivative of :func:`call_bias` in closed form.

    d(bias[C])/dK = d1 * bias[C] / (K v) - x phi(d1) (d1 + d2) gamma / (2 K v^2).
    """
    v = _total_vol(m, c)
    d1, d2 = d1_d2(m, c)
    b = call_bias(m, c, u)
    k = c.strike
    return d1 * b / (k * v) - m.spot * _norm_pdf(d1) * (d1 + d2) * u.gamma / (
        2.0 * k * v * v
    )


def _rr_and_v2(m, c, u):
    v = _total_vol(m, c)
    return rr_ratio(m, c, u), v * v


def atm_sign_condition(
    m: LognormalMarket, c: CallSpec, u: TotalVolUncertainty
) -> str:
    """Sign of the price bias at the money: 'positive', 'zero' or 'negative'.

    The at-the-money bias vanishes exactly when r = sigma0^2 T / 4; above
    the threshold it is positive, below negative.  'zero' is reported for
    |r - threshold| within 1e-12 of scale.
    """
    r, v2 = _rr_and_v2(m, c, u)
    threshold = 0.25 * v2
    tol = 1e-12 * max(1.0, abs(threshold))
    if abs(r - threshold) <= tol:
        return "zero"
    return "positive" if r > threshold else "negative"


def atm_convexity_condition(
    m: LognormalMarket, c: CallSpec, u: TotalVolUncertainty
) -> bool:
    """True iff the bias is convex in strike at the money.

    Convexity holds iff r < (v^4 + 4 v^2 + 32) / (4 v^2 + 16), v^2 = sigma0^2 T.
    """
    r, v2 = _rr_and_v2(m, c, u)
    rhs = (v2 * v2 + 4.0 * v2 + 32.0) / (4.0 * v2 + 16.0)
    return r < rhs


def time_evolution_condition(
    m: LognormalMarket, c: CallSpec, u: TotalVolUncertainty
) -> bool:
    """True iff the strike-curvature of the bias grows with maturity.

    Growth holds iff r > (v^2 (v^2 - 4)^2 + 128) / (4 * (16 + v^4)).
    """
    r, v2 = _rr_and_v2(m, c, u)
    rhs = 0.25 * (v2 * (v2 - 4.0) ** 2 + 128.0) / (16.0 + v2 * v2)
    return r > rhs
