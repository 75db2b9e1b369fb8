"""Terminal payoffs used by the pricers and the hedging simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

__all__ = ["OptionSpec", "softplus", "sigmoid"]

KINDS = ("call", "smoothed_call")


def softplus(u):
    """Numerically stable log(1 + exp(u)), elementwise."""
    u = np.asarray(u, dtype=float)
    return np.maximum(u, 0.0) + np.log1p(np.exp(-np.abs(u)))


def sigmoid(u):
    """Numerically stable 1 / (1 + exp(-u)), elementwise."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    pos = u >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out


@dataclass(frozen=True)
class OptionSpec:
    """A European claim: plain call or its smooth surrogate.

    kind = 'call':          value(s) = max(s - strike, 0)
    kind = 'smoothed_call': value(s) = kappa * log(1 + exp((s - strike)/kappa))

    The smoothed payoff is twice continuously differentiable with bounded
    derivatives, which is what expansion-exactness arguments need; it
    converges to the call uniformly as kappa -> 0.
    """

    kind: str
    strike: float
    maturity: float
    kappa: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"kind must be one of {KINDS}, got {self.kind!r}")
        for name in ("strike", "maturity"):
            x = float(getattr(self, name))
            if not math.isfinite(x) or x <= 0.0:
                raise InvalidInputError(f"{name} must be finite and > 0, got {x!r}")
            object.__setattr__(self, name, x)
        if self.kind == "smoothed_call":
            if self.kappa is None:
                raise InvalidInputError("smoothed_call requires kappa")
            k = float(self.kappa)
            if not math.isfinite(k) or k <= 0.0:
                raise InvalidInputError(f"kappa must be finite and > 0, got {k!r}")
            object.__setattr__(self, "kappa", k)
        elif self.kappa is not None:
            raise InvalidInputError("kappa only applies to smoothed_call")

    @property
    def is_smooth(self) -> bool:
        return self.kind == "smoothed_call"

    def value(self, s):
        """Payoff at terminal spot(s)."""
        s = np.asarray(s, dtype=float)
        if self.kind == "call":
            out = np.maximum(s - self.strike, 0.0)
        else:
            out = self.kappa * softplus((s - self.strike) / self.kappa)
        return out if out.ndim else float(out)

    def slope(self, s):
        """Derivative of the payoff in the spot (call: indicator)."""
        s = np.asarray(s, dtype=float)
        if self.kind == "call":
            out = (s > self.strike).astype(float)
        else:
            out = sigmoid((s - self.strike) / self.kappa)
        return out if out.ndim else float(out)
