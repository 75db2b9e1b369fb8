"""First-order uncertainty propagation for scalar parameters.

A parameter estimate carries two local error descriptors: a variance
coefficient ``gamma`` (quadratic in the error, propagated through maps by
the square of the first derivative) and a bias coefficient ``bias``
(linear in the error, picking up a second-order Ito-style correction).
Both scale with a single small bookkeeping factor ``epsilon``, so that a
quantity ``u`` with descriptors ``(gamma, bias)`` behaves, to first order
in ``epsilon``, like

    u + epsilon * bias + sqrt(epsilon * gamma) * G,      G ~ N(0, 1).

The propagation rules through a twice-differentiable map f are

    gamma[f(u)] = f'(u)^2 * gamma[u]
    bias[f(u)]  = f'(u) * bias[u] + 0.5 * f''(u) * gamma[u]

which is all this module implements; everything downstream (pricing,
quoting, smile construction) reduces to these two lines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .errors import DomainError, InvalidInputError

__all__ = [
    "UncertainParameter",
    "SmoothFunctionJet",
    "GaussianExpansion",
    "propagate",
    "combine_independent",
    "gaussian_expansion",
    "chebyshev_tail",
]


def _require_finite(name: str, x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise InvalidInputError(f"{name} must be finite, got {x!r}")
    return x


@dataclass(frozen=True)
class UncertainParameter:
    """A scalar estimate together with its local error descriptors.

    Parameters
    ----------
    value : float
        The point estimate.
    gamma : float
        Variance coefficient, >= 0.  The error variance is epsilon * gamma.
    bias : float
        Bias coefficient.  The error mean is epsilon * bias.
    epsilon : float
        Bookkeeping scale of the error, >= 0.  epsilon = 0 means the
        parameter is treated as exactly known and every downstream
        correction vanishes.
    """

    value: float
    gamma: float
    bias: float = 0.0
    epsilon: float = 1.0

    def __post_init__(self):
        for name in ("value", "gamma", "bias", "epsilon"):
            object.__setattr__(self, name, _require_finite(name, getattr(self, name)))
        if self.gamma < 0.0:
            raise InvalidInputError(f"gamma must be >= 0, got {self.gamma}")
        if self.epsilon < 0.0:
            raise InvalidInputError(f"epsilon must be >= 0, got {self.epsilon}")


@dataclass(frozen=True)
class SmoothFunctionJet:
    """Value and first two derivatives of a map at the evaluation point."""

    value: float
    d1: float
    d2: float

    def __post_init__(self):
        for name in ("value", "d1", "d2"):
            object.__setattr__(self, name, _require_finite(name, getattr(self, name)))


@dataclass(frozen=True)
class GaussianExpansion:
    """First-order Gaussian law of a propagated quantity.

    mean = value + epsilon * bias, stddev = sqrt(epsilon * gamma).
    """

    mean: float
    stddev: float


def propagate(jet: SmoothFunctionJet, u: UncertainParameter) -> UncertainParameter:
    """Push an uncertain parameter through a twice-differentiable map.

    Returns the descriptors of f(u): the variance coefficient follows the
    first-derivative-squared rule, the bias coefficient the chain rule with
    second-order correction.  ``epsilon`` is carried through unchanged.
    """
    gamma = jet.d1 * jet.d1 * u.gamma
    bias = jet.d1 * u.bias + 0.5 * jet.d2 * u.gamma
    return UncertainParameter(value=jet.value, gamma=gamma, bias=bias, epsilon=u.epsilon)


def combine_independent(
    parts: Iterable[UncertainParameter], value: float = 0.0
) -> UncertainParameter:
    """Combine independent error contributions to one quantity.

    Variance coefficients and bias coefficients both add.  All parts must
    share the same ``epsilon`` scale; mixing scales has no meaning under a
    single first-order expansion.  An empty iterable yields a certain
    parameter (gamma = bias = 0, epsilon = 0).

    ``value`` is the point estimate of the combined quantity; the
    combination rule itself only concerns the error descriptors.
    """
    parts = list(parts)
    if not parts:
        return UncertainParameter(value=value, gamma=0.0, bias=0.0, epsilon=0.0)
    eps = parts[0].epsilon
    for p in parts[1:]:
        if p.epsilon != eps:
            raise InvalidInputError(
                f"cannot combine parts with different epsilon scales: "
                f"{p.epsilon} != {eps}"
            )
    gamma = math.fsum(p.gamma for p in parts)
    bias = math.fsum(p.bias for p in parts)
    return UncertainParameter(value=value, gamma=gamma, bias=bias, epsilon=eps)


def gaussian_expansion(u: UncertainParameter) -> GaussianExpansion:
    """First-order Gaussian law of u: N(value + eps*bias, eps*gamma)."""
    return GaussianExpansion(
        mean=u.value + u.epsilon * u.bias,
        stddev=math.sqrt(u.epsilon * u.gamma),
    )


def chebyshev_tail(k: float) -> float:
    """Distribution-free bound on the one-sided tail beyond k sigma.

    For any law with the given mean and variance,
    P(X - mean >= k * sigma) <= 1 / (1 + k^2) for k >= 1.
    """
    k = _require_finite("k", k)
    if k < 1.0:
        raise DomainError(f"tail bound requires k >= 1, got {k}")
    return 1.0 / (1.0 + k * k)
