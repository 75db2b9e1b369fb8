"""Volatility surfaces as linear combinations of deterministic factors.

sigma(t, s) = sum_i a_i * phi_i(t, s), where each factor phi_i is a
deterministic function of time and spot and each coefficient a_i may
carry error descriptors (see :mod:`volerr.error_calculus`).  Restricting
the factors to deterministic functions of (t, s) keeps every pricer and
estimator in the package well-defined; random factors are out of scope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from ..error_calculus import UncertainParameter
from ..errors import InvalidInputError

__all__ = ["BasisComponent", "VolatilityBasis", "constant_vol"]


class _ConstantOne:
    """The constant factor phi(t, s) = 1; recognised by fast paths."""

    def __call__(self, t, s):
        s = np.asarray(s, dtype=float)
        out = np.ones_like(s)
        return out if out.ndim else 1.0

    def __repr__(self):
        return "constant_one"


CONSTANT_ONE = _ConstantOne()


@dataclass(frozen=True)
class BasisComponent:
    """One factor of the volatility surface.

    ``phi`` maps (t, spot array) to factor values; ``coefficient`` is its
    loading; ``uncertainty`` carries the loading's error descriptors, or
    None for an exactly known loading.
    """

    coefficient: float
    phi: Callable
    uncertainty: UncertainParameter | None = None
    name: str = ""

    def __post_init__(self):
        a = float(self.coefficient)
        if not math.isfinite(a):
            raise InvalidInputError(f"coefficient must be finite, got {a!r}")
        object.__setattr__(self, "coefficient", a)
        if not callable(self.phi):
            raise InvalidInputError("phi must be callable on (t, s)")


@dataclass(frozen=True)
class VolatilityBasis:
    components: tuple[BasisComponent, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise InvalidInputError("basis needs at least one component")
        object.__setattr__(self, "components", comps)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c.coefficient for c in self.components])

    @property
    def is_constant(self) -> bool:
        return all(isinstance(c.phi, _ConstantOne) for c in self.components)

    def constant_sigma(self, coefficients: Sequence[float] | None = None) -> float:
        """Flat volatility level; only meaningful for a constant basis."""
        if not self.is_constant:
            raise InvalidInputError("basis is not constant in (t, s)")
        coeffs = self.coefficients if coefficients is None else np.asarray(coefficients)
        return float(np.sum(coeffs))

    def sigma(self, t: float, s, coefficients: Sequence[float] | None = None):
        """Evaluate sigma(t, s) = sum_i a_i phi_i(t, s), vectorised over s."""
        coeffs = (
            self.coefficients if coefficients is None else np.asarray(coefficients, float)
        )
        if len(coeffs) != len(self.components):
            raise InvalidInputError(
                f"expected {len(self.components)} coefficients, got {len(coeffs)}"
            )
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for a, comp in zip(coeffs, self.components):
            out = out + a * np.asarray(comp.phi(t, s), dtype=float)
        return out if out.ndim else float(out)

    def with_coefficients(self, coefficients: Sequence[float]) -> "VolatilityBasis":
        coeffs = [float(a) for a in coefficients]
        if len(coeffs) != len(self.components):
            raise InvalidInputError(
                f"expected {len(self.components)} coefficients, got {len(coeffs)}"
            )
        return VolatilityBasis(
            tuple(
                replace(comp, coefficient=a)
                for comp, a in zip(self.components, coeffs)
            )
        )

    def common_epsilon(self) -> float:
        """The shared epsilon scale of the uncertain coefficients (0 if none).

        Mixing different epsilon scales in one basis is rejected, for the
        same reason independent contributions only combine at equal scale.
        """
        scales = {
            c.uncertainty.epsilon for c in self.components if c.uncertainty is not None
        }
        if not scales:
            return 0.0
        if len(scales) > 1:
            raise InvalidInputError(
                f"uncertain coefficients carry different epsilon scales: {sorted(scales)}"
            )
        return scales.pop()


def constant_vol(
    sigma0: float, uncertainty: UncertainParameter | None = None
) -> VolatilityBasis:
    """A flat surface sigma(t, s) = sigma0 as a one-component basis."""
    return VolatilityBasis(
        (BasisComponent(coefficient=sigma0, phi=CONSTANT_ONE, uncertainty=uncertainty, name="sigma0"),)
    )
