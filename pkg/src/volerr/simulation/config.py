"""Simulation run parameters."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError

__all__ = ["SimulationConfig", "SCHEMES"]

SCHEMES = ("exact_lognormal", "euler")


@dataclass(frozen=True)
class SimulationConfig:
    """Path count, grid, seed and stepping scheme for one simulation run.

    ``horizon`` is the terminal time; the grid is the uniform partition of
    [0, horizon] into ``n_steps`` steps.  ``exact_lognormal`` applies the
    closed-form lognormal step and is only valid for a constant basis;
    ``euler`` applies an Euler step to ln S (preserving positivity) and
    works for any basis.
    """

    n_paths: int
    n_steps: int
    seed: int
    horizon: float
    scheme: str = "exact_lognormal"

    def __post_init__(self):
        for name in ("n_paths", "n_steps"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise InvalidInputError(f"{name} must be a positive integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if not isinstance(self.seed, (int, np.integer)) or not (
            0 <= int(self.seed) < 2**64
        ):
            raise InvalidInputError(f"seed must be an integer in [0, 2^64), got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))
        h = float(self.horizon)
        if not math.isfinite(h) or h <= 0.0:
            raise InvalidInputError(f"horizon must be finite and > 0, got {h!r}")
        object.__setattr__(self, "horizon", h)
        if self.scheme not in SCHEMES:
            raise InvalidInputError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")

    def time_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_steps + 1)
