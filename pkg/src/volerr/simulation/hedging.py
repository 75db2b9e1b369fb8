"""Delta-hedging profit and loss along simulated paths.

A seller books the model price F at time 0, rebalances the model delta at
every grid node, and delivers the payoff at maturity.  On a path S with
grid t_0 < ... < t_J the resulting (undiscounted, zero-rate) P&L is

    pnl = F(t_0, S_0) + sum_j Delta(t_j, S_j) (S_{j+1} - S_j) - payoff(S_J)

where F and Delta are computed under the seller's estimated basis while
the path follows the true dynamics.  With a correct model the hedge sum
is a discrete martingale integral and pnl -> 0 as the grid refines.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidInputError
from ..payoffs import OptionSpec
from .basis import VolatilityBasis
from .paths import PathEnsemble

__all__ = ["hedge_pnl", "ensemble_pnls"]


def hedge_pnl(
    path: np.ndarray,
    times: np.ndarray,
    pricer,
    estimated_basis: VolatilityBasis,
    payoff: OptionSpec,
) -> float:
    """P&L of selling at the model price and delta-hedging one path."""
    path = np.asarray(path, dtype=float)
    times = np.asarray(times, dtype=float)
    if path.ndim != 1 or path.shape != times.shape or path.size < 2:
        raise InvalidInputError("path and times must be 1-d arrays of equal length >= 2")
    pnl = pricer.price(estimated_basis, float(path[0]), float(times[0]))
    for j in range(path.size - 1):
        delta = pricer.delta(estimated_basis, float(path[j]), float(times[j]))
        pnl += delta * (path[j + 1] - path[j])
    return float(pnl - payoff.value(path[-1]))


def ensemble_pnls(
    ensemble: PathEnsemble,
    pricer,
    estimated_basis: VolatilityBasis,
    payoff: OptionSpec,
) -> np.ndarray:
    """Hedging P&L of every path in the ensemble (vectorised over paths)."""
    spots = ensemble.spots
    times = ensemble.times
    ds = np.diff(spots, axis=1)
    pnl = np.full(
        spots.shape[0], pricer.price(estimated_basis, float(spots[0, 0]), float(times[0]))
    )
    for j in range(ds.shape[1]):
        deltas = pricer.delta(estimated_basis, spots[:, j], float(times[j]))
        pnl = pnl + deltas * ds[:, j]
    return pnl - payoff.value(spots[:, -1])
