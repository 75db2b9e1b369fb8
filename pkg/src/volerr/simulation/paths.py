"""Path generation with reproducible, position-keyed randomness.

Gaussian increments come from counter-based Philox streams keyed by
(seed, stream, chunk of 1024 paths), and every chunk is always drawn at
full size before slicing.  Path p therefore receives exactly the same
noise for a given seed no matter how many paths are requested alongside
it, how the work is scheduled, or how many threads the host process
uses: its randomness is a pure function of (seed, path index, step
index).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from .basis import VolatilityBasis
from .config import SimulationConfig

__all__ = ["PathEnsemble", "normal_increments", "simulate_paths"]

CHUNK = 1024

# Stream labels keep the independent uses of the seed from colliding.
PATH_STREAM = 0
OUTER_STREAM = 1
NESTED_STREAM = 2


def normal_increments(
    seed: int, n_rows: int, n_cols: int, stream: int = PATH_STREAM
) -> np.ndarray:
    """Standard normal matrix keyed by (seed, stream, row chunk).

    Row r always comes out of row r % 1024 of chunk r // 1024, and chunks
    are generated at full size, so extending n_rows never changes the
    rows already drawn.
    """
    out = np.empty((n_rows, n_cols))
    for chunk in range((n_rows + CHUNK - 1) // CHUNK):
        key = np.array([seed, (stream << 48) + chunk], dtype=np.uint64)
        g = np.random.Generator(np.random.Philox(key=key))
        block = g.standard_normal((CHUNK, n_cols))
        lo = chunk * CHUNK
        out[lo : lo + CHUNK] = block[: n_rows - lo]
    return out


@dataclass(frozen=True)
class PathEnsemble:
    """Simulated spot paths on a fixed time grid.

    ``spots`` has shape (n_paths, n_steps + 1) with spots[:, 0] = x0.
    """

    times: np.ndarray
    spots: np.ndarray

    @property
    def n_paths(self) -> int:
        return self.spots.shape[0]

    @property
    def n_steps(self) -> int:
        return self.spots.shape[1] - 1

    def increments(self) -> np.ndarray:
        return np.diff(self.spots, axis=1)

    def terminal(self) -> np.ndarray:
        return self.spots[:, -1]


def _check_sigma(sig: np.ndarray, t: float, s: np.ndarray) -> None:
    bad = np.flatnonzero(sig < 0.0)
    if bad.size:
        i = int(bad[0])
        raise DomainError(
            f"sigma(t, s) = {sig.flat[i]} < 0 at t = {t}, s = {s.flat[i]}; "
            "volatility must be nonnegative on the visited states"
        )


def _evolve_from_brownian(
    basis: VolatilityBasis,
    mu: float,
    x0: float,
    times: np.ndarray,
    db: np.ndarray,
    exact_constant: bool,
) -> np.ndarray:
    """Advance ln S with given Brownian increments db (n_paths, n_steps).

    With a constant basis the Euler step on ln S integrates the constant-
    coefficient log dynamics exactly, so 'exact' and 'euler' coincide
    path by path; for a state-dependent basis only 'euler' applies and
    the step freezes sigma at the left node.
    """
    n_paths, n_steps = db.shape
    spots = np.empty((n_paths, n_steps + 1))
    spots[:, 0] = x0
    if exact_constant:
        sig = basis.constant_sigma()
        if sig < 0.0:
            raise DomainError(f"constant sigma = {sig} < 0")
        dt = np.diff(times)
        log_steps = (mu - 0.5 * sig * sig) * dt[None, :] + sig * db
        spots[:, 1:] = x0 * np.exp(np.cumsum(log_steps, axis=1))
        return spots
    log_s = np.full(n_paths, np.log(x0))
    for j in range(n_steps):
        t = float(times[j])
        s = spots[:, j]
        sig = np.asarray(basis.sigma(t, s), dtype=float)
        if sig.ndim == 0:
            sig = np.full(n_paths, float(sig))
        _check_sigma(sig, t, s)
        dt = float(times[j + 1] - times[j])
        log_s = log_s + (mu - 0.5 * sig * sig) * dt + sig * db[:, j]
        spots[:, j + 1] = np.exp(log_s)
    return spots


def simulate_paths(
    basis: VolatilityBasis, mu: float, x0: float, cfg: SimulationConfig
) -> PathEnsemble:
    """Simulate spot paths of dS = S mu dt + S sigma(t, S) dB.

    scheme='exact_lognormal' requires a constant basis; scheme='euler'
    accepts any basis and aborts with DomainError if a negative sigma is
    encountered at a visited state (sigma = 0 is allowed and degenerates
    to deterministic drift).
    """
    if x0 <= 0.0:
        raise DomainError(f"x0 must be > 0, got {x0}")
    if cfg.scheme == "exact_lognormal" and not basis.is_constant:
        raise DomainError("exact_lognormal scheme requires a constant basis")
    times = cfg.time_grid()
    z = normal_increments(cfg.seed, cfg.n_paths, cfg.n_steps)
    db = z * np.sqrt(np.diff(times))[None, :]
    exact = cfg.scheme == "exact_lognormal"
    spots = _evolve_from_brownian(basis, mu, x0, times, db, exact_constant=exact)
    return PathEnsemble(times=times, spots=spots)
