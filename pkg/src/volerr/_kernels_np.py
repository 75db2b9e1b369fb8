"""Pure-numpy implementations of the hot simulation kernels.

These are the reference semantics for the compiled module in
``_kernels.pyx``; :mod:`volerr.kernels` picks whichever is available.
Accumulation order is fixed (step-major for the hedge sums, path-major
within each draw for the statistics), so results do not depend on how
the host schedules threads.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import expit, ndtr

__all__ = ["call_hedge_sums", "softplus_call_hedge_sums", "draw_stats"]

IMPL = "numpy"


def call_hedge_sums(
    ln_s: np.ndarray,
    ds: np.ndarray,
    taus: np.ndarray,
    sigmas: np.ndarray,
    strike: float,
) -> np.ndarray:
    """Hedge martingale sums of the plain call delta at several vol levels.

    V[m, p] = sum_j N(d1(s_pj, tau_j; sigma_m, K)) * ds[p, j], with
    ln_s = ln(spot) at the left grid nodes.  tau_j = 0 or sigma_m = 0
    degenerate to the indicator delta.
    """
    ln_k = math.log(strike)
    n_sig = len(sigmas)
    n_paths, n_steps = ds.shape
    v_out = np.zeros((n_sig, n_paths))
    for m in range(n_sig):
        sig = float(sigmas[m])
        for j in range(n_steps):
            v = sig * math.sqrt(taus[j])
            if v <= 0.0:
                delta = (ln_s[:, j] > ln_k).astype(float)
            else:
                delta = ndtr((ln_s[:, j] - ln_k) / v + 0.5 * v)
            v_out[m] += delta * ds[:, j]
    return v_out


def softplus_call_hedge_sums(
    s: np.ndarray,
    ln_s: np.ndarray,
    ds: np.ndarray,
    taus: np.ndarray,
    sigmas: np.ndarray,
    strike: float,
    kappa: float,
    lnk: np.ndarray,
    w_delta: np.ndarray,
) -> np.ndarray:
    """Hedge sums of the smoothed-call delta at several vol levels.

    The delta at (s, tau) is N(d1) plus the smoothing correction
    (kappa/(s v)) sum_i w_delta[i] phi(z_i) on the nodes produced by
    ``volerr.simulation.pricers.softplus_correction_nodes`` (lnk must be
    ascending).  tau = 0 or sigma = 0 degenerate to the sigmoid delta.
    Nodes are processed in blocks to bound temporary storage.
    """
    ln_k = math.log(strike)
    n_sig = len(sigmas)
    n_paths, n_steps = ds.shape
    n_q = lnk.shape[0]
    v_out = np.zeros((n_sig, n_paths))
    for m in range(n_sig):
        sig = float(sigmas[m])
        for j in range(n_steps):
            v = sig * math.sqrt(taus[j])
            if v <= 0.0:
                delta = expit((s[:, j] - strike) / kappa)
            else:
                delta = ndtr((ln_s[:, j] - ln_k) / v + 0.5 * v)
                corr = np.zeros(n_paths)
                for q in range(0, n_q, 1024):
                    z = (lnk[None, q:q + 1024] - ln_s[:, j, None]) / v + 0.5 * v
                    corr += np.exp(-0.5 * z * z) @ w_delta[q:q + 1024]
                delta = delta + corr * (kappa / v) / s[:, j]
            v_out[m] += delta * ds[:, j]
    return v_out


def draw_stats(
    v_t: np.ndarray,
    phi: np.ndarray,
    weights: np.ndarray,
    f: np.ndarray,
    base_h: np.ndarray,
    h0: float,
    h1: float,
    h2: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Inner statistics of h(pnl) for a batch of outer draws.

    For draw d the per-path P&L is pnl_p = f[d] - phi[p] + v_t[p] . weights[d]
    and h(x) = h0 + h1 x + h2 x^2 / 2.  Returns, per draw: the mean and
    sample std of h(pnl_p), and the mean and sample std of the per-path
    difference h(pnl_p) - base_h[p] (the common-noise-cancelled statistic
    used for bias estimation).
    """
    n_draws = weights.shape[0]
    n_paths = v_t.shape[0]
    mean_h = np.empty(n_draws)
    std_h = np.empty(n_draws)
    mean_d = np.empty(n_draws)
    std_d = np.empty(n_draws)
    ddof = 1 if n_paths > 1 else 0
    for d in range(n_draws):
        pnl = f[d] - phi + v_t @ weights[d]
        h = h0 + h1 * pnl + 0.5 * h2 * pnl * pnl
        diff = h - base_h
        mean_h[d] = h.mean()
        std_h[d] = h.std(ddof=ddof)
        mean_d[d] = diff.mean()
        std_d[d] = diff.std(ddof=ddof)
    return mean_h, std_h, mean_d, std_d
