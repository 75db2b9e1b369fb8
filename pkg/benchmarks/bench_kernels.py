"""Benchmark the compiled simulation kernels against the numpy reference.

Runs each kernel on a few realistic problem sizes and reports the best
wall time per call for both implementations.  Usage:

    python3 benchmarks/bench_kernels.py [--repeats 3] [--full]

--full adds the validation-sized workload (20000 paths x 256 steps),
which takes a few minutes per smoothed-kernel call.
"""

from __future__ import annotations

import argparse
import math
import time

import numpy as np

from volerr import _kernels_np
from volerr.simulation.pricers import softplus_correction_nodes

try:
    from volerr import _kernels as _compiled
except ImportError:
    _compiled = None


def _best_time(fn, args, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def _inputs(n_paths, n_steps, n_sig, n_draws, seed=7):
    rng = np.random.default_rng(seed)
    sig0 = 0.2
    dt = 1.0 / n_steps
    z = rng.standard_normal((n_paths, n_steps))
    ln_s = np.log(100.0) + np.concatenate(
        [np.zeros((n_paths, 1)),
         np.cumsum(sig0 * np.sqrt(dt) * z - 0.5 * sig0 * sig0 * dt, axis=1)],
        axis=1,
    )
    s = np.exp(ln_s)
    ds = np.diff(s, axis=1)
    taus = 1.0 - dt * np.arange(n_steps)
    sigmas = sig0 + np.linspace(-0.003, 0.003, n_sig)
    lnk, _, w_delta = softplus_correction_nodes(
        100.0, 0.5, float(sigmas.min()) * math.sqrt(dt))

    v_t = rng.standard_normal((n_paths, n_sig))
    phi = np.maximum(s[:, -1] - 100.0, 0.0)
    weights = rng.standard_normal((n_draws, n_sig)) / n_sig
    f = 8.0 + 0.01 * rng.standard_normal(n_draws)
    base_h = rng.standard_normal(n_paths)

    return {
        "call_hedge_sums": (
            np.ascontiguousarray(ln_s[:, :-1]), ds, taus, sigmas, 100.0),
        "softplus_call_hedge_sums": (
            np.ascontiguousarray(s[:, :-1]), np.ascontiguousarray(ln_s[:, :-1]),
            ds, taus, sigmas, 100.0, 0.5, lnk, w_delta),
        "draw_stats": (v_t, phi, weights, f, base_h, 0.0, 1.0, 0.0),
    }


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--full", action="store_true",
                    help="include the validation-sized workload")
    args = ap.parse_args()

    if _compiled is None:
        print("compiled kernels not available; showing numpy only")

    sizes = [
        (2000, 64, 13, 256),
        (8000, 128, 13, 512),
    ]
    if args.full:
        sizes.append((20000, 256, 13, 2000))
    header = f"{'kernel':<26}{'paths':>7}{'steps':>6}  {'numpy':>10}  {'compiled':>10}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n_paths, n_steps, n_sig, n_draws in sizes:
        inputs = _inputs(n_paths, n_steps, n_sig, n_draws)
        for name, arg in inputs.items():
            t_np = _best_time(getattr(_kernels_np, name), arg, args.repeats)
            if _compiled is not None:
                t_c = _best_time(getattr(_compiled, name), arg, args.repeats)
                ratio = t_np / t_c if t_c > 0 else float("inf")
                print(f"{name:<26}{n_paths:>7}{n_steps:>6}  {t_np * 1e3:>8.1f}ms  "
                      f"{t_c * 1e3:>8.1f}ms  {ratio:>7.2f}x")
            else:
                print(f"{name:<26}{n_paths:>7}{n_steps:>6}  {t_np * 1e3:>8.1f}ms")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
