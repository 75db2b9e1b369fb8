import math
import os
import subprocess
import sys

import numpy as np
import pytest
from scipy.special import expit, ndtr

from volerr import _kernels_np, kernels
from volerr.simulation.basis import constant_vol
from volerr.simulation.pricers import SmoothedCallPricer, softplus_correction_nodes

pytestmark = []

needs_compiled = pytest.mark.skipif(
    not kernels.using_compiled(), reason="compiled kernels unavailable"
)


def _inputs(n_paths=500, n_steps=24, n_sig=5, seed=3, zero_tau_step=False):
    rng = np.random.default_rng(seed)
    dt = 1.0 / n_steps
    z = rng.standard_normal((n_paths, n_steps))
    ln_s = np.log(100.0) + np.concatenate(
        [np.zeros((n_paths, 1)), np.cumsum(0.2 * math.sqrt(dt) * z, axis=1)], axis=1
    )
    s = np.exp(ln_s)
    ds = np.diff(s, axis=1)
    taus = 1.0 - dt * np.arange(n_steps)
    if zero_tau_step:
        taus = taus.copy()
        taus[-1] = 0.0
    sigmas = 0.2 + np.linspace(-0.01, 0.01, n_sig)
    return (
        np.ascontiguousarray(s[:, :-1]),
        np.ascontiguousarray(ln_s[:, :-1]),
        np.ascontiguousarray(ds),
        np.ascontiguousarray(taus),
        np.ascontiguousarray(sigmas),
    )


def _nodes(sigmas, n_steps=24):
    return softplus_correction_nodes(100.0, 0.5, float(sigmas.min()) / math.sqrt(n_steps))


# -- backend selection ----------------------------------------------------------

def test_backend_is_reported():
    assert kernels.BACKEND in ("compiled", "numpy")
    assert kernels.using_compiled() == (kernels.BACKEND == "compiled")


def test_env_var_forces_the_numpy_backend():
    env = dict(os.environ, VOLERR_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from volerr import kernels; print(kernels.BACKEND)"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.strip() == "numpy"


# -- cross-backend parity ---------------------------------------------------------

@needs_compiled
def test_call_hedge_sums_backends_agree():
    from volerr import _kernels

    s, ln_s, ds, taus, sigmas = _inputs(zero_tau_step=True)
    a = _kernels.call_hedge_sums(ln_s, ds, taus, sigmas, 100.0)
    b = _kernels_np.call_hedge_sums(ln_s, ds, taus, sigmas, 100.0)
    assert np.max(np.abs(a - b)) <= 1e-12 * (1.0 + np.max(np.abs(b)))


@needs_compiled
def test_softplus_hedge_sums_backends_agree():
    from volerr import _kernels

    s, ln_s, ds, taus, sigmas = _inputs(zero_tau_step=True)
    lnk, _, w_delta = _nodes(sigmas)
    a = _kernels.softplus_call_hedge_sums(s, ln_s, ds, taus, sigmas, 100.0, 0.5, lnk, w_delta)
    b = _kernels_np.softplus_call_hedge_sums(s, ln_s, ds, taus, sigmas, 100.0, 0.5, lnk, w_delta)
    assert np.max(np.abs(a - b)) <= 1e-12 * (1.0 + np.max(np.abs(b)))


@needs_compiled
def test_draw_stats_backends_agree():
    from volerr import _kernels

    rng = np.random.default_rng(9)
    v_t = rng.standard_normal((400, 6))
    phi = np.maximum(rng.normal(100.0, 15.0, 400) - 100.0, 0.0)
    weights = rng.standard_normal((32, 6)) / 6.0
    f = 8.0 + 0.01 * rng.standard_normal(32)
    base_h = rng.standard_normal(400)
    args = (v_t, phi, weights, f, base_h, 0.1, 1.0, 0.4)
    for a, b in zip(_kernels.draw_stats(*args), _kernels_np.draw_stats(*args)):
        assert np.max(np.abs(a - b)) <= 1e-12 * (1.0 + np.max(np.abs(b)))


# -- semantics against the pricers ------------------------------------------------

def test_call_kernel_is_the_black_scholes_delta_sum():
    s, ln_s, ds, taus, sigmas = _inputs(n_steps=8)
    out = kernels.call_hedge_sums(ln_s, ds, taus, sigmas, 100.0)
    m = 2
    v = sigmas[m] * np.sqrt(taus)
    expected = np.zeros(s.shape[0])
    for j in range(taus.size):
        d1 = (ln_s[:, j] - math.log(100.0)) / v[j] + 0.5 * v[j]
        expected += ndtr(d1) * ds[:, j]
    assert out[m] == pytest.approx(expected, rel=1e-13)


def test_softplus_kernel_matches_the_smoothed_pricer_delta():
    s, ln_s, ds, taus, sigmas = _inputs(n_steps=8)
    lnk, _, w_delta = _nodes(sigmas, n_steps=8)
    one = np.ones_like(ds[:, :1])
    pricer = SmoothedCallPricer(100.0, 1.0, 0.5)
    for m in (0, 4):
        out = kernels.softplus_call_hedge_sums(
            s[:, :1].copy(), ln_s[:, :1].copy(), one, taus[:1], sigmas[m : m + 1],
            100.0, 0.5, lnk, w_delta,
        )
        deltas = pricer.delta(constant_vol(float(sigmas[m])), s[:, 0], 1.0 - taus[0])
        assert out[0] == pytest.approx(deltas, abs=1e-13)


def test_degenerate_steps_use_the_terminal_delta():
    s, ln_s, ds, taus, sigmas = _inputs(n_steps=8, zero_tau_step=True)
    lnk, _, w_delta = _nodes(sigmas, n_steps=8)

    out_c = kernels.call_hedge_sums(ln_s, ds, taus, sigmas, 100.0)
    out_s = kernels.softplus_call_hedge_sums(
        s, ln_s, ds, taus, sigmas, 100.0, 0.5, lnk, w_delta
    )
    j = taus.size - 1
    kink = (ln_s[:, j] > math.log(100.0)).astype(float) * ds[:, j]
    smooth = expit((s[:, j] - 100.0) / 0.5) * ds[:, j]
    rest_c = kernels.call_hedge_sums(
        ln_s[:, :j].copy(), ds[:, :j].copy(), taus[:j], sigmas, 100.0
    )
    rest_s = kernels.softplus_call_hedge_sums(
        s[:, :j].copy(), ln_s[:, :j].copy(), ds[:, :j].copy(), taus[:j], sigmas,
        100.0, 0.5, lnk, w_delta,
    )
    assert out_c[1] == pytest.approx(rest_c[1] + kink, rel=1e-13)
    assert out_s[1] == pytest.approx(rest_s[1] + smooth, rel=1e-13)


def test_draw_stats_matches_direct_evaluation_and_handles_one_path():
    rng = np.random.default_rng(12)
    v_t = rng.standard_normal((200, 4))
    phi = rng.standard_normal(200) ** 2
    weights = rng.standard_normal((8, 4)) / 4.0
    f = rng.standard_normal(8)
    base_h = rng.standard_normal(200)
    h0, h1, h2 = 0.2, 0.9, 1.7
    mean_h, std_h, mean_d, std_d = kernels.draw_stats(
        v_t, phi, weights, f, base_h, h0, h1, h2
    )
    for d in (0, 5):
        pnl = f[d] - phi + v_t @ weights[d]
        hv = h0 + h1 * pnl + 0.5 * h2 * pnl * pnl
        assert mean_h[d] == pytest.approx(hv.mean(), rel=1e-13)
        assert std_h[d] == pytest.approx(hv.std(ddof=1), rel=1e-12)
        assert mean_d[d] == pytest.approx((hv - base_h).mean(), rel=1e-12, abs=1e-13)
        assert std_d[d] == pytest.approx((hv - base_h).std(ddof=1), rel=1e-12)

    one = kernels.draw_stats(
        v_t[:1], phi[:1], weights, f, base_h[:1], h0, h1, h2
    )
    assert np.all(np.isfinite(one[1])) and np.all(one[1] == 0.0)
    assert np.all(np.isfinite(one[3])) and np.all(one[3] == 0.0)
