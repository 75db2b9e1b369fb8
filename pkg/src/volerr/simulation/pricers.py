"""Pricers exposing value and delta as functions of (basis, spot, time).

All prices are undiscounted expectations of the terminal payoff under the
pricing dynamics dS = S sigma dB started at (s, t).  Three providers:

* ConstantVolCallPricer: closed form for the plain call, flat sigma;
* SmoothedCallPricer: plain-call closed form plus a locally integrated
  smoothing correction (see ``softplus_correction_nodes``), flat sigma;
* NestedMCPricer: sub-simulation for arbitrary bases.  Its noise is keyed
  by (seed, time index) only, so repricings under bumped coefficients or
  bumped spots share noise and stay smooth in the bump, which is what
  finite-difference sensitivities need.

``pricer_for`` picks the cheapest valid provider.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import expit, ndtr

from ..errors import InvalidInputError
from ..payoffs import OptionSpec, sigmoid
from .basis import VolatilityBasis
from .paths import NESTED_STREAM

__all__ = [
    "softplus_correction_nodes",
    "ConstantVolCallPricer",
    "SmoothedCallPricer",
    "NestedMCPricer",
    "pricer_for",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_CORR_Y_MAX = 32.0            # softplus correction < 1.3e-14 beyond this
_CORR_EDGES = (0.0, 2.0, 4.0, 8.0, 16.0, _CORR_Y_MAX)
_CORR_DEG = 10                # Gauss-Legendre degree per sub-panel
_MAX_REFINE_LEVEL = 6


def _correction_level(strike: float, kappa: float, v: float) -> int:
    """Panel refinement level needed at total volatility v = sigma sqrt(tau).

    The narrow factor of the correction integrand is a Gaussian of width
    about v * strike / kappa in the y variable; panels must stay a fixed
    multiple of that width.  Level ``l`` halves the panel width ``l``
    times.  Beyond level 6 (v * strike / kappa below ~0.02) the node
    count stops growing and accuracy degrades gracefully.
    """
    width = min(1.0, 0.8 * v * strike / kappa)
    if width >= 1.0:
        return 0
    return min(_MAX_REFINE_LEVEL, math.ceil(-math.log2(width)))


@lru_cache(maxsize=64)
def _correction_nodes_cached(strike: float, kappa: float, level: int):
    width_scale = 0.5 ** level
    gx, gw = np.polynomial.legendre.leggauss(_CORR_DEG)
    y_lo = -min(_CORR_Y_MAX, (strike / kappa) * (1.0 - 1e-9))
    edges = sorted({max(-e, y_lo) for e in _CORR_EDGES} | set(_CORR_EDGES))
    ys, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        n_sub = max(1, math.ceil((b - a) / (3.0 * width_scale)))
        sub = np.linspace(a, b, n_sub + 1)
        for lo, hi in zip(sub[:-1], sub[1:]):
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            ys.append(mid + half * gx)
            ws.append(half * gw)
    y = np.concatenate(ys)
    w = np.concatenate(ws)
    k_nodes = strike + kappa * y
    lnk = np.log(k_nodes)
    c = np.log1p(np.exp(-np.abs(y)))
    r = np.where(y < 0.0, expit(y), -expit(-y))
    w_price = w * c * kappa * kappa / (k_nodes * _SQRT_2PI)
    w_delta = w * r / _SQRT_2PI
    for arr in (lnk, w_price, w_delta):
        arr.setflags(write=False)
    return lnk, w_price, w_delta


def softplus_correction_nodes(
    strike: float, kappa: float, v_floor: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Quadrature rule for the gap between the smoothed and the plain call.

    Writing softplus pointwise as max plus a remainder,

        kappa * softplus((S - K)/kappa) = (S - K)^+ + kappa * c(y),
        sigmoid((S - K)/kappa) = 1{S > K} + r(y),       y = (S - K)/kappa,

    with c(y) = log(1 + exp(-|y|)) and |r(y)| = sigmoid(-|y|), both decaying
    like exp(-|y|).  Under the lognormal terminal law the smoothed price and
    delta are therefore the Black-Scholes values plus narrow integrals over
    y, evaluated here by composite Gauss-Legendre panels (geometrically
    widening away from the kink, since the far panels are exponentially
    small).  Returns arrays (lnk, w_price, w_delta), ascending in lnk, with

        price(s) = BS(s) + (exp(-z^2/2) . w_price) / v,
        delta(s) = N(d1) + (exp(-z^2/2) . w_delta) * kappa / (s v),
        z_i = (lnk_i - ln s) / v + v / 2,   v = sigma sqrt(tau).

    ``v_floor`` is the smallest total volatility the rule must resolve;
    panel widths shrink with it (see ``_correction_level``).
    """
    return _correction_nodes_cached(
        float(strike), float(kappa), _correction_level(strike, kappa, v_floor)
    )


def _as_array(s):
    arr = np.asarray(s, dtype=float)
    return arr, arr.ndim == 0


def _ret(out, scalar):
    return float(out) if scalar else out


class ConstantVolCallPricer:
    """Closed-form plain call under a flat volatility basis."""

    def __init__(self, strike: float, maturity: float):
        self.strike = float(strike)
        self.maturity = float(maturity)

    def _tau(self, t: float) -> float:
        tau = self.maturity - t
        if tau < 0.0:
            raise InvalidInputError(f"valuation time {t} is past maturity {self.maturity}")
        return tau

    def price(self, basis: VolatilityBasis, s, t: float):
        sig = basis.constant_sigma()
        tau = self._tau(t)
        arr, scalar = _as_array(s)
        v = sig * math.sqrt(tau)
        if v <= 0.0:
            return _ret(np.maximum(arr - self.strike, 0.0), scalar)
        d1 = np.log(arr / self.strike) / v + 0.5 * v
        out = arr * ndtr(d1) - self.strike * ndtr(d1 - v)
        return _ret(out, scalar)

    def delta(self, basis: VolatilityBasis, s, t: float):
        sig = basis.constant_sigma()
        tau = self._tau(t)
        arr, scalar = _as_array(s)
        v = sig * math.sqrt(tau)
        if v <= 0.0:
            return _ret((arr > self.strike).astype(float), scalar)
        out = ndtr(np.log(arr / self.strike) / v + 0.5 * v)
        return _ret(out, scalar)


class SmoothedCallPricer:
    """Exact pricer for the softplus-smoothed call, flat volatility.

    With S_T = s * exp(v z - v^2/2), z ~ N(0,1), v = sigma sqrt(tau):

        price(s)  = E[ kappa * softplus((S_T - K)/kappa) ]
        delta(s)  = E[ sigmoid((S_T - K)/kappa) * S_T / s ]

    computed as the Black-Scholes call value plus the smoothing correction
    of ``softplus_correction_nodes``, accurate to near machine precision.
    """

    def __init__(self, strike: float, maturity: float, kappa: float):
        self.strike = float(strike)
        self.maturity = float(maturity)
        self.kappa = float(kappa)

    def _tau(self, t: float) -> float:
        tau = self.maturity - t
        if tau < 0.0:
            raise InvalidInputError(f"valuation time {t} is past maturity {self.maturity}")
        return tau

    def _phi_nodes(self, arr: np.ndarray, v: float) -> tuple[np.ndarray, ...]:
        lnk, w_price, w_delta = softplus_correction_nodes(self.strike, self.kappa, v)
        z = (lnk[None, :] - np.log(arr)[..., None]) / v + 0.5 * v
        return np.exp(-0.5 * z * z), w_price, w_delta

    def price(self, basis: VolatilityBasis, s, t: float):
        sig = basis.constant_sigma()
        tau = self._tau(t)
        arr, scalar = _as_array(s)
        if sig * sig * tau == 0.0:
            payoff = OptionSpec("smoothed_call", self.strike, self.maturity, kappa=self.kappa)
            return _ret(np.asarray(payoff.value(arr)), scalar)
        arr = np.atleast_1d(arr)
        v = sig * math.sqrt(tau)
        d1 = np.log(arr / self.strike) / v + 0.5 * v
        bs = arr * ndtr(d1) - self.strike * ndtr(d1 - v)
        phi, w_price, _ = self._phi_nodes(arr, v)
        out = bs + (phi @ w_price) / v
        return _ret(out[0] if scalar else out, scalar)

    def delta(self, basis: VolatilityBasis, s, t: float):
        sig = basis.constant_sigma()
        tau = self._tau(t)
        arr, scalar = _as_array(s)
        if sig * sig * tau == 0.0:
            return _ret(sigmoid((arr - self.strike) / self.kappa), scalar)
        arr = np.atleast_1d(arr)
        v = sig * math.sqrt(tau)
        d1 = np.log(arr / self.strike) / v + 0.5 * v
        phi, _, w_delta = self._phi_nodes(arr, v)
        out = ndtr(d1) + (phi @ w_delta) * (self.kappa / v) / arr
        return _ret(out[0] if scalar else out, scalar)


class NestedMCPricer:
    """Sub-simulation pricer for arbitrary bases.

    Prices by averaging the payoff over n_sub log-Euler paths from (s, t)
    to maturity under zero drift.  The Gaussian noise depends only on
    (seed, index of t on the sub-grid), so prices are smooth in both the
    basis coefficients and the starting spot; delta uses a central spot
    bump under common noise.
    """

    def __init__(
        self,
        payoff: OptionSpec,
        n_sub: int = 4000,
        n_sub_steps: int = 25,
        seed: int = 20770,
        spot_bump_rel: float = 1e-4,
    ):
        self.payoff = payoff
        self.n_sub = int(n_sub)
        self.n_sub_steps = int(n_sub_steps)
        self.seed = int(seed)
        self.spot_bump_rel = float(spot_bump_rel)

    def _noise(self, t: float) -> np.ndarray:
        # Key by the time only: repricing at the same t (bumped coeffs or
        # bumped spot) must reuse the same draws.
        t_key = int(round(t * 1e9)) & ((1 << 40) - 1)
        key = np.array(
            [self.seed, (NESTED_STREAM << 48) + t_key], dtype=np.uint64
        )
        g = np.random.Generator(np.random.Philox(key=key))
        return g.standard_normal((self.n_sub, self.n_sub_steps))

    def _terminal(self, basis: VolatilityBasis, arr: np.ndarray, t: float) -> np.ndarray:
        """Terminal spots, shape arr.shape + (n_sub,)."""
        tau = self.payoff.maturity - t
        if tau < 0.0:
            raise InvalidInputError(f"valuation time {t} is past maturity")
        if tau == 0.0:
            return np.repeat(arr[..., None], self.n_sub, axis=-1)
        z = self._noise(t)
        dt = tau / self.n_sub_steps
        sq = math.sqrt(dt)
        log_s = np.broadcast_to(np.log(arr)[..., None], arr.shape + (self.n_sub,)).copy()
        for k in range(self.n_sub_steps):
            tk = t + k * dt
            sig = np.asarray(basis.sigma(tk, np.exp(log_s)), dtype=float)
            log_s = log_s - 0.5 * sig * sig * dt + sig * (sq * z[:, k])
        return np.exp(log_s)

    def price(self, basis: VolatilityBasis, s, t: float):
        arr, scalar = _as_array(s)
        arr = np.atleast_1d(arr)
        s_t = self._terminal(basis, arr, t)
        out = self.payoff.value(s_t).mean(axis=-1)
        return _ret(out[0] if scalar else out, scalar)

    def delta(self, basis: VolatilityBasis, s, t: float):
        arr, scalar = _as_array(s)
        arr = np.atleast_1d(arr)
        h = self.spot_bump_rel * arr
        up = self.payoff.value(self._terminal(basis, arr + h, t)).mean(axis=-1)
        dn = self.payoff.value(self._terminal(basis, arr - h, t)).mean(axis=-1)
        out = (up - dn) / (2.0 * h)
        return _ret(out[0] if scalar else out, scalar)


def pricer_for(payoff: OptionSpec, basis: VolatilityBasis):
    """Cheapest valid pricer for the payoff under the basis."""
    if basis.is_constant:
        if payoff.kind == "call":
            return ConstantVolCallPricer(payoff.strike, payoff.maturity)
        return SmoothedCallPricer(payoff.strike, payoff.maturity, payoff.kappa)
    return NestedMCPricer(payoff)
