"""First-order law of the hedging P&L under coefficient uncertainty.

Sell at the model price computed from estimated coefficients a_i, hedge
the model delta on a discrete grid, and let the market follow the true
dynamics.  For a smooth test function h, the statistic E[h(P&L)] then
carries a bias coefficient and a variance coefficient, both linear in
the coefficients' error descriptors (gamma_i, bias_i):

    bias[E h]     = h'(0) * Lambda1 + h''(0)/2 * Lambda2
    variance[E h] = h'(0)^2 * Psi

with, writing D_i f for the sensitivity of f to a_i, I(g) = int_0^T g dt,
and all expectations over the true path law,

    Lambda1 = sum_i  D_i F * bias_i + 1/2 D_i^2 F * gamma_i
            + mu * I(E[D_i Delta(t, S_t) S_t]) * bias_i
            + mu/2 * I(E[D_i^2 Delta(t, S_t) S_t]) * gamma_i
    Lambda2 = sum_i gamma_i * ( I(E[(D_i Delta)^2 S_t^2 sigma^2(t, S_t)])
            + E[(D_i F + mu * int_0^T D_i Delta(t, S_t) S_t dt)^2] )
    Psi     = sum_i gamma_i * ( D_i F + mu * I(E[D_i Delta(t, S_t) S_t]) )^2

The estimator below computes the sensitivities by central bump-and-
reprice of the pricer (the pricing noise, if any, is shared across
bumps), the time integrals by the trapezoid rule on the hedging grid,
and the expectations by Monte Carlo with batch-means standard errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import BumpResolutionError, InvalidInputError
from ..payoffs import OptionSpec
from .basis import VolatilityBasis
from .config import SimulationConfig
from .paths import PathEnsemble, simulate_paths
from .pricers import pricer_for

__all__ = ["TestFunctionJet", "PnLLawEstimate", "estimate_law"]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class TestFunctionJet:
    """2-jet (h(0), h'(0), h''(0)) of the test function at zero P&L.

    The first-order law only sees the jet; taking h to be the quadratic
    polynomial h0 + h1 x + h2 x^2 / 2 determined by it makes empirical
    averages comparable to the predicted law without truncation error.
    """

    __test__ = False  # keep pytest from collecting this as a test class

    h0: float
    h1: float
    h2: float

    def __post_init__(self):
        for name in ("h0", "h1", "h2"):
            x = float(getattr(self, name))
            if not math.isfinite(x):
                raise InvalidInputError(f"{name} must be finite, got {x!r}")
            object.__setattr__(self, name, x)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        out = self.h0 + self.h1 * x + 0.5 * self.h2 * x * x
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class PnLLawEstimate:
    """Estimated law functionals with Monte Carlo standard errors.

    All values are per unit epsilon: the absolute corrections to E[h(P&L)]
    are epsilon * bias and epsilon * variance (for the error variance).
    Deterministic contributions (pure repricing terms at mu = 0) have
    zero standard error.
    """

    lambda1: float
    lambda2: float
    psi: float
    bias: float
    variance: float
    lambda1_stderr: float
    lambda2_stderr: float
    psi_stderr: float
    bias_stderr: float
    variance_stderr: float
    n_batches: int


def _batch_slices(n: int, n_batches: int) -> list[slice]:
    bounds = np.linspace(0, n, n_batches + 1).astype(int)
    return [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]


def _trapezoid_weights(times: np.ndarray) -> np.ndarray:
    w = np.empty_like(times)
    w[0] = 0.5 * (times[1] - times[0])
    w[-1] = 0.5 * (times[-1] - times[-2])
    w[1:-1] = 0.5 * (times[2:] - times[:-2])
    return w


def _zero_estimate() -> PnLLawEstimate:
    return PnLLawEstimate(
        lambda1=0.0, lambda2=0.0, psi=0.0, bias=0.0, variance=0.0,
        lambda1_stderr=0.0, lambda2_stderr=0.0, psi_stderr=0.0,
        bias_stderr=0.0, variance_stderr=0.0, n_batches=0,
    )


def _check_bump(a: float, b: float, f0: float, fp: float, fm: float,
                fprime: float, fsecond: float, gamma: float) -> None:
    """Reject bumps too small for the second difference to resolve.

    The cancellation noise of (fp - 2 f0 + fm)/b^2 is ~ 4 eps |f| / b^2;
    when it rivals the curvature scale |fsecond| + |fprime| / scale(a)
    the gamma term of the bias is garbage and a larger bump is needed.
    Exact zero differences are fine (the price simply does not depend on
    this coefficient).
    """
    if b < 64.0 * _EPS * max(abs(a), 1.0):
        raise BumpResolutionError(
            f"bump {b} is below the floating-point floor for coefficient {a}; "
            "increase bump_rel"
        )
    if gamma <= 0.0 or (fp == f0 and fm == f0):
        return
    noise = 4.0 * _EPS * max(abs(fp), abs(f0), abs(fm)) / (b * b)
    scale = abs(fsecond) + 1e-4 * abs(fprime) / max(abs(a), 1.0)
    if noise > 0.1 * scale:
        raise BumpResolutionError(
            f"second-difference noise {noise:.3e} exceeds 10% of the curvature "
            f"scale {scale:.3e}; increase bump_rel (currently bump = {b})"
        )


def estimate_law(
    true_basis: VolatilityBasis,
    estimated_basis: VolatilityBasis,
    mu: float,
    x0: float,
    payoff: OptionSpec,
    h: TestFunctionJet,
    cfg: SimulationConfig,
    bump_rel: float = 1e-3,
    ensemble: PathEnsemble | None = None,
) -> PnLLawEstimate:
    """Estimate (Lambda1, Lambda2, Psi) and the induced bias/variance.

    Paths follow ``true_basis``; prices, deltas and their coefficient
    sensitivities are computed under ``estimated_basis``.  Sensitivities
    use central bumps a_i -> a_i +- bump_rel * |a_i| (falling back to an
    absolute bump for a zero coefficient).  Standard errors come from
    >= 32 contiguous path batches.  ``ensemble`` may be passed to reuse
    already simulated paths (it must match cfg); by default paths are
    simulated from cfg.

    Coefficients without error descriptors contribute nothing; if no
    coefficient is uncertain the estimate is identically zero.
    """
    if len(true_basis.components) != len(estimated_basis.components):
        raise InvalidInputError("true and estimated bases must share the same factors")
    if cfg.horizon != payoff.maturity:
        raise InvalidInputError(
            f"cfg.horizon = {cfg.horizon} must equal payoff maturity {payoff.maturity}"
        )
    if not (bump_rel > 0.0 and math.isfinite(bump_rel)):
        raise InvalidInputError(f"bump_rel must be finite and > 0, got {bump_rel!r}")

    comps = estimated_basis.components
    active = [
        i
        for i, c in enumerate(comps)
        if c.uncertainty is not None
        and (c.uncertainty.gamma > 0.0 or c.uncertainty.bias != 0.0)
    ]
    if not active:
        return _zero_estimate()

    if ensemble is None:
        ensemble = simulate_paths(true_basis, mu, x0, cfg)
    spots = ensemble.spots
    times = ensemble.times
    n_paths = spots.shape[0]
    n_batches = min(32, n_paths)
    slices = _batch_slices(n_paths, n_batches)
    sizes = np.array([sl.stop - sl.start for sl in slices], dtype=float)
    w_t = _trapezoid_weights(times)

    pricer = pricer_for(payoff, estimated_basis)
    coeffs = estimated_basis.coefficients
    f0 = float(pricer.price(estimated_basis, x0, 0.0))

    lam1 = lam2 = psi = 0.0
    lam1_b = np.zeros(n_batches)
    lam2_b = np.zeros(n_batches)
    psi_b = np.zeros(n_batches)

    for i in active:
        u = comps[i].uncertainty
        a = coeffs[i]
        b = bump_rel * (abs(a) if a != 0.0 else 1.0)
        cp, cm = coeffs.copy(), coeffs.copy()
        cp[i] += b
        cm[i] -= b
        basis_p = estimated_basis.with_coefficients(cp)
        basis_m = estimated_basis.with_coefficients(cm)
        fp = float(pricer.price(basis_p, x0, 0.0))
        fm = float(pricer.price(basis_m, x0, 0.0))
        fprime = (fp - fm) / (2.0 * b)
        fsecond = (fp - 2.0 * f0 + fm) / (b * b)
        _check_bump(a, b, f0, fp, fm, fprime, fsecond, u.gamma)

        # Walk the grid once, accumulating the three time integrals and the
        # per-path integral q_p = int D_i Delta(t, S_t) S_t dt.
        i1_sum = np.zeros(n_batches)   # sum over paths of int dprime * S dt
        i2_sum = np.zeros(n_batches)   # same for dsecond
        qv_sum = np.zeros(n_batches)   # same for dprime^2 S^2 sigma^2
        q_path = np.zeros(n_paths)
        for j in range(times.size):
            t = float(times[j])
            s = spots[:, j]
            d0 = np.asarray(pricer.delta(estimated_basis, s, t), dtype=float)
            dp = np.asarray(pricer.delta(basis_p, s, t), dtype=float)
            dm = np.asarray(pricer.delta(basis_m, s, t), dtype=float)
            dprime = (dp - dm) / (2.0 * b)
            dsecond = (dp - 2.0 * d0 + dm) / (b * b)
            sig = np.asarray(true_basis.sigma(t, s), dtype=float)
            if sig.ndim == 0:
                sig = np.full(n_paths, float(sig))
            ds_term = dprime * s
            qv_term = ds_term * ds_term * sig * sig
            d2_term = dsecond * s
            q_path += w_t[j] * ds_term
            for bi, sl in enumerate(slices):
                i1_sum[bi] += w_t[j] * ds_term[sl].sum()
                i2_sum[bi] += w_t[j] * d2_term[sl].sum()
                qv_sum[bi] += w_t[j] * qv_term[sl].sum()

        i1_batch = i1_sum / sizes
        i2_batch = i2_sum / sizes
        qv_batch = qv_sum / sizes
        i1 = float(i1_sum.sum() / n_paths)
        i2 = float(i2_sum.sum() / n_paths)
        qv = float(qv_sum.sum() / n_paths)
        sq = (fprime + mu * q_path) ** 2
        sq_batch = np.array([sq[sl].mean() for sl in slices])
        sq_mean = float(sq.mean())

        lam1 += fprime * u.bias + 0.5 * fsecond * u.gamma
        lam1 += mu * i1 * u.bias + 0.5 * mu * i2 * u.gamma
        lam2 += u.gamma * (qv + sq_mean)
        psi += u.gamma * (fprime + mu * i1) ** 2

        lam1_b += fprime * u.bias + 0.5 * fsecond * u.gamma
        lam1_b += mu * i1_batch * u.bias + 0.5 * mu * i2_batch * u.gamma
        lam2_b += u.gamma * (qv_batch + sq_batch)
        psi_b += u.gamma * (fprime + mu * i1_batch) ** 2

    hj = h
    bias = hj.h1 * lam1 + 0.5 * hj.h2 * lam2
    variance = hj.h1 * hj.h1 * psi
    bias_b = hj.h1 * lam1_b + 0.5 * hj.h2 * lam2_b
    var_b = hj.h1 * hj.h1 * psi_b

    def se(batch_vals: np.ndarray) -> float:
        if n_batches < 2:
            return 0.0
        return float(batch_vals.std(ddof=1) / math.sqrt(n_batches))

    return PnLLawEstimate(
        lambda1=float(lam1),
        lambda2=float(lam2),
        psi=float(psi),
        bias=float(bias),
        variance=float(variance),
        lambda1_stderr=se(lam1_b),
        lambda2_stderr=se(lam2_b),
        psi_stderr=se(psi_b),
        bias_stderr=se(bias_b),
        variance_stderr=se(var_b),
        n_batches=n_batches,
    )
