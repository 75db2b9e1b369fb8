"""Empirical validation of the first-order P&L law by outer Monte Carlo.

Coefficients are redrawn n_outer times from their first-order Gaussian
law a' = a + eps * bias + sqrt(eps * gamma) G, and for each redraw the
inner expectation E[h(P&L(a'))] is estimated by hedging a fixed ensemble
of true-model paths with the redrawn coefficients.  The report compares

* the mean of E[h(P&L(a'))] - E[h(P&L(a))] against eps * bias(law),
* the variance of E[h(P&L(a'))] across redraws against eps * variance(law),
* the frequency of k-sigma deviations against the distribution-free
  tail bound 1/(1+k^2),

where bias(law) and variance(law) come from :func:`estimate_law` on the
same ensemble.

Estimator design (constant-basis fast path).  All redraws share one path
ensemble, so the inner MC noise is common and cancels in the difference
against the a-run; redraws are antithetic in G, cancelling the noise
linear in the redraw; and hedge sums are evaluated on a small grid of
volatility nodes spanning the redraw range and interpolated (the hedge
sum is analytic in the flat volatility, so a degree-12 polynomial on the
tiny redraw interval is exact to near machine precision).  One further
systematic term survives those cancellations: the sampled curvature of
the hedge-sum noise in the volatility, which multiplies G^2 and does not
shrink with more redraws.  Its exact expectation is known from the
martingale structure of the hedge sum (zero under mu = 0), so it is
removed as a control variate.

The variance comparison carries an extra additive allowance of
0.5 * (eps * h''(0) * lambda2)^2.  The predicted variance eps * h'(0)^2 * Psi
is the leading term of a delta-method expansion whose next term is
0.5 * g''(0)^2 * Var[dsigma^2] with g''(0) ~ h''(0) * E[(D PnL)^2] =
h''(0) * lambda2 / gamma and Var[dsigma^2] ~ 2 (eps gamma)^2; for test
functions with h'(0) = 0 the leading prediction is zero and this second
order remainder is what the outer Monte Carlo resolves, so comparing
without the allowance would reject the law for reasons outside its
stated order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from ..errors import DomainError, InvalidInputError
from ..payoffs import OptionSpec
from .. import kernels
from .basis import VolatilityBasis
from .config import SimulationConfig
from .hedging import ensemble_pnls
from .law import PnLLawEstimate, TestFunctionJet, estimate_law
from .paths import OUTER_STREAM, normal_increments, simulate_paths
from .pricers import pricer_for, softplus_correction_nodes

__all__ = ["ChebyshevCheck", "ValidationReport", "validate_expansion", "draws_csv"]

# One-sided 99% normal allowance on an empirical frequency.
_Z99 = 2.3263478740408408


@dataclass(frozen=True)
class ChebyshevCheck:
    k: float
    bound: float
    freq_upper: float
    freq_lower: float
    allowance: float
    ok: bool


@dataclass(frozen=True)
class ValidationReport:
    epsilon: float
    n_outer: int
    n_paths: int
    n_steps: int
    seed: int
    tolerance_sigmas: float
    law: PnLLawEstimate
    # Empirical quantities, absolute (not divided by epsilon):
    empirical_bias_abs: float
    empirical_bias_stderr: float
    empirical_variance_abs: float
    empirical_variance_stderr: float
    predicted_bias_abs: float
    predicted_variance_abs: float
    variance_allowance: float
    baseline_mean: float
    baseline_stderr: float
    median_inner_stderr: float
    median_diff_stderr: float
    resolution_ok: bool
    bias_ok: bool
    variance_ok: bool
    chebyshev: tuple[ChebyshevCheck, ...]
    control_variate: float
    draw_coefficients: np.ndarray | None = field(repr=False, default=None)
    draw_inner_mean: np.ndarray | None = field(repr=False, default=None)
    draw_inner_stderr: np.ndarray | None = field(repr=False, default=None)
    coefficient_names: tuple[str, ...] = ()

    @property
    def empirical_bias(self) -> float:
        """Per-epsilon empirical bias (0 when epsilon = 0)."""
        return self.empirical_bias_abs / self.epsilon if self.epsilon > 0 else 0.0

    @property
    def empirical_variance(self) -> float:
        return self.empirical_variance_abs / self.epsilon if self.epsilon > 0 else 0.0

    @property
    def passed(self) -> bool:
        return self.bias_ok and self.variance_ok and all(c.ok for c in self.chebyshev)

    def to_jsonable(self, include_draws: bool = True) -> dict:
        law = self.law
        out = {
            "epsilon": self.epsilon,
            "n_outer": self.n_outer,
            "n_paths": self.n_paths,
            "n_steps": self.n_steps,
            "seed": self.seed,
            "tolerance_sigmas": self.tolerance_sigmas,
            "law": {
                "lambda1": law.lambda1,
                "lambda1_stderr": law.lambda1_stderr,
                "lambda2": law.lambda2,
                "lambda2_stderr": law.lambda2_stderr,
                "psi": law.psi,
                "psi_stderr": law.psi_stderr,
                "bias": law.bias,
                "bias_stderr": law.bias_stderr,
                "variance": law.variance,
                "variance_stderr": law.variance_stderr,
            },
            "empirical": {
                "bias_abs": self.empirical_bias_abs,
                "bias_stderr": self.empirical_bias_stderr,
                "variance_abs": self.empirical_variance_abs,
                "variance_stderr": self.empirical_variance_stderr,
                "baseline_mean": self.baseline_mean,
                "baseline_stderr": self.baseline_stderr,
                "median_inner_stderr": self.median_inner_stderr,
                "median_diff_stderr": self.median_diff_stderr,
                "control_variate": self.control_variate,
            },
            "predicted": {
                "bias_abs": self.predicted_bias_abs,
                "variance_abs": self.predicted_variance_abs,
                "variance_allowance": self.variance_allowance,
            },
            "checks": {
                "bias_ok": self.bias_ok,
                "variance_ok": self.variance_ok,
                "resolution_ok": self.resolution_ok,
                "chebyshev": [
                    {
                        "k": c.k,
                        "bound": c.bound,
                        "freq_upper": c.freq_upper,
                        "freq_lower": c.freq_lower,
                        "allowance": c.allowance,
                        "ok": c.ok,
                    }
                    for c in self.chebyshev
                ],
                "passed": self.passed,
            },
        }
        if include_draws and self.draw_coefficients is not None:
            out["draws"] = {
                "coefficient_names": list(self.coefficient_names),
                "coefficients": [list(map(float, row)) for row in self.draw_coefficients],
                "inner_mean": [float(x) for x in self.draw_inner_mean],
                "inner_stderr": [float(x) for x in self.draw_inner_stderr],
            }
        return out


def draws_csv(report: ValidationReport) -> str:
    """Per-redraw CSV: perturbed coefficients, inner mean, inner stderr."""
    if report.draw_coefficients is None:
        raise InvalidInputError("report was built without per-draw data")
    names = report.coefficient_names or tuple(
        f"coeff_{i}" for i in range(report.draw_coefficients.shape[1])
    )
    lines = ["draw," + ",".join(names) + ",inner_mean,inner_stderr"]
    for d in range(report.draw_coefficients.shape[0]):
        coeffs = ",".join(repr(float(x)) for x in report.draw_coefficients[d])
        mean = repr(float(report.draw_inner_mean[d]))
        se = repr(float(report.draw_inner_stderr[d]))
        lines.append(f"{d},{coeffs},{mean},{se}")
    return "\n".join(lines) + "\n"


def _chebyshev_nodes(lo: float, hi: float, n: int, center: float) -> np.ndarray:
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    nodes = mid + half * np.cos(np.pi * np.arange(n) / (n - 1))
    nodes = np.append(nodes, center)
    return np.unique(nodes)


def _barycentric_weights(nodes: np.ndarray) -> np.ndarray:
    scale = 2.0 / (nodes.max() - nodes.min())
    w = np.ones(nodes.size)
    for m in range(nodes.size):
        diff = (nodes[m] - nodes) * scale
        diff[m] = 1.0
        w[m] = 1.0 / diff.prod()
    return w


def _interp_weights(nodes: np.ndarray, bw: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Rows of Lagrange evaluation weights: out[i] . values interpolates at x[i]."""
    out = np.empty((x.size, nodes.size))
    for i, xi in enumerate(x):
        d = xi - nodes
        hit = np.nonzero(d == 0.0)[0]
        if hit.size:
            row = np.zeros(nodes.size)
            row[hit[0]] = 1.0
        else:
            row = bw / d
            row = row / row.sum()
        out[i] = row
    return out


def _second_derivative_functional(nodes: np.ndarray, x0: float) -> np.ndarray:
    """Weights c with c . values = (interpolating polynomial)''(x0)."""
    c = np.empty(nodes.size)
    for m in range(nodes.size):
        e = np.zeros(nodes.size)
        e[m] = 1.0
        poly = np.polynomial.polynomial.Polynomial.fit(nodes, e, deg=nodes.size - 1)
        c[m] = poly.deriv(2)(x0)
    return c


def _price_at_sigma(payoff: OptionSpec, x0: float, sigmas: np.ndarray) -> np.ndarray:
    """Time-0 model price of the payoff at each flat volatility."""
    v = sigmas * math.sqrt(payoff.maturity)
    if payoff.kind == "call":
        with np.errstate(divide="ignore"):
            d1 = np.where(v > 0, np.log(x0 / payoff.strike) / np.where(v > 0, v, 1.0) + 0.5 * v, np.inf)
        out = np.where(
            v > 0,
            x0 * ndtr(d1) - payoff.strike * ndtr(d1 - v),
            max(x0 - payoff.strike, 0.0),
        )
        return out
    out = np.full(v.shape, float(payoff.value(x0)))
    pos = v > 0
    if pos.any():
        vp = v[pos]
        lnk, w_price, _ = softplus_correction_nodes(
            payoff.strike, payoff.kappa, float(vp.min())
        )
        d1 = math.log(x0 / payoff.strike) / vp + 0.5 * vp
        z = (lnk[None, :] - math.log(x0)) / vp[:, None] + 0.5 * vp[:, None]
        out[pos] = (
            x0 * ndtr(d1) - payoff.strike * ndtr(d1 - vp)
            + (np.exp(-0.5 * z * z) @ w_price) / vp
        )
    return out


def validate_expansion(
    true_basis: VolatilityBasis,
    mu: float,
    x0: float,
    payoff: OptionSpec,
    h: TestFunctionJet,
    cfg: SimulationConfig,
    n_outer: int,
    tolerance_sigmas: float = 3.0,
    chebyshev_ks: tuple[float, ...] = (1.0, 2.0, 3.0),
    bump_rel: float = 1e-3,
    keep_draws: bool = True,
) -> ValidationReport:
    """Compare the empirical law of E[h(P&L)] against its predicted
    first-order bias and variance.

    The perturbation is centered at the true coefficients (the estimation
    error is what the redraw models), so ``true_basis`` doubles as the
    estimated basis.  Requires n_outer >= 1000 for the frequency checks
    to be meaningful.
    """
    if n_outer < 1000:
        raise InvalidInputError(f"n_outer must be >= 1000, got {n_outer}")
    if cfg.horizon != payoff.maturity:
        raise InvalidInputError(
            f"cfg.horizon = {cfg.horizon} must equal payoff maturity {payoff.maturity}"
        )

    comps = true_basis.components
    active = [i for i, c in enumerate(comps) if c.uncertainty is not None]
    eps = true_basis.common_epsilon()

    ens = simulate_paths(true_basis, mu, x0, cfg)
    law = estimate_law(true_basis, true_basis, mu, x0, payoff, h, cfg,
                       bump_rel=bump_rel, ensemble=ens)

    # Redraw the uncertain coefficients, antithetically in G.
    n_units = (n_outer + 1) // 2
    base = true_basis.coefficients
    coeff_draws = np.tile(base, (2 * n_units, 1))
    if active and eps > 0.0:
        g = normal_increments(cfg.seed, n_units, len(active), stream=OUTER_STREAM)
        for col, i in enumerate(active):
            u = comps[i].uncertainty
            shift = eps * u.bias
            spread = math.sqrt(eps * u.gamma)
            coeff_draws[0::2, i] = base[i] + shift + spread * g[:, col]
            coeff_draws[1::2, i] = base[i] + shift - spread * g[:, col]
    coeff_draws = coeff_draws[:n_outer]

    if true_basis.is_constant and payoff.kind in ("call", "smoothed_call"):
        mean_h, std_h, mean_d, std_d, base_mean, base_std, cv = _run_constant(
            true_basis, mu, x0, payoff, h, cfg, ens, coeff_draws
        )
    else:
        mean_h, std_h, mean_d, std_d, base_mean, base_std = _run_general(
            true_basis, mu, x0, payoff, h, ens, coeff_draws
        )
        cv = 0.0

    n_paths = ens.n_paths
    sqrt_p = math.sqrt(n_paths)
    d_vals = mean_d

    # Batch the redraws (whole antithetic pairs per batch) for stderrs.
    n_batches = min(32, max(2, n_outer // 2))
    pair_ids = np.arange(n_outer) // 2
    batch_of_pair = (pair_ids * n_batches) // (pair_ids.max() + 1)
    batch_means = np.array(
        [d_vals[batch_of_pair == b].mean() for b in range(n_batches)]
    )
    batch_vars = np.array(
        [d_vals[batch_of_pair == b].var(ddof=1) for b in range(n_batches)]
    )

    bias_abs = float(d_vals.mean())
    bias_se = float(batch_means.std(ddof=1) / math.sqrt(n_batches))
    var_abs = float(d_vals.var(ddof=1)) if n_outer > 1 else 0.0
    var_se = float(batch_vars.std(ddof=1) / math.sqrt(n_batches))

    pred_bias = eps * law.bias
    pred_var = eps * law.variance
    # Second-order remainder of the variance expansion (see module notes);
    # dominates the comparison only when h'(0) = 0.
    var_allow = 0.5 * (eps * h.h2 * law.lambda2) ** 2
    tol = tolerance_sigmas

    def within(x, target, se_x, se_t, allow=0.0) -> bool:
        band = tol * math.hypot(se_x, se_t) + allow + 1e-15 * (1.0 + abs(target))
        return abs(x - target) <= band

    bias_ok = within(bias_abs, pred_bias, bias_se, eps * law.bias_stderr)
    variance_ok = within(
        var_abs, pred_var, var_se, eps * law.variance_stderr, allow=var_allow
    )

    scale = math.sqrt(pred_var) if pred_var > 0 else 0.0
    cheb = []
    for k in chebyshev_ks:
        bound = 1.0 / (1.0 + k * k)
        allowance = _Z99 * math.sqrt(bound * (1.0 - bound) / n_outer)
        if scale > 0.0:
            fu = float(np.mean(d_vals - pred_bias >= k * scale))
            fl = float(np.mean(pred_bias - d_vals >= k * scale))
            ok = fu <= bound + allowance and fl <= bound + allowance
        else:
            fu = fl = 0.0
            ok = True
        cheb.append(ChebyshevCheck(k=float(k), bound=bound, freq_upper=fu,
                                   freq_lower=fl, allowance=allowance, ok=ok))

    med_inner = float(np.median(std_h) / sqrt_p)
    med_diff = float(np.median(std_d) / sqrt_p)
    signal = max(scale, abs(pred_bias))
    resolution_ok = signal == 0.0 or med_diff <= 0.1 * signal

    names = tuple(
        c.name if c.name else f"coeff_{i}" for i, c in enumerate(comps)
    )
    return ValidationReport(
        epsilon=eps,
        n_outer=n_outer,
        n_paths=cfg.n_paths,
        n_steps=cfg.n_steps,
        seed=cfg.seed,
        tolerance_sigmas=tolerance_sigmas,
        law=law,
        empirical_bias_abs=bias_abs,
        empirical_bias_stderr=bias_se,
        empirical_variance_abs=var_abs,
        empirical_variance_stderr=var_se,
        predicted_bias_abs=pred_bias,
        predicted_variance_abs=pred_var,
        variance_allowance=var_allow,
        baseline_mean=base_mean,
        baseline_stderr=base_std / sqrt_p,
        median_inner_stderr=med_inner,
        median_diff_stderr=med_diff,
        resolution_ok=resolution_ok,
        bias_ok=bias_ok,
        variance_ok=variance_ok,
        chebyshev=tuple(cheb),
        control_variate=cv,
        draw_coefficients=coeff_draws if keep_draws else None,
        draw_inner_mean=mean_h if keep_draws else None,
        draw_inner_stderr=(std_h / sqrt_p) if keep_draws else None,
        coefficient_names=names,
    )


def _run_constant(basis, mu, x0, payoff, h, cfg, ens, coeff_draws):
    """Shared-ensemble inner estimates for a constant basis.

    Returns per-draw (mean h, std h, mean diff, std diff), the baseline
    mean and std of h at the center, and the applied control variate.
    """
    sighat = coeff_draws.sum(axis=1)
    sig0 = basis.constant_sigma()
    if np.any(sighat <= 0.0) or sig0 <= 0.0:
        raise DomainError(
            "a redrawn flat volatility is not positive; epsilon or gamma too large "
            f"(min redraw = {sighat.min()})"
        )

    spots = ens.spots
    times = ens.times
    s_left = np.ascontiguousarray(spots[:, :-1])
    ln_s = np.log(s_left)
    ds = np.ascontiguousarray(np.diff(spots, axis=1))
    taus = payoff.maturity - times[:-1]
    phi = np.asarray(payoff.value(spots[:, -1]), dtype=float)

    lo = min(sighat.min(), sig0)
    hi = max(sighat.max(), sig0)
    pad = 0.05 * max(hi - lo, 1e-12 * sig0)
    nodes = _chebyshev_nodes(lo - pad, hi + pad, 12, center=sig0)
    bw = _barycentric_weights(nodes)

    if payoff.kind == "call":
        corr_lnk = corr_w = None
        v_nodes = kernels.call_hedge_sums(ln_s, ds, taus, nodes, payoff.strike)
    else:
        pos_nodes = nodes[nodes > 0]
        v_floor = (
            float(pos_nodes.min()) * math.sqrt(float(taus.min()))
            if pos_nodes.size
            else 1.0
        )
        corr_lnk, _, corr_w = softplus_correction_nodes(
            payoff.strike, payoff.kappa, v_floor
        )
        v_nodes = kernels.softplus_call_hedge_sums(
            s_left, ln_s, ds, taus, nodes, payoff.strike, payoff.kappa, corr_lnk, corr_w
        )
    v_t = np.ascontiguousarray(v_nodes.T)

    # Baseline at the center (an exact node, so no interpolation error).
    f_draws = _price_at_sigma(payoff, x0, sighat)
    f0 = float(_price_at_sigma(payoff, x0, np.array([sig0]))[0])
    w0 = _interp_weights(nodes, bw, np.array([sig0]))[0]
    base_pnl = f0 - phi + v_t @ w0
    base_h = np.asarray(h.value(base_pnl), dtype=float)
    weights = _interp_weights(nodes, bw, sighat)

    mean_h, std_h, mean_d, std_d = kernels.draw_stats(
        v_t, phi, weights, f_draws, base_h, h.h0, h.h1, h.h2
    )

    # Martingale control variate: the interpolant's curvature at sig0 picks
    # up the sampled (not averaged-out) curvature of the hedge-sum noise;
    # its exact mean is mu * int E[Delta'' S] dt, so subtracting the
    # centered sample value is mean-neutral and removes the systematic.
    cv = 0.0
    if h.h1 != 0.0:
        c_fun = _second_derivative_functional(nodes, sig0)
        mart = float(np.mean(v_t @ c_fun))
        drift_part = 0.0
        if mu != 0.0:
            w_t = np.empty_like(times)
            w_t[0] = 0.5 * (times[1] - times[0])
            w_t[-1] = 0.5 * (times[-1] - times[-2])
            w_t[1:-1] = 0.5 * (times[2:] - times[:-2])
            drift_weights = np.ascontiguousarray(w_t[:-1][None, :] * s_left)
            if payoff.kind == "call":
                v_drift = kernels.call_hedge_sums(
                    ln_s, drift_weights, taus, nodes, payoff.strike
                )
            else:
                v_drift = kernels.softplus_call_hedge_sums(
                    s_left, ln_s, drift_weights, taus, nodes,
                    payoff.strike, payoff.kappa, corr_lnk, corr_w,
                )
            drift_part = float(np.mean(v_drift.T @ c_fun))
        cv = mart - mu * drift_part
        delta_sig = sighat - sig0
        mean_d = mean_d - h.h1 * 0.5 * delta_sig * delta_sig * cv

    return mean_h, std_h, mean_d, std_d, float(base_h.mean()), float(base_h.std(ddof=1)), cv


def _run_general(basis, mu, x0, payoff, h, ens, coeff_draws):
    """Reference inner estimates: reprice and re-hedge per redraw.

    Cost grows as n_outer * n_paths * n_steps * cost(delta); intended for
    small studies and cross-checks, not production sizes.
    """
    base_pricer = pricer_for(payoff, basis)
    base_pnl = ensemble_pnls(ens, base_pricer, basis, payoff)
    base_h = np.asarray(h.value(base_pnl), dtype=float)
    n_outer = coeff_draws.shape[0]
    mean_h = np.empty(n_outer)
    std_h = np.empty(n_outer)
    mean_d = np.empty(n_outer)
    std_d = np.empty(n_outer)
    for k in range(n_outer):
        b = basis.with_coefficients(coeff_draws[k])
        pricer = pricer_for(payoff, b)
        pnl = ensemble_pnls(ens, pricer, b, payoff)
        hv = np.asarray(h.value(pnl), dtype=float)
        diff = hv - base_h
        mean_h[k] = hv.mean()
        std_h[k] = hv.std(ddof=1)
        mean_d[k] = diff.mean()
        std_d[k] = diff.std(ddof=1)
    return mean_h, std_h, mean_d, std_d, float(base_h.mean()), float(base_h.std(ddof=1))
