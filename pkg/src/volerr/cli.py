"""Command-line entry point.

Subcommands:

* quote         bid/mid/ask triples over a strike/maturity grid
* smile         implied-volatility smiles of the three quote sides
* estimate-law  bias/variance functionals of the hedging P&L by simulation
* validate      outer Monte Carlo check of the P&L expansion law
* simulate      raw hedging P&L of an estimated flat vol on true dynamics

Each subcommand reads one JSON config (``--config``), writes its
artifacts into ``--out`` (a JSON report, plus a CSV where the result is
tabular) and prints the JSON report to stdout (``--format csv`` prints
the CSV instead).  The JSON report embeds the fully resolved config, and
all output is deterministic for a fixed config: rerunning a command
reproduces the artifacts byte for byte.

Exit codes: 0 success; 1 domain or numerical failure; 2 bad usage,
unreadable config, or invalid input values; 3 validation ran but its
statistical checks failed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import traceback
from pathlib import Path

import numpy as np

from .error_calculus import UncertainParameter
from .errors import InsufficientGridError, InvalidInputError, VolerrError
from .lognormal import CallSpec, LognormalMarket, TotalVolUncertainty
from .payoffs import OptionSpec
from .quotes import RiskPolicy, quote_call
from .simulation import (
    SimulationConfig,
    TestFunctionJet,
    constant_vol,
    draws_csv,
    ensemble_pnls,
    estimate_law,
    pricer_for,
    simulate_paths,
    validate_expansion,
)
from .simulation.config import SCHEMES
from .surface import build_smile, smile_diagnostics, smile_to_csv

__all__ = ["main"]


class ConfigError(Exception):
    """A config file problem: unreadable, unparseable, or invalid fields."""


_MISSING = object()


def _section(cfg: dict, key: str, where: str = "config", required: bool = True) -> dict:
    val = cfg.get(key, _MISSING)
    if val is _MISSING:
        if required:
            raise ConfigError(f"{where}: missing required section '{key}'")
        return {}
    if not isinstance(val, dict):
        raise ConfigError(f"{where}.{key}: expected an object, got {type(val).__name__}")
    return val


def _num(d: dict, key: str, where: str, default=_MISSING) -> float:
    val = d.get(key, _MISSING)
    if val is _MISSING:
        if default is _MISSING:
            raise ConfigError(f"{where}: missing required number '{key}'")
        return default
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{where}.{key}: expected a number, got {val!r}")
    return float(val)


def _int(d: dict, key: str, where: str, default=_MISSING) -> int:
    val = d.get(key, _MISSING)
    if val is _MISSING:
        if default is _MISSING:
            raise ConfigError(f"{where}: missing required integer '{key}'")
        return default
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{where}.{key}: expected an integer, got {val!r}")
    return val


def _str(d: dict, key: str, where: str, default=_MISSING, choices=None) -> str:
    val = d.get(key, _MISSING)
    if val is _MISSING:
        if default is _MISSING:
            raise ConfigError(f"{where}: missing required string '{key}'")
        return default
    if not isinstance(val, str):
        raise ConfigError(f"{where}.{key}: expected a string, got {val!r}")
    if choices is not None and val not in choices:
        raise ConfigError(f"{where}.{key}: expected one of {choices}, got {val!r}")
    return val


def _num_list(d: dict, key: str, where: str) -> list[float]:
    val = d.get(key, _MISSING)
    if val is _MISSING:
        raise ConfigError(f"{where}: missing required array '{key}'")
    if not isinstance(val, list) or not val:
        raise ConfigError(f"{where}.{key}: expected a non-empty array of numbers")
    out = []
    for i, x in enumerate(val):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ConfigError(f"{where}.{key}[{i}]: expected a number, got {x!r}")
        out.append(float(x))
    return out


def _no_extra(d: dict, allowed: set[str], where: str) -> None:
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigError(f"{where}: unknown keys {extra}; allowed keys are {sorted(allowed)}")


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return cfg


def _jsonable(x):
    """Recursively convert to plain JSON types; non-finite floats to None."""
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        f = float(x)
        return f if math.isfinite(f) else None
    return x


def _dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, allow_nan=False) + "\n"


def _write(out_dir: Path, name: str, text: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text)


def _emit(args, report_json: str, csv_text: str | None) -> None:
    if args.format == "csv" and csv_text is not None:
        sys.stdout.write(csv_text)
    else:
        sys.stdout.write(report_json)


# ---------------------------------------------------------------------------
# shared config fragments


def _parse_market(cfg: dict) -> tuple[LognormalMarket, dict]:
    sec = _section(cfg, "market")
    _no_extra(sec, {"spot", "sigma0", "mu"}, "market")
    spot = _num(sec, "spot", "market")
    sigma0 = _num(sec, "sigma0", "market")
    mu = _num(sec, "mu", "market", default=0.0)
    return LognormalMarket(spot=spot, sigma0=sigma0, mu=mu), {
        "spot": spot,
        "sigma0": sigma0,
        "mu": mu,
    }


def _parse_policy(cfg: dict) -> tuple[RiskPolicy, dict]:
    sec = _section(cfg, "policy")
    _no_extra(sec, {"alpha", "quantile_mode"}, "policy")
    alpha = _num(sec, "alpha", "policy")
    mode = _str(sec, "quantile_mode", "policy", default="gaussian",
                choices=("gaussian", "chebyshev"))
    return RiskPolicy(alpha=alpha, quantile_mode=mode), {
        "alpha": alpha,
        "quantile_mode": mode,
    }


def _one_uncertainty(sec: dict, where: str) -> tuple[dict, str]:
    _no_extra(sec, {"gamma", "bias", "epsilon", "units"}, where)
    units = _str(sec, "units", where, default="sigma", choices=("sigma", "total_vol"))
    parsed = {
        "gamma": _num(sec, "gamma", where),
        "bias": _num(sec, "bias", where, default=0.0),
        "epsilon": _num(sec, "epsilon", where, default=1.0),
        "units": units,
    }
    return parsed, units


def _parse_uncertainties(cfg: dict, sigma0: float, maturities: list[float]):
    """Per-maturity total-vol uncertainties from the 'uncertainty' section.

    Either one object applied to every maturity or an array aligned with
    the maturities.  'units': 'sigma' states gamma/bias on the annualised
    volatility (converted per maturity); 'total_vol' states them on
    sigma0 * sqrt(T) directly.
    """
    raw = cfg.get("uncertainty", _MISSING)
    if raw is _MISSING:
        raise ConfigError("config: missing required section 'uncertainty'")

    def build(sec: dict, where: str) -> tuple[list[TotalVolUncertainty], dict]:
        parsed, units = _one_uncertainty(sec, where)
        if units == "sigma":
            u = UncertainParameter(value=sigma0, gamma=parsed["gamma"],
                                   bias=parsed["bias"], epsilon=parsed["epsilon"])
            return [TotalVolUncertainty.from_sigma(u, t) for t in maturities], parsed

        tv = TotalVolUncertainty(gamma=parsed["gamma"], bias=parsed["bias"],
                                 epsilon=parsed["epsilon"])
        return [tv for _ in maturities], parsed

    if isinstance(raw, dict):
        us, parsed = build(raw, "uncertainty")
        return us, parsed
    if isinstance(raw, list):
        if len(raw) != len(maturities):
            raise ConfigError(
                f"uncertainty: need one entry per maturity "
                f"({len(maturities)}), got {len(raw)}"
            )
        us, parsed = [], []
        for i, sec in enumerate(raw):
            if not isinstance(sec, dict):
                raise ConfigError(f"uncertainty[{i}]: expected an object")
            u_i, p_i = build(sec, f"uncertainty[{i}]")
            us.append(u_i[i])
            parsed.append(p_i)
        return us, parsed
    raise ConfigError("uncertainty: expected an object or an array of objects")


def _parse_grid(cfg: dict) -> tuple[list[float], list[float]]:
    return _num_list(cfg, "strikes", "config"), _num_list(cfg, "maturities", "config")


def _parse_payoff(cfg: dict) -> tuple[OptionSpec, dict]:
    sec = _section(cfg, "payoff")
    _no_extra(sec, {"kind", "strike", "maturity", "kappa"}, "payoff")
    kind = _str(sec, "kind", "payoff", choices=("call", "smoothed_call"))
    strike = _num(sec, "strike", "payoff")
    maturity = _num(sec, "maturity", "payoff")
    kappa = _num(sec, "kappa", "payoff", default=None) if "kappa" in sec else None
    payoff = OptionSpec(kind=kind, strike=strike, maturity=maturity, kappa=kappa)
    echo = {"kind": kind, "strike": strike, "maturity": maturity}
    if kappa is not None:
        echo["kappa"] = kappa
    return payoff, echo


def _parse_simulation(cfg: dict, horizon: float, seed_override) -> tuple[SimulationConfig, dict]:
    sec = _section(cfg, "simulation")
    _no_extra(sec, {"n_paths", "n_steps", "seed", "scheme"}, "simulation")
    n_paths = _int(sec, "n_paths", "simulation")
    n_steps = _int(sec, "n_steps", "simulation")
    seed = _int(sec, "seed", "simulation")
    if seed_override is not None:
        seed = seed_override
    scheme = _str(sec, "scheme", "simulation", default="exact_lognormal", choices=SCHEMES)
    sim = SimulationConfig(n_paths=n_paths, n_steps=n_steps, seed=seed,
                           horizon=horizon, scheme=scheme)
    return sim, {"n_paths": n_paths, "n_steps": n_steps, "seed": seed,
                 "scheme": scheme, "horizon": horizon}


def _parse_model(cfg: dict, require_uncertainty: bool):
    """The 'model' section of the simulation commands: flat true dynamics."""
    sec = _section(cfg, "model")
    _no_extra(sec, {"x0", "mu", "sigma0", "uncertainty"}, "model")
    x0 = _num(sec, "x0", "model")
    mu = _num(sec, "mu", "model", default=0.0)
    sigma0 = _num(sec, "sigma0", "model")
    echo = {"x0": x0, "mu": mu, "sigma0": sigma0}
    uncertainty = None
    if "uncertainty" in sec:
        usec = sec["uncertainty"]
        if not isinstance(usec, dict):
            raise ConfigError("model.uncertainty: expected an object")
        _no_extra(usec, {"gamma", "bias", "epsilon"}, "model.uncertainty")
        uncertainty = UncertainParameter(
            value=sigma0,
            gamma=_num(usec, "gamma", "model.uncertainty"),
            bias=_num(usec, "bias", "model.uncertainty", default=0.0),
            epsilon=_num(usec, "epsilon", "model.uncertainty", default=1.0),
        )
        echo["uncertainty"] = {
            "gamma": uncertainty.gamma,
            "bias": uncertainty.bias,
            "epsilon": uncertainty.epsilon,
        }
    elif require_uncertainty:
        raise ConfigError("model: missing required section 'uncertainty'")
    basis = constant_vol(sigma0, uncertainty=uncertainty)
    return basis, x0, mu, echo


def _parse_test_function(cfg: dict) -> tuple[TestFunctionJet, dict]:
    sec = _section(cfg, "test_function", required=False)
    _no_extra(sec, {"h0", "h1", "h2"}, "test_function")
    h0 = _num(sec, "h0", "test_function", default=0.0)
    h1 = _num(sec, "h1", "test_function", default=1.0)
    h2 = _num(sec, "h2", "test_function", default=0.0)
    return TestFunctionJet(h0=h0, h1=h1, h2=h2), {"h0": h0, "h1": h1, "h2": h2}


# ---------------------------------------------------------------------------
# subcommands


def _cmd_quote(args) -> int:
    cfg = _load_config(args.config)
    _no_extra(cfg, {"market", "strikes", "maturities", "uncertainty", "policy"}, "config")
    market, m_echo = _parse_market(cfg)
    strikes, maturities = _parse_grid(cfg)
    us, u_echo = _parse_uncertainties(cfg, market.sigma0, maturities)
    policy, p_echo = _parse_policy(cfg)

    rows = []
    for i, t in enumerate(maturities):
        for k in strikes:
            q = quote_call(market, CallSpec(strike=k, maturity=t), us[i], policy)
            rows.append({
                "strike": k,
                "maturity": t,
                "fair": q.fair,
                "bias_component": q.bias_component,
                "spread_component": q.spread_component,
                "bid": q.bid,
                "mid": q.mid,
                "ask": q.ask,
                "below_intrinsic": q.below_intrinsic,
            })

    report = {
        "command": "quote",
        "config": {
            "market": m_echo,
            "strikes": strikes,
            "maturities": maturities,
            "uncertainty": u_echo,
            "policy": p_echo,
        },
        "quotes": rows,
    }
    cols = ("strike", "maturity", "fair", "bias_component",
            "spread_component", "bid", "mid", "ask")
    lines = [",".join(cols)]
    for row in rows:
        lines.append(",".join(repr(float(row[c])) for c in cols))
    csv_text = "\n".join(lines) + "\n"

    report_json = _dump_json(report)
    out = Path(args.out)
    _write(out, "quote.json", report_json)
    _write(out, "quote.csv", csv_text)
    _emit(args, report_json, csv_text)
    return 0


def _cmd_smile(args) -> int:
    cfg = _load_config(args.config)
    _no_extra(cfg, {"market", "strikes", "maturities", "uncertainty", "policy"}, "config")
    market, m_echo = _parse_market(cfg)
    strikes, maturities = _parse_grid(cfg)
    us, u_echo = _parse_uncertainties(cfg, market.sigma0, maturities)
    policy, p_echo = _parse_policy(cfg)

    grids = {
        side: build_smile(market, us, policy, strikes, maturities, source=side)
        for side in ("bid", "mid", "ask")
    }
    try:
        d = smile_diagnostics(grids["mid"], market)
        diag = {
            "maturities": list(d.maturities),
            "atm_curvatures": list(d.atm_curvatures),
            "curvature_floor": d.curvature_floor,
            "convex": list(d.convex),
            "curvature_decreasing": d.curvature_decreasing,
            "verdict": d.verdict,
        }
    except InsufficientGridError as e:
        diag = {"error": str(e)}

    report = {
        "command": "smile",
        "config": {
            "market": m_echo,
            "strikes": strikes,
            "maturities": maturities,
            "uncertainty": u_echo,
            "policy": p_echo,
        },
        "smiles": {side: grids[side].to_jsonable() for side in ("bid", "mid", "ask")},
        "diagnostics": diag,
    }
    csv_text = smile_to_csv(grids["bid"], grids["mid"], grids["ask"])

    report_json = _dump_json(report)
    out = Path(args.out)
    _write(out, "smile.json", report_json)
    _write(out, "smile.csv", csv_text)
    _emit(args, report_json, csv_text)
    return 0


def _cmd_estimate_law(args) -> int:
    cfg = _load_config(args.config)
    # A validate config is a superset; accept it and ignore its extra section.
    _no_extra(cfg, {"model", "payoff", "test_function", "simulation", "bump_rel",
                    "validation"}, "config")
    basis, x0, mu, m_echo = _parse_model(cfg, require_uncertainty=True)
    payoff, pay_echo = _parse_payoff(cfg)
    h, h_echo = _parse_test_function(cfg)
    sim, s_echo = _parse_simulation(cfg, payoff.maturity, args.seed)
    bump_rel = _num(cfg, "bump_rel", "config", default=1e-3)

    est = estimate_law(basis, basis, mu, x0, payoff, h, sim, bump_rel=bump_rel)
    report = {
        "command": "estimate-law",
        "config": {
            "model": m_echo,
            "payoff": pay_echo,
            "test_function": h_echo,
            "simulation": s_echo,
            "bump_rel": bump_rel,
        },
        "law": {
            "lambda1": est.lambda1,
            "lambda1_stderr": est.lambda1_stderr,
            "lambda2": est.lambda2,
            "lambda2_stderr": est.lambda2_stderr,
            "psi": est.psi,
            "psi_stderr": est.psi_stderr,
            "bias": est.bias,
            "bias_stderr": est.bias_stderr,
            "variance": est.variance,
            "variance_stderr": est.variance_stderr,
            "n_batches": est.n_batches,
        },
    }
    report_json = _dump_json(report)
    _write(Path(args.out), "law.json", report_json)
    _emit(args, report_json, None)
    return 0


def _cmd_validate(args) -> int:
    cfg = _load_config(args.config)
    _no_extra(
        cfg,
        {"model", "payoff", "test_function", "simulation", "bump_rel", "validation"},
        "config",
    )
    basis, x0, mu, m_echo = _parse_model(cfg, require_uncertainty=True)
    payoff, pay_echo = _parse_payoff(cfg)
    h, h_echo = _parse_test_function(cfg)
    sim, s_echo = _parse_simulation(cfg, payoff.maturity, args.seed)
    bump_rel = _num(cfg, "bump_rel", "config", default=1e-3)

    vsec = _section(cfg, "validation")
    _no_extra(vsec, {"n_outer", "tolerance_sigmas", "chebyshev_ks"}, "validation")
    n_outer = _int(vsec, "n_outer", "validation")
    tol_sig = _num(vsec, "tolerance_sigmas", "validation", default=3.0)
    ks = vsec.get("chebyshev_ks", [1.0, 2.0, 3.0])
    if not isinstance(ks, list) or not all(
        isinstance(k, (int, float)) and not isinstance(k, bool) for k in ks
    ):
        raise ConfigError("validation.chebyshev_ks: expected an array of numbers")
    ks = [float(k) for k in ks]

    report_obj = validate_expansion(
        basis, mu, x0, payoff, h, sim, n_outer,
        tolerance_sigmas=tol_sig, chebyshev_ks=tuple(ks),
        bump_rel=bump_rel,
    )
    report = {
        "command": "validate",
        "config": {
            "model": m_echo,
            "payoff": pay_echo,
            "test_function": h_echo,
            "simulation": s_echo,
            "bump_rel": bump_rel,
            "validation": {
                "n_outer": n_outer,
                "tolerance_sigmas": tol_sig,
                "chebyshev_ks": ks,
            },
        },
    }
    report.update(report_obj.to_jsonable(include_draws=False))
    csv_text = draws_csv(report_obj)

    report_json = _dump_json(report)
    out = Path(args.out)
    _write(out, "validation.json", report_json)
    _write(out, "draws.csv", csv_text)
    _emit(args, report_json, csv_text)
    if not report_obj.passed:
        print("validation failed: empirical law outside tolerance", file=sys.stderr)
        return 3
    return 0


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    _no_extra(cfg, {"model", "hedge", "payoff", "simulation"}, "config")
    basis, x0, mu, m_echo = _parse_model(cfg, require_uncertainty=False)
    payoff, pay_echo = _parse_payoff(cfg)
    sim, s_echo = _parse_simulation(cfg, payoff.maturity, args.seed)

    hsec = _section(cfg, "hedge", required=False)
    _no_extra(hsec, {"sigma0"}, "hedge")
    hedge_sigma0 = _num(hsec, "sigma0", "hedge", default=m_echo["sigma0"])
    hedge_basis = constant_vol(hedge_sigma0)

    ens = simulate_paths(basis, mu, x0, sim)
    pricer = pricer_for(payoff, hedge_basis)
    pnls = ensemble_pnls(ens, pricer, hedge_basis, payoff)

    qs = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99]
    quantiles = np.quantile(pnls, qs)
    report = {
        "command": "simulate",
        "config": {
            "model": m_echo,
            "hedge": {"sigma0": hedge_sigma0},
            "payoff": pay_echo,
            "simulation": s_echo,
        },
        "pnl": {
            "n_paths": int(pnls.size),
            "mean": float(pnls.mean()),
            "std": float(pnls.std(ddof=1)) if pnls.size > 1 else 0.0,
            "stderr": float(pnls.std(ddof=1) / math.sqrt(pnls.size)) if pnls.size > 1 else 0.0,
            "min": float(pnls.min()),
            "max": float(pnls.max()),
            "quantiles": {repr(q): float(v) for q, v in zip(qs, quantiles)},
        },
    }
    lines = ["path,pnl"]
    lines.extend(f"{i},{float(p)!r}" for i, p in enumerate(pnls))
    csv_text = "\n".join(lines) + "\n"

    report_json = _dump_json(report)
    out = Path(args.out)
    _write(out, "simulate.json", report_json)
    _write(out, "pnl_paths.csv", csv_text)
    _emit(args, report_json, csv_text)
    return 0


# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="volerr",
        description="Option quotes, smiles and P&L-law checks under parameter uncertainty.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = (
        ("quote", _cmd_quote, "bid/mid/ask quotes over a strike/maturity grid"),
        ("smile", _cmd_smile, "implied-volatility smiles of bid, mid and ask"),
        ("estimate-law", _cmd_estimate_law, "estimate the P&L bias/variance functionals"),
        ("validate", _cmd_validate, "outer Monte Carlo validation of the P&L law"),
        ("simulate", _cmd_simulate, "hedging P&L simulation under a fixed estimate"),
    )
    for name, fn, help_text in specs:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON config file")
        p.add_argument("--out", default=".", help="directory for output artifacts")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config's simulation seed")
        p.add_argument("--format", choices=("json", "csv"), default="json",
                       help="what to print on stdout (files are always written)")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except InvalidInputError as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return 2
    except VolerrError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
