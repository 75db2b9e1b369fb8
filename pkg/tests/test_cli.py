import json
import subprocess
import sys

import pytest

QUOTE_CFG = {
    "market": {"spot": 100.0, "sigma0": 0.2},
    "strikes": [90.0, 100.0, 110.0],
    "maturities": [0.5, 1.0],
    "uncertainty": {"gamma": 0.02, "bias": 0.005, "epsilon": 1e-4, "units": "sigma"},
    "policy": {"alpha": 0.05, "quantile_mode": "gaussian"},
}

SMILE_CFG = {
    "market": {"spot": 100.0, "sigma0": 0.2},
    "strikes": [96.0, 98.0, 100.0, 102.0, 104.0],
    "maturities": [0.25, 1.0],
    "uncertainty": {"gamma": 0.01, "epsilon": 1e-4, "units": "total_vol"},
    "policy": {"alpha": 0.05, "quantile_mode": "gaussian"},
}

VALIDATE_CFG = {
    "model": {"x0": 100.0, "mu": 0.0, "sigma0": 0.2,
              "uncertainty": {"gamma": 0.01, "bias": 0.0, "epsilon": 1e-4}},
    "payoff": {"kind": "smoothed_call", "strike": 100.0, "maturity": 1.0, "kappa": 0.5},
    "test_function": {"h0": 0.0, "h1": 1.0, "h2": 0.0},
    "simulation": {"n_paths": 3000, "n_steps": 32, "seed": 99},
    "validation": {"n_outer": 1000},
}

SIMULATE_CFG = {
    "model": {"x0": 100.0, "mu": 0.0, "sigma0": 0.2},
    "hedge": {"sigma0": 0.22},
    "payoff": {"kind": "call", "strike": 100.0, "maturity": 1.0},
    "simulation": {"n_paths": 500, "n_steps": 32, "seed": 5},
}


def run_cli(*argv):
    return subprocess.run(
        [sys.executable, "-m", "volerr.cli", *argv],
        capture_output=True, text=True,
    )


def write_cfg(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def test_quote_writes_consistent_artifacts(tmp_path):
    cfg = write_cfg(tmp_path, QUOTE_CFG)
    out = tmp_path / "out"
    r = run_cli("quote", "--config", cfg, "--out", str(out))
    assert r.returncode == 0, r.stderr
    report = json.loads(r.stdout)
    assert report["command"] == "quote"
    assert (out / "quote.json").read_text() == r.stdout
    lines = (out / "quote.csv").read_text().strip().split("\n")
    assert lines[0] == "strike,maturity,fair,bias_component,spread_component,bid,mid,ask"
    assert len(lines) == 1 + len(QUOTE_CFG["strikes"]) * len(QUOTE_CFG["maturities"])
    for row, line in zip(report["quotes"], lines[1:]):
        fields = [float(x) for x in line.split(",")]
        assert fields[5] == row["bid"] and fields[6] == row["mid"] and fields[7] == row["ask"]
        assert row["bid"] < row["mid"] < row["ask"]


def test_smile_reports_diagnostics(tmp_path):
    cfg = write_cfg(tmp_path, SMILE_CFG)
    out = tmp_path / "out"
    r = run_cli("smile", "--config", cfg, "--out", str(out))
    assert r.returncode == 0, r.stderr
    report = json.loads(r.stdout)
    assert report["diagnostics"]["verdict"] == "convex_decreasing"
    assert (out / "smile.csv").exists()
    assert set(report["smiles"]) == {"bid", "mid", "ask"}


def test_estimate_law_accepts_a_validate_config(tmp_path):
    cfg_dict = dict(VALIDATE_CFG)
    cfg_dict["simulation"] = {"n_paths": 1000, "n_steps": 16, "seed": 4}
    cfg = write_cfg(tmp_path, cfg_dict)
    out = tmp_path / "out"
    r = run_cli("estimate-law", "--config", cfg, "--out", str(out))
    assert r.returncode == 0, r.stderr
    report = json.loads((out / "law.json").read_text())
    law = report["law"]
    assert law["lambda2"] > 0.0 and law["psi"] > 0.0
    assert law["variance"] == law["psi"]  # h1 = 1


def test_validate_passes_and_reruns_byte_identically(tmp_path):
    cfg = write_cfg(tmp_path, VALIDATE_CFG)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    r1 = run_cli("validate", "--config", cfg, "--out", str(out1))
    assert r1.returncode == 0, r1.stderr
    report = json.loads(r1.stdout)
    assert report["checks"]["passed"] is True
    header = (out1 / "draws.csv").read_text().split("\n", 1)[0]
    assert header == "draw,sigma0,inner_mean,inner_stderr"

    r2 = run_cli("validate", "--config", cfg, "--out", str(out2))
    assert r2.returncode == 0
    assert (out1 / "validation.json").read_bytes() == (out2 / "validation.json").read_bytes()
    assert (out1 / "draws.csv").read_bytes() == (out2 / "draws.csv").read_bytes()


def test_validate_csv_format_prints_draws(tmp_path):
    cfg_dict = dict(VALIDATE_CFG)
    cfg_dict["simulation"] = {"n_paths": 300, "n_steps": 8, "seed": 4}
    cfg = write_cfg(tmp_path, cfg_dict)
    r = run_cli("validate", "--config", cfg, "--out", str(tmp_path / "o"),
                "--format", "csv")
    assert r.returncode in (0, 3)
    assert r.stdout.startswith("draw,sigma0,inner_mean,inner_stderr")


def test_validate_statistical_failure_exits_3(tmp_path):
    cfg_dict = json.loads(json.dumps(VALIDATE_CFG))
    cfg_dict["simulation"] = {"n_paths": 500, "n_steps": 8, "seed": 4}
    cfg_dict["validation"] = {"n_outer": 1000, "tolerance_sigmas": 1e-6}
    cfg = write_cfg(tmp_path, cfg_dict)
    r = run_cli("validate", "--config", cfg, "--out", str(tmp_path / "o"))
    assert r.returncode == 3
    assert "validation failed" in r.stderr
    # artifacts are still written for inspection
    assert (tmp_path / "o" / "validation.json").exists()


def test_seed_override_changes_the_run(tmp_path):
    cfg = write_cfg(tmp_path, SIMULATE_CFG)
    base = run_cli("simulate", "--config", cfg, "--out", str(tmp_path / "o1"))
    same = run_cli("simulate", "--config", cfg, "--out", str(tmp_path / "o2"),
                   "--seed", "5")
    other = run_cli("simulate", "--config", cfg, "--out", str(tmp_path / "o3"),
                    "--seed", "6")
    assert base.returncode == same.returncode == other.returncode == 0
    assert base.stdout == same.stdout
    mean_base = json.loads(base.stdout)["pnl"]["mean"]
    mean_other = json.loads(other.stdout)["pnl"]["mean"]
    assert mean_base != mean_other


def test_simulate_writes_per_path_csv(tmp_path):
    cfg = write_cfg(tmp_path, SIMULATE_CFG)
    out = tmp_path / "out"
    r = run_cli("simulate", "--config", cfg, "--out", str(out))
    assert r.returncode == 0, r.stderr
    lines = (out / "pnl_paths.csv").read_text().strip().split("\n")
    assert lines[0] == "path,pnl"
    assert len(lines) == 1 + SIMULATE_CFG["simulation"]["n_paths"]
    report = json.loads(r.stdout)
    assert report["pnl"]["mean"] == pytest.approx(0.79, abs=0.15)


@pytest.mark.parametrize(
    "mangle",
    [
        lambda c: c.update({"rogue": 1}),
        lambda c: c.pop("model"),
        lambda c: c["validation"].update({"n_quad": 80}),
        lambda c: c["validation"].update({"n_outer": 10}),
        lambda c: c["payoff"].update({"kind": "put"}),
        lambda c: c["simulation"].update({"n_paths": "many"}),
    ],
    ids=["extra-top-key", "missing-model", "unknown-validation-key",
         "n-outer-too-small", "bad-payoff-kind", "non-integer-paths"],
)
def test_bad_configs_exit_2(tmp_path, mangle):
    cfg_dict = json.loads(json.dumps(VALIDATE_CFG))
    mangle(cfg_dict)
    cfg = write_cfg(tmp_path, cfg_dict)
    r = run_cli("validate", "--config", cfg, "--out", str(tmp_path / "o"))
    assert r.returncode == 2
    assert r.stderr.strip()


def test_unreadable_and_malformed_configs_exit_2(tmp_path):
    r = run_cli("quote", "--config", str(tmp_path / "nope.json"),
                "--out", str(tmp_path / "o"))
    assert r.returncode == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    r2 = run_cli("quote", "--config", str(bad), "--out", str(tmp_path / "o"))
    assert r2.returncode == 2
