import csv
import json
import textwrap
from pathlib import Path

import pytest

from cdcsim import cli
from cdcsim.io import sha256_file


def write_ini(path, body):
    path.write_text(textwrap.dedent(body).lstrip())
    return path


BASE = """
[scheme]
alpha = calibrate

[economics]
model = {model}

[run]
seed = 1
n_scenarios = {n}

[experiment]
spec_version = 1
kind = {kind}
{extra}
"""


def config(tmp_path, kind, model="constant", n=20, extra=""):
    return write_ini(tmp_path / f"{kind}.ini", BASE.format(kind=kind, model=model, n=n, extra=extra))


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("body, needle", [
    ("[scheme]\nbogus = 1\n[run]\nseed = 1\n[experiment]\nspec_version = 1\n", ":2: [scheme] bogus"),
    ("[run]\nseed = 1\n[experiment]\nspec_version = 2\n", ":4: [experiment] spec_version"),
    ("[experiment]\nspec_version = 1\n", "missing required key 'seed'"),
    ("[run]\nseed = 1\nhorizon = 50\n[experiment]\nspec_version = 1\n", ":3: [run] horizon"),
    ("[scheme]\nstrategy = derived\n[run]\nseed = 1\n[experiment]\nspec_version = 1\n", ":2: [scheme] strategy"),
    ("[economics]\ncpi = abc\n[run]\nseed = 1\n[experiment]\nspec_version = 1\n", ":2: [economics] cpi"),
    ("[mortality]\nsource = file\npath = nowhere.csv\n[run]\nseed = 1\n[experiment]\nspec_version = 1\n",
     ":3: [mortality] path"),
])
def test_config_errors_name_the_line(tmp_path, capsys, body, needle):
    path = write_ini(tmp_path / "bad.ini", body)
    assert cli.main(["steady_state", "--config", str(path), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert needle in err and str(path) in err


def test_kind_mismatch_is_a_config_error(tmp_path):
    path = config(tmp_path, "shock")
    assert cli.main(["simulate", "--config", str(path), "--out", str(tmp_path / "o")]) == 2


def test_stochastic_experiment_needs_black_scholes(tmp_path):
    path = config(tmp_path, "compare")
    assert cli.main(["compare", "--config", str(path), "--out", str(tmp_path / "o")]) == 2


def test_seed_override_fills_missing_seed(tmp_path):
    path = write_ini(tmp_path / "s.ini", "[experiment]\nspec_version = 1\n")
    assert cli.load_config(path, seed=4).seed == 4


def test_steady_state_outputs(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["steady_state", "--config", str(config(tmp_path, "steady_state")), "--out", str(out)]) == 0
    rows = {r["method"]: float(r["alpha"]) for r in read_rows(out / "alpha.csv")}
    assert rows["closed_form"] == pytest.approx(rows["recursive"], rel=1e-10)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["experiment"] == "steady_state" and manifest["seed"] == 1
    for entry in manifest["files"]:
        assert sha256_file(out / entry["file"]) == entry["sha256"]
    assert {e["file"] for e in manifest["files"]} == {"alpha.csv", "steady_state_summary.csv",
                                                      "steady_state_ledger.csv"}


def test_shock_outputs(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["shock", "--config", str(config(tmp_path, "shock")), "--out", str(out)]) == 0
    rows = read_rows(out / "shock.csv")
    assert [float(r["shock"]) for r in rows] == [0.1, -0.1]
    assert float(rows[0]["h_after"]) > 0.0 > float(rows[1]["h_after"])


def test_simulate_writes_fans_and_summary(tmp_path):
    out = tmp_path / "o"
    path = config(tmp_path, "simulate", model="black_scholes", n=12, extra="generations = 40,60")
    assert cli.main(["simulate", "--config", str(path), "--out", str(out)]) == 0
    names = {p.name for p in out.iterdir()}
    assert {"fund_trace.csv", "fan_h.csv", "income_g40.csv", "fan_income_g60.csv", "generation_summary.csv",
            "manifest.json"} <= names
    summary = read_rows(out / "generation_summary.csv")
    assert [int(r["generation"]) for r in summary] == [40, 60]


def test_same_seed_same_bytes_new_seed_new_bytes(tmp_path):
    path = config(tmp_path, "simulate", model="black_scholes", n=12)
    digests = []
    for name, seed in (("a", "1"), ("b", "1"), ("c", "2")):
        assert cli.main(["simulate", "--config", str(path), "--out", str(tmp_path / name), "--seed", seed]) == 0
        digests.append(sha256_file(tmp_path / name / "fund_trace.csv"))
    assert digests[0] == digests[1] != digests[2]


def test_validate_small_run_passes(tmp_path, capsys):
    path = config(tmp_path, "validate", model="black_scholes", extra="validation_scenarios = 200")
    out = tmp_path / "o"
    assert cli.main(["validate", "--config", str(path), "--out", str(out)]) == 0
    rows = read_rows(out / "validation.csv")
    assert [r["check"] for r in rows] == ["i", "ii", "iii", "iv", "v", "vi", "viii", "ix"]
    assert all(r["passed"] == "true" for r in rows)
    assert capsys.readouterr().out.count("PASS") == 8


def test_failed_check_exits_one(tmp_path, monkeypatch):
    failing = cli.Check("i", "forced failure", False, 1.0, 0.0)
    monkeypatch.setattr(cli, "_check_target_lock", lambda cfg: failing)
    path = config(tmp_path, "validate", model="black_scholes", extra="validation_scenarios = 50")
    assert cli.main(["validate", "--config", str(path), "--out", str(tmp_path / "o")]) == 1


@pytest.mark.parametrize("name", ["paper_defaults", "steady_state", "multi_employer", "pnl_surface", "compare",
                                  "validate", "shock"])
def test_bundled_configs_load(name):
    cfg = cli.load_config(Path(__file__).parents[1] / "configs" / f"{name}.ini")
    assert cfg.get("experiment", "kind") in cli.EXPERIMENTS
