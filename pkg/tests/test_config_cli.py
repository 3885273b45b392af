import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import CONFIGS, random_spec
from regime_ruin.cli import format_report, main, parse_grid, Report
from regime_ruin.config import RunConfig, emit_config, parse_config, parse_text
from regime_ruin.errors import MonotonePremium, ParseError, ValidationError
from regime_ruin.model import ClaimDist
from regime_ruin.simulate import SimConfig

VALID = sorted(CONFIGS.glob("*.toml"))
POWER_TAIL = [p for p in VALID if p.stem != "ruin_certain"]

MINIMAL = """\
[model]
K = 2
lambda = [-1.0, 1.0, 1.0, -1.0]
a = [1.0, 1.5]
sigma = [1.0, 1.0]
c = 1.0
initial_state = 0

[claims]
alpha1 = 1.0
f1_kind = "exponential"
f1_params = [1.0]
"""


def test_bundled_configs_parse():
    assert len(VALID) >= 4
    for path in VALID:
        cfg = parse_config(path)
        assert cfg.model.K >= 2 and cfg.source == str(path)


def test_minimal_file_defaults():
    cfg = parse_text(MINIMAL)
    assert cfg.model.K == 2 and cfg.model.alpha2 == 0.0 and cfg.model.F2 is None
    assert cfg.sim == SimConfig()


def test_lambda_length_mismatch():
    with pytest.raises(ParseError) as exc:
        parse_text(MINIMAL.replace("[-1.0, 1.0, 1.0, -1.0]", "[-1.0, 1.0, 1.0]"))
    assert exc.value.line == 3


def test_unknown_key_strict():
    text = MINIMAL.replace("c = 1.0\n", "c = 1.0\nmu = 0.3\n")
    with pytest.raises(ParseError) as exc:
        parse_text(text)
    assert exc.value.line == 7 and "mu" in str(exc.value)


@pytest.mark.parametrize("text", [
    MINIMAL + "[extra]\nx = 1\n",
    MINIMAL.replace('"exponential"', '"lognormal"'),
    MINIMAL.replace("K = 2", "K = 2.0"),
    MINIMAL.replace("c = 1.0", 'c = "one"'),
    MINIMAL.replace("f1_params = [1.0]\n", ""),
    MINIMAL.replace("f1_params = [1.0]", "f1_params = [-1.0]"),
    MINIMAL.replace("initial_state = 0\n", ""),
    MINIMAL + "[sim]\nproduct_cutoff = 2.0\n",
    MINIMAL + "[sim]\nn_paths = 1.5\n",
    "[model\nK = 2\n",
])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_text(text)


def test_toml_syntax_error_has_line():
    with pytest.raises(ParseError) as exc:
        parse_text(MINIMAL.replace("c = 1.0", "c = = 1.0"))
    assert exc.value.line == 6


def test_validation_error_wraps_model_error():
    with pytest.raises(ValidationError) as exc:
        parse_config(CONFIGS / "invalid" / "monotone_premium.toml")
    assert isinstance(exc.value.cause, MonotonePremium)


def test_missing_file():
    with pytest.raises(ParseError):
        parse_config(CONFIGS / "nope.toml")


@pytest.mark.parametrize("path", VALID, ids=lambda p: p.stem)
def test_bundled_round_trip(path):
    cfg = parse_config(path)
    again = parse_text(emit_config(cfg))
    assert again.model == cfg.model and again.sim == cfg.sim


claims = st.sampled_from([
    ClaimDist.exponential(0.7), ClaimDist.pareto(2.5, 0.3), ClaimDist.deterministic(1.1),
    ClaimDist.empirical([0.4, 0.1, 2.0]),
])


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**31), claims, claims,
       st.floats(0.0, 3.0), st.one_of(st.none(), st.floats(1e-4, 1.0)), st.integers(0, 2**40))
def test_round_trip_property(K, seed, F1, F2, alpha2, step, sim_seed):
    spec = random_spec(np.random.default_rng(seed), K)
    from dataclasses import replace
    spec = replace(spec, F1=F1, alpha2=alpha2, F2=F2 if alpha2 > 0 else None,
                   initial_state=seed % K)
    cfg = RunConfig(spec, SimConfig(quad_step=step, seed=sim_seed))
    again = parse_text(emit_config(cfg))
    assert again.model == cfg.model and again.sim == cfg.sim


def test_parse_grid():
    assert parse_grid("0:1:3").tolist() == [0.0, 0.5, 1.0]
    assert parse_grid("1:100:3", log=True).tolist() == pytest.approx([1.0, 10.0, 100.0])
    assert parse_grid("1:2:0").size == 0
    for bad in ("1:2", "2:1:3", "a:b:c"):
        with pytest.raises(ValueError):
            parse_grid(bad)
    with pytest.raises(ValueError):
        parse_grid("0:1:3", log=True)


# ---------------------------------------------------------------- CLI

def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_cli_gamma_sqrt2(capsys):
    code, out, err = run_cli(capsys, "gamma", CONFIGS / "asymmetric_k2.toml")
    assert code == 0 and err == ""
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["state", "gamma", "upsilon_at_gamma", "iterations", "epsilon_margin"]
    assert abs(float(rows[0]["gamma"]) - math.sqrt(2.0)) < 1e-9
    assert round(float(rows[0]["gamma"]), 10) == 1.4142135624


def test_cli_gamma_json_keys(capsys):
    code, out, _ = run_cli(capsys, "gamma", CONFIGS / "asymmetric_k2.toml", "--format", "json")
    data = json.loads(out)
    assert list(data[0]) == ["state", "gamma", "bracket_lo", "bracket_hi", "iterations",
                             "epsilon_margin"]


def test_cli_validate(capsys):
    code, out, _ = run_cli(capsys, "validate", CONFIGS / "three_regimes.toml")
    assert code == 0
    data = json.loads(out)
    assert data["regime"] == "PowerTail" and data["K"] == 3 and len(data["rows"]) == 3


def test_cli_validate_monotone_premium(capsys):
    code, out, err = run_cli(capsys, "validate", CONFIGS / "invalid" / "monotone_premium.toml")
    assert code == 1 and out == "" and "MonotonePremium" in err


def test_cli_bad_config(capsys, tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text(MINIMAL.replace("c = 1.0", "c = 1.0\nmu = 2"))
    code, out, err = run_cli(capsys, "validate", bad)
    assert code == 1 and out == "" and "line 7" in err


def test_cli_regime_mismatch(capsys):
    code, out, err = run_cli(capsys, "gamma", CONFIGS / "ruin_certain.toml")
    assert code == 1 and out == "" and "NotPowerTail" in err


def test_cli_upsilon(capsys):
    code, out, _ = run_cli(capsys, "upsilon", CONFIGS / "asymmetric_k2.toml", "--q-grid", "0:3:4")
    lines = out.splitlines()
    assert lines[0] == "q,value,finite"
    assert lines[1] == "0,1,true"
    assert lines[-1] == "3,inf,false"


def test_cli_tail_empty_grid(capsys, tmp_path):
    target = tmp_path / "tail.csv"
    code, out, _ = run_cli(capsys, "tail", CONFIGS / "symmetric_k2.toml", "--u-grid", "1:10:0",
                           "--n-paths", "100", "-o", target)
    assert code == 0 and out == ""
    assert target.read_text() == "u,gbar,ci_halfwidth,psi_lower,psi_upper\n"


def test_cli_tail_runtime_error(capsys):
    code, out, err = run_cli(capsys, "tail", CONFIGS / "symmetric_k2.toml", "--u-grid",
                             "1e12:1e13:3", "--n-paths", "50")
    assert code == 3 and out == "" and "DegenerateTail" in err


def test_cli_ruin(capsys):
    code, out, _ = run_cli(capsys, "ruin", CONFIGS / "asymmetric_k2.toml", "--u", "1",
                           "--horizon", "5", "--n-paths", "200")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and len(rows) == 1 and 0.0 <= float(rows[0]["psi_hat"]) <= 1.0


def test_cli_bad_override(capsys):
    code, _, err = run_cli(capsys, "ruin", CONFIGS / "asymmetric_k2.toml", "--u", "1",
                           "--workers", "0")
    assert code == 1


def test_cli_verify_small_deterministic(capsys):
    args = ("verify", CONFIGS / "asymmetric_k2.toml", "--n-paths", "1500", "--seed", "3")
    c1, out1, _ = run_cli(capsys, *args)
    c2, out2, _ = run_cli(capsys, *args, "--workers", "2")
    assert out1 == out2 and c1 in (0, 2)
    report = json.loads(out1)
    assert report["seed"] == 3 and report["all_passed"] == (c1 == 0)
    names = [r["check"] for r in report["rows"]]
    assert "fixed_point_ks" in names and "tail_slope" in names and "hill" in names


def test_verify_failure_exit_code(capsys):
    code, out, err = run_cli(capsys, "verify", CONFIGS / "symmetric_k2.toml", "--n-paths", "1000",
                             "--slope-tol", "0.0", "--hill-tol", "0.0")
    assert code == 2 and json.loads(out)["all_passed"] is False and "failed" in err


def test_report_float_format():
    rep = Report(("x", "y"), [{"x": 1.0 / 3.0, "y": math.inf}])
    assert format_report(rep, "csv") == "x,y\n0.333333333333,inf\n"
    assert json.loads(format_report(rep, "json")) == [{"x": 0.333333333333, "y": "inf"}]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "regime_ruin.cli", "gamma",
                        str(CONFIGS / "symmetric_k2.toml")], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.splitlines()[1].startswith("0,1,")
