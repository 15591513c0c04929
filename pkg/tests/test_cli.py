import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from ndcrisk.cli import run_command
from ndcrisk.report import emit_plot_data, load_schema

from conftest import price_csv

SCHEMA = load_schema()
VERBS = ["fit", "forecast", "var", "backtest", "simulate", "ndc", "chaos", "beta", "capm", "wacc",
         "npv", "irr", "payback", "arr", "option"]
WACC = ["wacc", "--kd", "0.06", "--tax", "0.30", "--dv", "0.4", "--ke", "0.10", "--ev", "0.5",
        "--kp", "0.08", "--pv", "0.1"]


def run(argv, tmp_path, name="report.json"):
    out = tmp_path / name
    status = run_command(list(argv) + ["--output", str(out)])
    report = json.loads(out.read_text()) if out.exists() else None
    if report is not None:
        jsonschema.validate(report, SCHEMA)
    return status, report


@pytest.fixture
def files(tmp_path, garch_prices_csv):
    ndc = tmp_path / "ndc.json"
    ndc.write_text(json.dumps({"omega": 0.1, "alpha": 0.08, "beta": 0.9, "mu": 0.0,
                               "cycles": [{"amplitude": 1.0, "period": 40.0, "phase": 0.0}],
                               "gamma": 0.05, "delta": 0.05}))
    cash = tmp_path / "cash.csv"
    cash.write_text("time,amount\n0,-100\n1,50\n2,50\n3,50\n")
    short = tmp_path / "short.csv"
    short.write_text(price_csv(100 + np.arange(10.0)))
    return {"prices": str(garch_prices_csv), "ndc": str(ndc), "cash": str(cash), "short": str(short)}


def test_wacc_example(tmp_path, capsys):
    assert run_command(WACC) == 0
    report = json.loads(capsys.readouterr().out)
    jsonschema.validate(report, SCHEMA)
    assert abs(report["results"]["wacc"] - 0.0748) <= 1e-12
    assert report["warnings"] == [] and report["provenance"]["seed"] == 42
    assert report["command"] == {"verb": "wacc", "options": report["command"]["options"]}


def test_unknown_verb(capsys):
    assert run_command(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err


def test_missing_required_flag(capsys):
    assert run_command(["capm", "--rf", "0.03"]) == 1
    assert run_command(["wacc", "--kd", "0.06"]) == 1
    assert run_command([]) == 1
    assert "usage" in capsys.readouterr().err


def test_short_series_is_data_error(files, capsys):
    argv = ["var", "--method", "historical", "--level", "0.99", "--input", files["short"]]
    assert run_command(argv) == 2
    assert "series too short" in capsys.readouterr().err


def test_missing_file_is_data_error(tmp_path, capsys):
    assert run_command(["fit", "--input", str(tmp_path / "nope.csv")]) == 2
    assert "nope.csv" in capsys.readouterr().err


def test_nonconvergence_status(files, tmp_path):
    status, report = run(["fit", "--input", files["prices"], "--max-iter", "5"], tmp_path)
    assert status == 3
    assert report["results"]["fit"]["converged"] is False
    assert "converge" in report["error"]


@pytest.mark.parametrize("verb", VERBS)
def test_every_verb_emits_valid_report(verb, files, tmp_path):
    argv = {
        "fit": ["fit", "--input", files["prices"]],
        "forecast": ["forecast", "--input", files["prices"], "--horizon", "10"],
        "var": ["var", "--method", "evt_gpd", "--input", files["prices"]],
        "backtest": ["backtest", "--method", "parametric_normal", "--input", files["prices"]],
        "simulate": ["simulate", "--paths", "2000", "--steps", "12", "--dt", "0.0833"],
        "ndc": ["ndc", "--params", files["ndc"], "--n", "500"],
        "chaos": ["chaos", "--params", files["ndc"], "--n", "3000"],
        "beta": ["beta", "--asset", files["prices"], "--market", files["prices"]],
        "capm": ["capm", "--rf", "0.03", "--beta", "1.2", "--mrp", "0.05"],
        "wacc": WACC,
        "npv": ["npv", "--input", files["cash"], "--rate", "0.1"],
        "irr": ["irr", "--input", files["cash"]],
        "payback": ["payback", "--input", files["cash"], "--rate", "0.1", "--discounted"],
        "arr": ["arr", "--input", files["cash"]],
        "option": ["option", "--spot", "100", "--strike", "100", "--rate", "0.05", "--vol", "0.2",
                   "--maturity", "1"],
    }[verb]
    status, report = run(argv, tmp_path)
    assert status == 0, report
    assert report["command"]["verb"] == verb
    assert isinstance(report["warnings"], list)
    for path, digest in report["provenance"]["inputs"].items():
        assert len(digest) == 64


def test_report_values(files, tmp_path):
    _, r = run(["option", "--spot", "100", "--strike", "100", "--rate", "0.05", "--vol", "0.2",
                "--maturity", "1"], tmp_path)
    assert r["results"]["price"] == pytest.approx(10.4506, abs=1e-4)
    _, r = run(["irr", "--input", files["cash"]], tmp_path)
    assert r["results"]["irr"] == pytest.approx(0.2337519, abs=1e-6)
    _, r = run(["payback", "--input", files["cash"]], tmp_path)
    assert r["results"]["payback_years"] == 2.0
    _, r = run(["arr", "--input", files["cash"]], tmp_path)
    assert "proxy" in r["results"]["definition"]
    _, r = run(["ndc", "--params", files["ndc"]], tmp_path)
    assert "interpretive" in r["results"]["model"]


def test_plot_data(files, tmp_path):
    plots = tmp_path / "plots"
    status, report = run(["fit", "--input", files["prices"], "--plot-dir", str(plots)], tmp_path)
    assert status == 0
    lines = (plots / "garch_variance.csv").read_text().splitlines()
    assert lines[0] == "t,sigma2" and len(lines) - 1 == report["results"]["n"]
    run(["chaos", "--params", files["ndc"], "--n", "2000", "--plot-dir", str(plots)], tmp_path)
    rows = (plots / "divergence.csv").read_text().splitlines()
    assert rows[0] == "t,gap"
    assert all(float(r.split(",")[1]) >= 0 for r in rows[1:])
    run(["backtest", "--method", "historical", "--input", files["prices"], "--plot-dir", str(plots)], tmp_path)
    assert (plots / "violations.csv").read_text().startswith("index,return,var_value,violation\n")
    run(["simulate", "--paths", "1000", "--steps", "5", "--dump-paths", "7", "--plot-dir", str(plots)],
        tmp_path)
    dump = (plots / "paths.csv").read_text().splitlines()
    assert dump[0] == "path,step0,step1,step2,step3,step4,step5" and len(dump) == 8


def test_emit_plot_data_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        emit_plot_data({"a": (["t", "v"], [1], [2.0])}, blocker / "sub")


def _snapshot(argv, tmp_path, tag):
    d = tmp_path / tag
    d.mkdir()
    status = run_command(argv + ["--output", str(d / "r.json"), "--plot-dir", str(d)])
    return status, {p.name: p.read_bytes() for p in sorted(d.iterdir())}


@pytest.mark.parametrize("argv", [
    ["simulate", "--paths", "3000", "--steps", "20", "--seed", "7"],
    ["backtest", "--method", "fhs", "--input", "{prices}", "--window", "300"],
    ["ndc", "--params", "{ndc}", "--n", "800", "--seed", "11"],
])
def test_seed_determinism_across_workers(argv, files, tmp_path):
    argv = [a.format(**files) for a in argv]
    extra = ["--workers"] if argv[0] in ("simulate", "backtest") else None
    s1, a = _snapshot(argv + (extra + ["1"] if extra else []), tmp_path, "one")
    s2, b = _snapshot(argv + (extra + ["4"] if extra else []), tmp_path, "four")
    s3, c = _snapshot(argv + (extra + ["1"] if extra else []), tmp_path, "again")
    assert s1 == s2 == s3 == 0
    assert a == b == c and len(a) >= 2


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "ndcrisk", "capm", "--rf", "0.03", "--beta", "1.2",
                          "--mrp", "0.05"], capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["results"]["cost_of_equity"] == pytest.approx(0.09)
    assert subprocess.run([sys.executable, "-m", "ndcrisk", "bogus"], capture_output=True).returncode == 1


# --- fuzzing ------------------------------------------------------------------------

tokens = st.sampled_from(["--input", "--level", "--method", "--seed", "--n", "--params", "--rate", "--kd",
                          "--window", "--paths", "--steps", "--horizon", "--eta", "--spot", "--vol",
                          "-1", "0", "1e400", "nan", "0.99", "abc", "historical", "fhs", "BAD",
                          "--workers", "--tax", "--structure", "--discounted", "--r", "5"])
garbage = st.one_of(
    st.binary(max_size=300),
    st.lists(st.tuples(st.sampled_from(["2020-01-0", "2021-02-28", "x", "2020-13-01", ""]),
                       st.sampled_from(["1", "-1", "0", "nan", "inf", "1e308", "abc", ""])),
             max_size=30).map(lambda rows: ("date,price\n" + "\n".join(f"{a}{i},{b}" for i, (a, b) in
                                                                      enumerate(rows))).encode()),
    st.just(b'{"omega": -1}'), st.just(b"time,amount\n0,5\n1,5\n"), st.just(b"[]"),
)


@settings(max_examples=150, suppress_health_check=[HealthCheck.function_scoped_fixture], deadline=None)
@given(st.sampled_from(VERBS + ["nope", "--help"]), st.lists(tokens, max_size=8), garbage)
def test_fuzz_exit_codes(tmp_path, verb, args, payload):
    data = tmp_path / "fuzz.dat"
    data.write_bytes(payload)
    argv = [verb] + [str(data) if a in ("abc",) else a for a in args]
    for flag in ("--input", "--params", "--structure", "--asset", "--market"):
        if verb in ("fit", "var", "backtest", "forecast", "npv", "irr", "arr", "payback") and flag == "--input":
            argv += [flag, str(data)]
    out = tmp_path / "fuzz.json"
    if out.exists():
        out.unlink()
    status = run_command(argv + ["--output", str(out)])
    assert status in (0, 1, 2, 3)
    if status in (0, 3) and "--help" not in argv:
        jsonschema.validate(json.loads(out.read_text()), SCHEMA)


FILE_VERBS = {
    "fit": ["fit", "--input"], "var": ["var", "--method", "fhs", "--input"],
    "backtest": ["backtest", "--method", "historical", "--window", "20", "--input"],
    "forecast": ["forecast", "--horizon", "3", "--input"], "ndc": ["ndc", "--params"],
    "chaos": ["chaos", "--n", "10000", "--params"], "wacc": ["wacc", "--structure"],
    "npv": ["npv", "--input"], "irr": ["irr", "--input"], "payback": ["payback", "--input"],
    "arr": ["arr", "--input"], "beta": ["beta", "--market", "{data}", "--asset"],
}
structured = st.one_of(
    garbage,
    st.lists(st.floats(allow_nan=True, allow_infinity=True), max_size=40).map(
        lambda xs: ("time,amount\n" + "".join(f"{i},{x}\n" for i, x in enumerate(xs))).encode()),
    st.lists(st.floats(-1e6, 1e6), min_size=0, max_size=120).map(
        lambda xs: price_csv(np.abs(np.array(xs, dtype=float)) + 1e-300).encode() if xs else b"date,price\n"),
    st.dictionaries(st.sampled_from(["omega", "alpha", "beta", "gamma", "delta", "r", "x0", "cycles",
                                     "kd", "tax_rate", "d_v", "ke", "e_v", "kp", "p_v"]),
                    st.one_of(st.floats(-2, 5), st.just("x"), st.just([]), st.just([{"period": 0}])),
                    max_size=15).map(lambda d: json.dumps(d).encode()),
)


@settings(max_examples=200, suppress_health_check=[HealthCheck.function_scoped_fixture], deadline=None)
@given(st.sampled_from(sorted(FILE_VERBS)), structured)
def test_fuzz_malformed_inputs(tmp_path, verb, payload):
    data = tmp_path / "input.dat"
    data.write_bytes(payload)
    out = tmp_path / "out.json"
    if out.exists():
        out.unlink()
    argv = [a.format(data=data) for a in FILE_VERBS[verb]] + [str(data), "--output", str(out)]
    status = run_command(argv)
    assert status in (0, 2, 3)
    if status in (0, 3):
        jsonschema.validate(json.loads(out.read_text()), SCHEMA)
