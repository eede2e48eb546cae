import json
import os

import pytest

from pipescale import (
    DegenerateSamples,
    GapError,
    ParseError,
    Policy,
    Scenario,
    WorkloadTrace,
    load_pipeline_spec,
    load_samples_csv,
    load_trace,
    run,
    save_trace,
    scenario_from_config,
    solve_horizontal,
    write_report,
)
from pipescale import io as pio
from pipescale.cli import main as cli_main

from conftest import make_spec


# ---------------------------------------------------------------- traces

def test_load_trace(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("second,rps\n0,20\n1,120\n2,20\n")
    trace = load_trace(path)
    assert trace.rps == (20, 120, 20)


def test_load_trace_scaled(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("second,rps\n0,20\n1,120\n2,20\n")
    assert load_trace(path, scale=0.5).rps == (10, 60, 10)


def test_load_trace_scaling_rounds_half_up(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("second,rps\n0,15\n1,5\n2,2\n")
    # floor(x + 0.5), not banker's rounding: 7.5 -> 8, 2.5 -> 3, 1.0 -> 1
    assert load_trace(path, scale=0.5).rps == (8, 3, 1)


def test_load_trace_gap(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("second,rps\n0,20\n2,20\n")
    with pytest.raises(GapError):
        load_trace(path)


def test_load_trace_bad_header(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("sec,rate\n0,20\n")
    with pytest.raises(ParseError):
        load_trace(path)


def test_trace_round_trip(tmp_path):
    trace = WorkloadTrace((3, 0, 7, 120, 5))
    path = tmp_path / "rt.csv"
    save_trace(trace, path)
    assert load_trace(path).rps == trace.rps


# ---------------------------------------------------------------- samples

def test_load_samples(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("batch,cores,latency_ms\n1,1,57.0\n2,1,69.0\n")
    samples = load_samples_csv(path)
    assert len(samples) == 2 and samples[0].batch == 1


def test_load_samples_bad_row(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("batch,cores,latency_ms\n1,1,nope\n")
    with pytest.raises(ParseError) as err:
        load_samples_csv(path)
    assert ":2:" in str(err.value)


# ------------------------------------------------------------ pipeline spec

def _write_spec(tmp_path, n_stages=2, slo=780):
    doc = {
        "name": "video",
        "slo_ms": slo,
        "stages": [
            {"name": f"m{i}", "gamma": 10, "epsilon": 40, "delta": 2, "eta": 5}
            for i in range(n_stages)
        ],
    }
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(doc))
    return path


def test_load_spec_two_stage(tmp_path):
    spec = load_pipeline_spec(_write_spec(tmp_path, n_stages=2, slo=780))
    assert len(spec.stages) == 2 and spec.slo_ms == 780


def test_load_spec_three_stage(tmp_path):
    spec = load_pipeline_spec(_write_spec(tmp_path, n_stages=3, slo=2550))
    assert len(spec.stages) == 3


def test_load_spec_zero_slo(tmp_path):
    with pytest.raises(ParseError):
        load_pipeline_spec(_write_spec(tmp_path, slo=0))


def test_load_spec_fits_profile_csv(tmp_path):
    rows = ["batch,cores,latency_ms"]
    for b in (1, 2, 4, 8):
        for c in (1, 2, 4):
            rows.append(f"{b},{c},{10.0 * b / c + 40.0 / c + 2.0 * b + 5.0}")
    (tmp_path / "samples.csv").write_text("\n".join(rows) + "\n")
    doc = {
        "name": "fitted",
        "slo_ms": 780,
        "stages": [{"name": "m0", "profile_csv": "samples.csv"}],
    }
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(doc))
    spec = load_pipeline_spec(path)
    assert spec.stages[0].gamma == pytest.approx(10.0, abs=1e-6)


def test_load_spec_degenerate_csv_passthrough(tmp_path):
    (tmp_path / "flat.csv").write_text(
        "batch,cores,latency_ms\n1,1,57\n1,1,57\n1,1,57\n1,1,57\n"
    )
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({"slo_ms": 780, "stages": [{"profile_csv": "flat.csv"}]}))
    with pytest.raises(DegenerateSamples):
        load_pipeline_spec(path)


# ---------------------------------------------------------------- reports

def _small_report(demo_profile, seconds=3):
    spec = make_spec(demo_profile, 1000)
    scn = Scenario(
        spec=spec,
        trace=WorkloadTrace((10,) * seconds),
        policy=Policy.STATIC,
        static_plan=solve_horizontal(spec, 17),
        seed=0,
    )
    return run(scn)


def test_write_report_csv(tmp_path, demo_profile):
    report = _small_report(demo_profile)
    path = tmp_path / "r.csv"
    write_report(report, path, format="csv")
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "second,rps,violations,drops,p99_ms,cost_cores"
    assert len(lines) == report.seconds + 1


def test_write_report_json(tmp_path, demo_profile):
    report = _small_report(demo_profile)
    path = tmp_path / "r.json"
    write_report(report, path, format="json")
    doc = json.loads(path.read_text())
    assert "violation_rate" in doc and "total_core_seconds" in doc


def test_write_report_unwritable(tmp_path, demo_profile):
    report = _small_report(demo_profile)
    with pytest.raises(IOError):
        write_report(report, tmp_path / "missing" / "r.csv", format="csv")


def test_write_report_deterministic_bytes(tmp_path, demo_profile):
    spec = make_spec(demo_profile, 1000)
    scn = Scenario(
        spec=spec,
        trace=WorkloadTrace((10,) * 4),
        policy=Policy.STATIC,
        static_plan=solve_horizontal(spec, 17),
        seed=1,
    )
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_report(run(scn), p1, format="csv")
    write_report(run(scn), p2, format="csv")
    assert p1.read_bytes() == p2.read_bytes()


# ------------------------------------------------------------- run config

def _write_run_config(tmp_path, **overrides):
    spec_path = _write_spec(tmp_path, n_stages=1, slo=1000)
    trace_path = tmp_path / "trace.csv"
    trace_path.write_text("second,rps\n" + "\n".join(f"{s},10" for s in range(5)) + "\n")
    doc = {
        "pipeline_spec": spec_path.name,
        "trace": trace_path.name,
        "policy": "joint",
        "drop_policy": "at_slo",
        "seed": 7,
        **overrides,
    }
    path = tmp_path / "run.json"
    path.write_text(json.dumps(doc))
    return path


def test_run_config_round_trip(tmp_path):
    cfg = pio.load_run_config(_write_run_config(tmp_path))
    scn = scenario_from_config(cfg, seed=42)
    assert scn.seed == 42 and scn.policy is Policy.JOINT
    report = run(scn)
    assert report.arrivals == report.served + report.dropped + report.in_flight_end


# ------------------------------------------------------------------- CLI

def test_cli_fit_profile(tmp_path, capsys):
    rows = ["batch,cores,latency_ms"]
    for b in (1, 2, 4, 8):
        for c in (1, 2, 4):
            rows.append(f"{b},{c},{10.0 * b / c + 40.0 / c + 2.0 * b + 5.0}")
    csv_path = tmp_path / "samples.csv"
    csv_path.write_text("\n".join(rows) + "\n")
    rc = cli_main(["fit-profile", str(csv_path), "--name", "demo"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["gamma"] == pytest.approx(10.0, abs=1e-6)


def test_cli_optimize(tmp_path, capsys):
    spec_path = _write_spec(tmp_path, n_stages=1, slo=100)
    rc = cli_main(["optimize", str(spec_path), "--lambda", "50", "--mode", "vertical"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["feasible"] and doc["total_cores"] == 2


def test_cli_optimize_infeasible_mode(tmp_path, capsys):
    spec_path = _write_spec(tmp_path, n_stages=1, slo=20)
    rc = cli_main(["optimize", str(spec_path), "--lambda", "10", "--mode", "horizontal"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["feasible"] is False


def test_cli_simulate_writes_outputs(tmp_path, capsys):
    cfg_path = _write_run_config(tmp_path)
    out_dir = tmp_path / "out"
    rc = cli_main(["simulate", str(cfg_path), "--seed", "3", "--out", str(out_dir)])
    assert rc == 0
    produced = sorted(p.name for p in out_dir.iterdir())
    assert any(p.endswith(".csv") for p in produced)
    assert any(p.endswith(".json") for p in produced)


def test_cli_simulate_requires_seed(tmp_path):
    cfg_path = _write_run_config(tmp_path)
    with pytest.raises(SystemExit):
        cli_main(["simulate", str(cfg_path)])


def test_cli_compare_prints_table(tmp_path, capsys):
    cfg_path = _write_run_config(tmp_path)
    rc = cli_main(["compare", str(cfg_path), "--seed", "1"])
    assert rc == 0
    out = capsys.readouterr().out
    for name in ("joint", "horizontal", "vertical"):
        assert name in out


def test_cli_error_exit_code(tmp_path, capsys):
    rc = cli_main(["optimize", str(tmp_path / "missing.json"), "--lambda", "5", "--mode", "vertical"])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_cli_output_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("PIPESCALE_OUT", str(tmp_path / "envout"))
    assert pio.default_output_dir() == tmp_path / "envout"
