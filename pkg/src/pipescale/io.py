"""File formats: workload traces, pipeline specs, run configs, and reports.

Wire formats are plain CSV and JSON. The trace CSV (`second,rps`, contiguous
seconds from zero) and the per-second report CSV
(`second,rps,violations,drops,p99_ms,cost_cores`) are normative and byte
stable for a given deterministic report.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

from .optimizer import PipelinePlan, PipelineSpec, PlanKind, StagePlan
from .profile import ModelProfile, ProfileSample, fit_profile
from .simulator import (
    DropPolicy,
    Policy,
    Scenario,
    SimReport,
    WorkloadTrace,
)


class ParseError(ValueError):
    """Malformed input file; message carries the file and line context."""


class GapError(ParseError):
    """Trace seconds are not contiguous from zero."""


@dataclass(frozen=True)
class RunConfig:
    """Paths plus knobs that assemble one simulation Scenario."""

    spec_path: Path
    trace_path: Path
    policy: Policy = Policy.JOINT
    drop_policy: DropPolicy = DropPolicy.AT_SLO
    seed: int = 0
    trace_scale: float = 1.0
    cold_start_ms: int = 5500
    inplace_delay_ms: int = 100
    control_period_ms: int = 1000
    predictor_window_s: int = 120
    predictor_lookback_s: int = 30
    predictor_horizon_s: int = 10
    predictor_headroom: float = 1.0
    static_plan: PipelinePlan | None = None


def load_samples_csv(path: str | Path) -> list[ProfileSample]:
    """Read profiling samples from a `batch,cores,latency_ms` CSV."""
    path = Path(path)
    samples = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["batch", "cores", "latency_ms"]:
            raise ParseError(f"{path}:1: expected header 'batch,cores,latency_ms'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                samples.append(ProfileSample(int(row[0]), int(row[1]), float(row[2])))
            except (IndexError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
    return samples


def load_trace(path: str | Path, scale: float = 1.0) -> WorkloadTrace:
    """Read a `second,rps` trace CSV, scale it, and validate contiguity."""
    path = Path(path)
    if scale <= 0:
        raise ParseError(f"scale must be positive, got {scale}")
    rows: list[int] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["second", "rps"]:
            raise ParseError(f"{path}:1: expected header 'second,rps'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                sec, rps = int(row[0]), int(row[1])
            except (IndexError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from exc
            if sec != len(rows):
                raise GapError(f"{path}:{lineno}: expected second {len(rows)}, got {sec}")
            if rps < 0:
                raise ParseError(f"{path}:{lineno}: rps must be nonnegative")
            rows.append(rps)
    if not rows:
        raise ParseError(f"{path}: trace is empty")
    scaled = tuple(int(math.floor(r * scale + 0.5)) for r in rows)
    return WorkloadTrace(rps=scaled, scale=scale)


def save_trace(trace: WorkloadTrace, path: str | Path) -> None:
    """Write a trace back out in the `second,rps` wire format."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["second", "rps"])
        for sec, rps in enumerate(trace.rps):
            writer.writerow([sec, rps])


def _profile_from_dict(entry: dict, base: Path, idx: int) -> ModelProfile:
    name = entry.get("name", f"stage{idx}")
    b_max = int(entry.get("b_max", 16))
    c_max = int(entry.get("c_max", 16))
    if "profile_csv" in entry:
        samples = load_samples_csv(base / entry["profile_csv"])
        return fit_profile(samples, b_max=b_max, c_max=c_max, name=name)
    try:
        return ModelProfile(
            gamma=float(entry["gamma"]),
            epsilon=float(entry["epsilon"]),
            delta=float(entry["delta"]),
            eta=float(entry["eta"]),
            b_max=b_max,
            c_max=c_max,
            name=name,
        )
    except KeyError as exc:
        raise ParseError(f"stage {idx}: missing coefficient {exc}") from exc


def load_pipeline_spec(path: str | Path) -> PipelineSpec:
    """Read a pipeline spec JSON; stages with `profile_csv` are fitted on load."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict) or "stages" not in doc or "slo_ms" not in doc:
        raise ParseError(f"{path}: need 'stages' and 'slo_ms'")
    stages = tuple(
        _profile_from_dict(entry, path.parent, i) for i, entry in enumerate(doc["stages"])
    )
    try:
        return PipelineSpec(
            stages=stages,
            slo_ms=int(doc["slo_ms"]),
            name=str(doc.get("name", path.stem)),
        )
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def profile_to_dict(profile: ModelProfile) -> dict:
    return {
        "name": profile.name,
        "gamma": profile.gamma,
        "epsilon": profile.epsilon,
        "delta": profile.delta,
        "eta": profile.eta,
        "b_max": profile.b_max,
        "c_max": profile.c_max,
    }


def plan_to_dict(plan: PipelinePlan) -> dict:
    return {
        "kind": plan.kind.value,
        "lambda": plan.lam,
        "total_cores": plan.total_cores,
        "predicted_e2e_ms": plan.predicted_e2e_ms,
        "lambda_vertical": plan.lambda_vertical,
        "extra_instances": list(plan.extra_instances) if plan.extra_instances else None,
        "stages": [
            {"batch": sp.batch, "cores": sp.cores, "instances": sp.instances}
            for sp in plan.stage_plans
        ],
    }


def plan_from_dict(doc: dict) -> PipelinePlan:
    try:
        stage_plans = tuple(
            StagePlan(int(s["batch"]), int(s["cores"]), int(s["instances"]))
            for s in doc["stages"]
        )
        return PipelinePlan(
            kind=PlanKind(doc.get("kind", "horizontal")),
            stage_plans=stage_plans,
            total_cores=int(
                doc.get("total_cores", sum(sp.cores * sp.instances for sp in stage_plans))
            ),
            predicted_e2e_ms=float(doc.get("predicted_e2e_ms", 0.0)),
            lam=float(doc.get("lambda", 1.0)),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ParseError(f"bad plan object: {exc}") from exc


def load_run_config(path: str | Path) -> RunConfig:
    """Read a run config JSON; file paths resolve relative to the config."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    base = path.parent
    try:
        return RunConfig(
            spec_path=base / doc["pipeline_spec"],
            trace_path=base / doc["trace"],
            policy=Policy(doc.get("policy", "joint")),
            drop_policy=DropPolicy(doc.get("drop_policy", "at_slo")),
            seed=int(doc.get("seed", 0)),
            trace_scale=float(doc.get("trace_scale", 1.0)),
            cold_start_ms=int(doc.get("cold_start_ms", 5500)),
            inplace_delay_ms=int(doc.get("inplace_delay_ms", 100)),
            control_period_ms=int(doc.get("control_period_ms", 1000)),
            predictor_window_s=int(doc.get("predictor", {}).get("window_s", 120)),
            predictor_lookback_s=int(doc.get("predictor", {}).get("lookback_s", 30)),
            predictor_horizon_s=int(doc.get("predictor", {}).get("horizon_s", 10)),
            predictor_headroom=float(doc.get("predictor", {}).get("headroom", 1.0)),
            static_plan=plan_from_dict(doc["static_plan"]) if "static_plan" in doc else None,
        )
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"{path}: {exc}") from exc


def scenario_from_config(cfg: RunConfig, seed: int | None = None,
                         policy: Policy | None = None) -> Scenario:
    """Materialize a Scenario from a RunConfig, optionally overriding fields."""
    spec = load_pipeline_spec(cfg.spec_path)
    trace = load_trace(cfg.trace_path, cfg.trace_scale)
    return Scenario(
        spec=spec,
        trace=trace,
        policy=policy if policy is not None else cfg.policy,
        drop_policy=cfg.drop_policy,
        seed=seed if seed is not None else cfg.seed,
        cold_start_ms=cfg.cold_start_ms,
        inplace_delay_ms=cfg.inplace_delay_ms,
        control_period_ms=cfg.control_period_ms,
        static_plan=cfg.static_plan,
        predictor_window_s=cfg.predictor_window_s,
        predictor_lookback_s=cfg.predictor_lookback_s,
        predictor_horizon_s=cfg.predictor_horizon_s,
        predictor_headroom=cfg.predictor_headroom,
    )


def report_aggregates(report: SimReport) -> dict:
    return {
        "violation_rate": report.violation_rate,
        "total_core_seconds": report.total_core_seconds,
        "served": report.served,
        "arrivals": report.arrivals,
        "dropped": report.dropped,
        "served_late": report.served_late,
        "in_flight_end": report.in_flight_end,
        "p99_ms_overall": report.p99_ms_overall,
    }


def write_report(report: SimReport, path: str | Path, format: str = "csv") -> None:
    """Write the per-second series (csv) or the aggregates (json).

    Raises IOError (OSError) when the destination is unwritable.
    """
    path = Path(path)
    if format == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["second", "rps", "violations", "drops", "p99_ms", "cost_cores"])
            for s in range(report.seconds):
                writer.writerow([
                    s,
                    report.rps[s],
                    report.violations[s],
                    report.drops[s],
                    f"{report.p99_ms[s]:.3f}",
                    f"{report.cost_cores[s]:.3f}",
                ])
    elif format == "json":
        path.write_text(json.dumps(report_aggregates(report), indent=2) + "\n")
    else:
        raise ValueError(f"format must be 'csv' or 'json', got {format!r}")


def default_output_dir() -> Path:
    """Output directory for CLI artifacts, overridable via PIPESCALE_OUT."""
    return Path(os.environ.get("PIPESCALE_OUT", "."))
