"""Joint batch/cores/instances planner for a linear inference pipeline.

Solves, for a pipeline of stages s with profiles l_s and an end-to-end latency
bound SLO at ingress rate lam:

    minimize    sum_s n_s * c_s
    subject to  sum_s ( l_s(b_s, c_s) + q(b_s) ) <= SLO
                h_s(b_s, c_s) * n_s >= lam        for every stage
                b_s, c_s, n_s positive integers

in three modes:

* vertical   - instance counts fixed (in-place core scaling only),
* horizontal - one core per instance, instance counts free,
* hybrid     - vertical plan for the largest sustainable rate found by binary
               search, plus extra same-shape instances for the remainder.

Both dynamic programs index a budget table by whole milliseconds; each stage's
latency share l + q is rounded UP before indexing, so the SLO constraint is
respected conservatively. The brute-force oracle enumerates the same feasible
set directly, which makes DP-vs-oracle cost comparisons exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Sequence

from .profile import ModelProfile, latency, throughput
from .queueing import queue_delay


class Infeasible(Exception):
    """No assignment satisfies the throughput and latency constraints."""


class GridTooLarge(Exception):
    """Brute-force enumeration would exceed the safety guard."""


class PlanKind(Enum):
    VERTICAL = "vertical"
    HORIZONTAL = "horizontal"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class PipelineSpec:
    """Ordered stage profiles plus the end-to-end latency objective."""

    stages: tuple[ModelProfile, ...]
    slo_ms: int
    name: str = "pipeline"

    def __post_init__(self) -> None:
        if len(self.stages) < 1:
            raise ValueError("pipeline needs at least one stage")
        if self.slo_ms < 1:
            raise ValueError(f"slo_ms must be a positive integer, got {self.slo_ms}")
        floor = sum(latency(p, 1, p.c_max) for p in self.stages)
        if self.slo_ms < floor:
            raise ValueError(
                f"slo_ms={self.slo_ms} below the unloaded latency floor {floor:.1f} ms"
            )


@dataclass(frozen=True)
class StagePlan:
    """Chosen (batch, cores, instances) for one stage."""

    batch: int
    cores: int
    instances: int

    def __post_init__(self) -> None:
        if min(self.batch, self.cores, self.instances) < 1:
            raise ValueError(f"plan fields must be positive, got {self}")


@dataclass(frozen=True)
class PipelinePlan:
    """Planner output: per-stage assignments plus cost and latency predictions.

    For hybrid plans, `instances` in each StagePlan counts the vertical tier
    plus the extra instances; `extra_instances` records the extra tier alone
    and `lambda_vertical` the rate the vertical tier was solved for.
    """

    kind: PlanKind
    stage_plans: tuple[StagePlan, ...]
    total_cores: int
    predicted_e2e_ms: float
    lam: float
    lambda_vertical: float | None = None
    extra_instances: tuple[int, ...] | None = None


def _stage_step_ms(profile: ModelProfile, b: int, c: int, lam: float) -> int:
    """Integer-ms latency share of one stage, rounded up (conservative)."""
    return math.ceil(latency(profile, b, c) + queue_delay(b, lam))


def _vertical_candidates(
    profile: ModelProfile, lam: float, n: int, slo_ms: int
) -> list[tuple[int, int, int, int]]:
    """Pareto frontier of (step_ms, cost, b, c) choices for one stage.

    For each core count the cheapest workable batch is the smallest one whose
    throughput covers lam (latency and queue delay are both nondecreasing in
    b, so it also minimizes the latency share). Configurations that cost more
    and take at least as long as a cheaper one are dropped.
    """
    frontier: list[tuple[int, int, int, int]] = []
    best_step = slo_ms + 1
    for c in range(1, profile.c_max + 1):
        for b in range(1, profile.b_max + 1):
            if throughput(profile, b, c) * n >= lam:
                step = _stage_step_ms(profile, b, c, lam)
                if step <= slo_ms and step < best_step:
                    frontier.append((step, n * c, b, c))
                    best_step = step
                break
    return frontier


def _horizontal_candidates(
    profile: ModelProfile, lam: float, slo_ms: int, n_cap: int | None = None
) -> list[tuple[int, int, int, int]]:
    """Pareto frontier of (step_ms, cost, b, n) one-core choices for one stage."""
    frontier: list[tuple[int, int, int, int]] = []
    best_cost = None
    for b in range(1, profile.b_max + 1):
        n = math.ceil(lam / throughput(profile, b, 1))
        if n_cap is not None and n > n_cap:
            continue
        step = _stage_step_ms(profile, b, 1, lam)
        if step > slo_ms:
            continue
        if best_cost is None or n < best_cost:
            frontier.append((step, n, b, n))
            best_cost = n
    return frontier


def _dp_solve(
    per_stage: Sequence[Sequence[tuple[int, int, int, int]]], slo_ms: int
) -> tuple[int, tuple[tuple[int, int], ...]]:
    """Budgeted DP over (stage, consumed latency) cells.

    Each cell keeps the best (cost, config-so-far); configs compare
    lexicographically, which realizes the smaller-batch-first tie-break.
    Raises Infeasible when no stage sequence fits the budget.
    """
    width = slo_ms + 1
    table: list[tuple[int, tuple[tuple[int, int], ...]] | None] = [None] * width
    for cand in per_stage[0]:
        step, cost, b, x = cand
        entry = (cost, ((b, x),))
        if table[step] is None or entry < table[step]:
            table[step] = entry
    for stage_cands in per_stage[1:]:
        nxt: list[tuple[int, tuple[tuple[int, int], ...]] | None] = [None] * width
        for used, entry in enumerate(table):
            if entry is None:
                continue
            cost, cfg = entry
            for step, c_cost, b, x in stage_cands:
                t = used + step
                if t >= width:
                    continue
                cand_entry = (cost + c_cost, cfg + ((b, x),))
                if nxt[t] is None or cand_entry < nxt[t]:
                    nxt[t] = cand_entry
        table = nxt
    best = min((entry for entry in table if entry is not None), default=None)
    if best is None:
        raise Infeasible("no assignment fits the latency budget")
    return best


def _plan_from_vertical(
    spec: PipelineSpec, lam: float, instances: tuple[int, ...], cfg: Sequence[tuple[int, int]]
) -> PipelinePlan:
    plans = tuple(
        StagePlan(batch=b, cores=c, instances=n) for (b, c), n in zip(cfg, instances)
    )
    e2e = sum(
        latency(p, sp.batch, sp.cores) + queue_delay(sp.batch, lam)
        for p, sp in zip(spec.stages, plans)
    )
    return PipelinePlan(
        kind=PlanKind.VERTICAL,
        stage_plans=plans,
        total_cores=sum(sp.cores * sp.instances for sp in plans),
        predicted_e2e_ms=e2e,
        lam=lam,
    )


def _normalize_instances(spec: PipelineSpec, instances: Sequence[int] | None) -> tuple[int, ...]:
    if instances is None:
        return (1,) * len(spec.stages)
    counts = tuple(int(n) for n in instances)
    if len(counts) != len(spec.stages) or min(counts) < 1:
        raise ValueError(f"instances must give a positive count per stage, got {instances}")
    return counts


@lru_cache(maxsize=16384)
def _solve_vertical_cached(
    spec: PipelineSpec, lam: float, instances: tuple[int, ...]
) -> PipelinePlan | None:
    per_stage = [
        _vertical_candidates(p, lam, n, spec.slo_ms)
        for p, n in zip(spec.stages, instances)
    ]
    if any(not cands for cands in per_stage):
        return None
    try:
        _, cfg = _dp_solve(per_stage, spec.slo_ms)
    except Infeasible:
        return None
    return _plan_from_vertical(spec, lam, instances, cfg)


def solve_vertical(
    spec: PipelineSpec, lam: float, instances: Sequence[int] | None = None
) -> PipelinePlan:
    """Optimal in-place core scaling with instance counts held fixed.

    Raises Infeasible when no (b, c) assignment both covers lam and fits the
    SLO; callers fall through to solve_hybrid.
    """
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    plan = _solve_vertical_cached(spec, lam, _normalize_instances(spec, instances))
    if plan is None:
        raise Infeasible(f"no vertical assignment serves {lam} rps within {spec.slo_ms} ms")
    return plan


@lru_cache(maxsize=16384)
def _solve_horizontal_cached(spec: PipelineSpec, lam: float) -> PipelinePlan | None:
    per_stage = [_horizontal_candidates(p, lam, spec.slo_ms) for p in spec.stages]
    if any(not cands for cands in per_stage):
        return None
    try:
        _, cfg = _dp_solve(per_stage, spec.slo_ms)
    except Infeasible:
        return None
    plans = tuple(StagePlan(batch=b, cores=1, instances=n) for b, n in cfg)
    e2e = sum(
        latency(p, sp.batch, 1) + queue_delay(sp.batch, lam)
        for p, sp in zip(spec.stages, plans)
    )
    return PipelinePlan(
        kind=PlanKind.HORIZONTAL,
        stage_plans=plans,
        total_cores=sum(sp.instances for sp in plans),
        predicted_e2e_ms=e2e,
        lam=lam,
    )


def solve_horizontal(spec: PipelineSpec, lam: float) -> PipelinePlan:
    """Optimal one-core-instance plan; instance counts are unbounded."""
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    plan = _solve_horizontal_cached(spec, lam)
    if plan is None:
        raise Infeasible(f"no one-core assignment fits {spec.slo_ms} ms at {lam} rps")
    return plan


def solve_hybrid(
    spec: PipelineSpec, lam: float, instances: Sequence[int] | None = None
) -> PipelinePlan:
    """Vertical plan for the largest sustainable rate, plus extra instances.

    Binary-searches the largest integer rate lambda_v < lam that
    solve_vertical can serve, then sizes per-stage extra instances with the
    same (batch, cores) shape to absorb lam - lambda_v. Raises Infeasible if
    even 1 rps is out of reach.
    """
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    counts = _normalize_instances(spec, instances)

    def feasible(rate: int) -> PipelinePlan | None:
        return _solve_vertical_cached(spec, float(rate), counts)

    lo, hi = 1, max(1, math.ceil(lam))
    lo_plan = feasible(lo)
    if lo_plan is None:
        raise Infeasible("SLO unreachable at any rate for this pipeline")
    hi_plan = feasible(hi)
    if hi_plan is not None:
        lo, lo_plan = hi, hi_plan
    else:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            plan = feasible(mid)
            if plan is not None:
                lo, lo_plan = mid, plan
            else:
                hi = mid
    lam_v = float(lo)

    extras = []
    stage_plans = []
    for profile, sp in zip(spec.stages, lo_plan.stage_plans):
        extra = max(0, math.ceil((lam - lam_v) / throughput(profile, sp.batch, sp.cores)))
        extras.append(extra)
        stage_plans.append(
            StagePlan(batch=sp.batch, cores=sp.cores, instances=sp.instances + extra)
        )
    plans = tuple(stage_plans)
    return PipelinePlan(
        kind=PlanKind.HYBRID,
        stage_plans=plans,
        total_cores=sum(sp.cores * sp.instances for sp in plans),
        predicted_e2e_ms=lo_plan.predicted_e2e_ms,
        lam=lam,
        lambda_vertical=lam_v,
        extra_instances=tuple(extras),
    )


def brute_force_optimize(
    spec: PipelineSpec,
    lam: float,
    mode: PlanKind,
    instances: Sequence[int] | None = None,
    n_cap: int = 10**6,
) -> PipelinePlan:
    """Exhaustive-enumeration oracle for the vertical and horizontal modes.

    Walks every per-stage assignment directly (no budget table) and returns
    the exact optimum under the same integer-ms feasibility rule, so DP
    results can be compared for equality. Guarded to 1e7 grid points.
    """
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    if mode is PlanKind.HYBRID:
        raise ValueError("oracle covers vertical and horizontal modes only")
    counts = _normalize_instances(spec, instances)

    grid = 1
    for p in spec.stages:
        grid *= p.b_max * (p.c_max if mode is PlanKind.VERTICAL else 1)
    if grid > 10**7:
        raise GridTooLarge(f"{grid} grid points exceeds the 1e7 guard")

    if mode is PlanKind.VERTICAL:
        per_stage = [
            [(b, c) for b in range(1, p.b_max + 1) for c in range(1, p.c_max + 1)]
            for p in spec.stages
        ]
    else:
        per_stage = [[(b, 1) for b in range(1, p.b_max + 1)] for p in spec.stages]

    best: tuple[int, tuple[tuple[int, int], ...]] | None = None
    for combo in itertools.product(*per_stage):
        used = 0
        cost = 0
        cfg = []
        ok = True
        for p, n_fixed, (b, c) in zip(spec.stages, counts, combo):
            if mode is PlanKind.VERTICAL:
                n = n_fixed
                if throughput(p, b, c) * n < lam:
                    ok = False
                    break
            else:
                n = math.ceil(lam / throughput(p, b, 1))
                if n > n_cap:
                    ok = False
                    break
            used += _stage_step_ms(p, b, c, lam)
            if used > spec.slo_ms:
                ok = False
                break
            cost += n * c
            cfg.append((b, c if mode is PlanKind.VERTICAL else n))
        if not ok:
            continue
        entry = (cost, tuple(cfg))
        if best is None or entry < best:
            best = entry
    if best is None:
        raise Infeasible("exhaustive scan found no feasible assignment")

    _, cfg = best
    if mode is PlanKind.VERTICAL:
        return _plan_from_vertical(spec, lam, counts, cfg)
    plans = tuple(StagePlan(batch=b, cores=1, instances=n) for b, n in cfg)
    e2e = sum(
        latency(p, sp.batch, 1) + queue_delay(sp.batch, lam)
        for p, sp in zip(spec.stages, plans)
    )
    return PipelinePlan(
        kind=PlanKind.HORIZONTAL,
        stage_plans=plans,
        total_cores=sum(sp.instances for sp in plans),
        predicted_e2e_ms=e2e,
        lam=lam,
    )
