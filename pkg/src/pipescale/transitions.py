"""Scaling-mode state machine: which solver runs, when to switch, and the
ordered actions each switch emits.

Steady operation uses one-core instances (for a fixed core budget, more small
instances never yield less total speedup than fewer big ones, see
amdahl_speedup). A capacity shortfall is absorbed in place by raising cores on
the existing instances, or, past the core ceiling, by maxing cores and
spawning extra instances for the remainder. Once the observed and forecast
rates ask for the same one-core plan, the controller hands capacity back to
cheap one-core instances: spawn the missing ones first, then downsize the
survivors only after every spawn is ready, so capacity never dips during the
handover.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

from .optimizer import (
    Infeasible,
    PipelinePlan,
    PipelineSpec,
    solve_horizontal,
    solve_hybrid,
    solve_vertical,
)
from .profile import latency, throughput
from .queueing import queue_delay

DEFAULT_COLD_START_MS = 5500
DEFAULT_INPLACE_DELAY_MS = 100


class Mode(Enum):
    HORIZONTAL_STEADY = "horizontal_steady"
    VERTICAL_BURST = "vertical_burst"
    HYBRID_SPAWNING = "hybrid_spawning"


class ActionKind(Enum):
    SET_CORES = "set_cores"
    SET_BATCH = "set_batch"
    SPAWN_INSTANCES = "spawn_instances"
    RETIRE_INSTANCES = "retire_instances"


@dataclass(frozen=True)
class ScalingAction:
    """One adapter instruction for one stage.

    `after_spawns` marks second-phase actions that must wait until every spawn
    issued alongside them is up and serving.
    """

    kind: ActionKind
    stage: int
    cores: int = 0
    batch: int = 0
    count: int = 0
    issue_time_ms: int = 0
    after_spawns: bool = False

    def __post_init__(self) -> None:
        if self.kind in (ActionKind.SET_CORES, ActionKind.SPAWN_INSTANCES) and self.cores < 1:
            raise ValueError(f"{self.kind.value} needs cores >= 1, got {self.cores}")
        if self.kind is ActionKind.SET_BATCH and self.batch < 1:
            raise ValueError(f"set_batch needs batch >= 1, got {self.batch}")
        if self.kind in (ActionKind.SPAWN_INSTANCES, ActionKind.RETIRE_INSTANCES) and self.count < 1:
            raise ValueError(f"{self.kind.value} needs count >= 1, got {self.count}")


def set_cores(stage: int, cores: int, t: int = 0, after_spawns: bool = False) -> ScalingAction:
    return ScalingAction(ActionKind.SET_CORES, stage, cores=cores, issue_time_ms=t,
                         after_spawns=after_spawns)


def set_batch(stage: int, batch: int, t: int = 0, after_spawns: bool = False) -> ScalingAction:
    return ScalingAction(ActionKind.SET_BATCH, stage, batch=batch, issue_time_ms=t,
                         after_spawns=after_spawns)


def spawn_instances(stage: int, count: int, cores: int, t: int = 0) -> ScalingAction:
    return ScalingAction(ActionKind.SPAWN_INSTANCES, stage, cores=cores, count=count,
                         issue_time_ms=t)


def retire_instances(stage: int, count: int, t: int = 0, after_spawns: bool = False) -> ScalingAction:
    return ScalingAction(ActionKind.RETIRE_INSTANCES, stage, count=count, issue_time_ms=t,
                         after_spawns=after_spawns)


@dataclass(frozen=True)
class StageConfig:
    """Live view of one stage: queue batch size plus per-instance cores.

    `pending` counts instances already requested but not yet serving.
    """

    batch: int
    cores: tuple[int, ...]
    pending: int = 0

    @property
    def n_ready(self) -> int:
        return len(self.cores)

    @property
    def n_total(self) -> int:
        return self.n_ready + self.pending


@dataclass(frozen=True)
class PendingSpawn:
    stage: int
    count: int
    ready_at_ms: int


@dataclass(frozen=True)
class ControllerState:
    mode: Mode = Mode.HORIZONTAL_STEADY
    pending_spawns: tuple[PendingSpawn, ...] = ()


def amdahl_speedup(r: float, p: float) -> float:
    """Theoretical speedup of a task with parallel fraction p on r cores."""
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    return 1.0 / ((1.0 - p) + p / r)


def is_stable(spec: PipelineSpec, lambda_now: float, lambda_pred: float) -> bool:
    """True when the one-core plans for the current and forecast rates agree.

    Agreement means the forecast peak needs no extra capacity, so handing the
    workload to one-core instances is safe. Infeasibility of either plan
    counts as unstable.
    """
    if not (lambda_now > 0 and lambda_pred > 0):
        raise ValueError("rates must be positive")
    try:
        now_plan = solve_horizontal(spec, lambda_now)
        pred_plan = solve_horizontal(spec, lambda_pred)
    except Infeasible:
        return False
    return all(
        (a.batch, a.instances) == (b.batch, b.instances)
        for a, b in zip(now_plan.stage_plans, pred_plan.stage_plans)
    )


def plan_h2v_scaleup(
    current: Sequence[StageConfig], vertical_plan: PipelinePlan, t: int = 0
) -> list[ScalingAction]:
    """In-place scale-up actions: batch first, then one SetCores per instance.

    Cores change uniformly across a stage's instances (never a subset), so a
    stage with any drift emits one SetCores per live instance.
    """
    actions: list[ScalingAction] = []
    for s, (cfg, sp) in enumerate(zip(current, vertical_plan.stage_plans)):
        if cfg.batch != sp.batch:
            actions.append(set_batch(s, sp.batch, t))
        if any(c != sp.cores for c in cfg.cores):
            actions.extend(set_cores(s, sp.cores, t) for _ in cfg.cores)
    return actions


def plan_v2h_transition(
    current: Sequence[StageConfig], target: PipelinePlan, t: int = 0
) -> list[ScalingAction]:
    """Two-phase handover to a one-core plan.

    Phase 1 spawns the missing one-core instances immediately. Phase 2
    (tagged after_spawns) retunes the batch, downsizes the surviving
    instances to one core, and retires any surplus, so the pre-existing tier
    keeps its full capacity until the new instances are serving.
    """
    actions: list[ScalingAction] = []
    deferred: list[ScalingAction] = []
    for s, (cfg, sp) in enumerate(zip(current, target.stage_plans)):
        missing = sp.instances - cfg.n_total
        if missing > 0:
            actions.append(spawn_instances(s, missing, cores=1, t=t))
        if cfg.batch != sp.batch:
            deferred.append(set_batch(s, sp.batch, t, after_spawns=True))
        deferred.extend(
            set_cores(s, 1, t, after_spawns=True) for c in cfg.cores if c != 1
        )
        surplus = cfg.n_total - sp.instances
        if surplus > 0:
            deferred.append(retire_instances(s, surplus, t, after_spawns=True))
    return actions + deferred


def _capacity_ok(spec: PipelineSpec, config: Sequence[StageConfig], lam: float) -> bool:
    for profile, cfg in zip(spec.stages, config):
        cap = sum(throughput(profile, cfg.batch, c) for c in cfg.cores)
        if cap < lam:
            return False
    return True


def _budget_ok(spec: PipelineSpec, config: Sequence[StageConfig], lam: float) -> bool:
    total = 0.0
    for profile, cfg in zip(spec.stages, config):
        if not cfg.cores:
            return False
        total += latency(profile, cfg.batch, min(cfg.cores)) + queue_delay(cfg.batch, lam)
    return total <= spec.slo_ms


def _matches_plan(config: Sequence[StageConfig], plan: PipelinePlan) -> bool:
    return all(
        cfg.batch == sp.batch
        and cfg.pending == 0
        and cfg.n_ready == sp.instances
        and all(c == sp.cores for c in cfg.cores)
        for cfg, sp in zip(config, plan.stage_plans)
    )


def step(
    state: ControllerState,
    spec: PipelineSpec,
    lambda_now: float,
    lambda_pred: float,
    current_config: Sequence[StageConfig],
    now_ms: int = 0,
    cold_start_ms: int = DEFAULT_COLD_START_MS,
) -> tuple[ControllerState, list[ScalingAction]]:
    """One control decision: returns the next state and the actions to apply.

    Policy, in priority order:
      a. capacity and latency budget cover max(now, forecast): nothing, except
         that in a burst mode a stable forecast triggers the one-core handover;
      b. shortfall with in-place headroom: vertical plan actions (VERTICAL_BURST);
      c. shortfall past the core ceiling: hybrid plan, maxing cores and
         spawning the remainder once (HYBRID_SPAWNING, spawns are ledgered so
         later ticks do not re-request them);
      d. nothing actionable (SLO unreachable even at 1 rps): hold.
    """
    lam_req = max(lambda_now, lambda_pred, 1.0)
    lam_now = max(lambda_now, 1.0)
    lam_pred = max(lambda_pred, 1.0)

    pending = tuple(p for p in state.pending_spawns if p.ready_at_ms > now_ms)
    pend_by_stage = [0] * len(spec.stages)
    for p in pending:
        pend_by_stage[p.stage] += p.count
    merged = [
        replace(cfg, pending=cfg.pending + pend_by_stage[s])
        for s, cfg in enumerate(current_config)
    ]
    ready_counts = tuple(cfg.n_ready for cfg in merged)

    healthy = _capacity_ok(spec, merged, lam_req) and _budget_ok(spec, merged, lam_req)

    if not healthy:
        try:
            vplan = solve_vertical(spec, lam_req, instances=ready_counts)
            return (
                ControllerState(Mode.VERTICAL_BURST, pending),
                plan_h2v_scaleup(merged, vplan, t=now_ms),
            )
        except Infeasible:
            pass
        try:
            hplan = solve_hybrid(spec, lam_req, instances=ready_counts)
        except Infeasible:
            return ControllerState(state.mode, pending), []
        actions: list[ScalingAction] = []
        for s, (cfg, sp) in enumerate(zip(merged, hplan.stage_plans)):
            if cfg.batch != sp.batch:
                actions.append(set_batch(s, sp.batch, now_ms))
            if any(c != sp.cores for c in cfg.cores):
                actions.extend(set_cores(s, sp.cores, now_ms) for _ in cfg.cores)
            missing = sp.instances - cfg.n_total
            if missing > 0:
                actions.append(spawn_instances(s, missing, cores=sp.cores, t=now_ms))
                pending = pending + (
                    PendingSpawn(s, missing, now_ms + cold_start_ms),
                )
        return ControllerState(Mode.HYBRID_SPAWNING, pending), actions

    if pending:
        # a handover or hybrid spawn is still materializing; issuing another
        # transition now would let its no-spawn second phase apply instantly
        # and collapse capacity before the booting instances serve
        return ControllerState(state.mode, pending), []

    if is_stable(spec, lam_now, lam_pred):
        target = solve_horizontal(spec, lam_now)
        if not _matches_plan(merged, target):
            actions = plan_v2h_transition(merged, target, t=now_ms)
            for a in actions:
                if a.kind is ActionKind.SPAWN_INSTANCES:
                    pending = pending + (
                        PendingSpawn(a.stage, a.count, now_ms + cold_start_ms),
                    )
            return ControllerState(Mode.HORIZONTAL_STEADY, pending), actions
        return ControllerState(Mode.HORIZONTAL_STEADY, pending), []

    return ControllerState(state.mode, pending), []
