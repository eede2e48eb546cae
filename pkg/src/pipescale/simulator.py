"""Deterministic discrete-event replay of a workload trace through the
pipeline under a chosen autoscaling policy.

Arrivals are per-second Poisson counts (seeded) jittered uniformly inside
their second. Each stage has one central queue; batches dispatch round-robin
to the earliest-free ready instance, and a partial batch is flushed once the
head request has waited longer than the modeled batch-forming delay. A control
loop ticks every control period, feeds the policy the observed ingress rate,
and applies the emitted actions with adapter delays: batch changes are
immediate, core changes take effect after a short in-place delay, and spawned
instances only serve after the cold-start interval. Actions tagged
after_spawns wait until every spawn issued alongside them is ready.

Core-seconds accrue from the moment an instance is requested (resources are
reserved while it boots) until it is retired, via two independent
accumulators: a time-major integral split into per-second buckets and a
per-instance segment sum, which the report carries for cross-checking.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .optimizer import (
    Infeasible,
    PipelinePlan,
    PipelineSpec,
    PlanKind,
    StagePlan,
    solve_horizontal,
    solve_vertical,
)
from .predictor import WindowedMaxPredictor
from .profile import ModelProfile, latency, throughput
from .queueing import queue_delay
from .transitions import (
    ActionKind,
    ControllerState,
    Mode,
    ScalingAction,
    StageConfig,
    plan_h2v_scaleup,
    retire_instances,
    set_batch,
    spawn_instances,
    step,
)


class ConfigError(ValueError):
    """Scenario fields are inconsistent or incomplete."""


class Policy(Enum):
    JOINT = "joint"
    HORIZONTAL_ONLY = "horizontal"
    VERTICAL_ONLY = "vertical"
    STATIC = "static"


class DropPolicy(Enum):
    AT_SLO = "at_slo"
    AT_3X_SLO = "at_3x_slo"
    NEVER = "never"


class RequestStatus(Enum):
    IN_FLIGHT = "in_flight"
    SERVED = "served"
    DROPPED = "dropped"


@dataclass(frozen=True)
class WorkloadTrace:
    """Per-second target arrival rates driving Poisson generation."""

    rps: tuple[int, ...]
    scale: float = 1.0

    def __post_init__(self) -> None:
        if not self.rps:
            raise ValueError("trace must be nonempty")
        if any(r < 0 for r in self.rps):
            raise ValueError("trace rates must be nonnegative")

    def __len__(self) -> int:
        return len(self.rps)


@dataclass(frozen=True)
class Scenario:
    """Everything one simulation run needs."""

    spec: PipelineSpec
    trace: WorkloadTrace
    policy: Policy = Policy.JOINT
    drop_policy: DropPolicy = DropPolicy.AT_SLO
    seed: int = 0
    cold_start_ms: int = 5500
    inplace_delay_ms: int = 100
    control_period_ms: int = 1000
    static_plan: PipelinePlan | None = None
    predictor_window_s: int = 120
    predictor_lookback_s: int = 30
    predictor_horizon_s: int = 10
    predictor_headroom: float = 1.0
    flush_slack_ms: float = 0.0
    drain_cap_s: int = 300
    initial_lambda: float | None = None

    def __post_init__(self) -> None:
        if min(self.cold_start_ms, self.inplace_delay_ms, self.control_period_ms) <= 0:
            raise ConfigError("timing knobs must be positive")
        if self.policy is Policy.STATIC and self.static_plan is None:
            raise ConfigError("static policy needs a static_plan")
        if self.static_plan is not None and len(self.static_plan.stage_plans) != len(self.spec.stages):
            raise ConfigError("static_plan stage count does not match the pipeline")
        if self.drain_cap_s < 0:
            raise ConfigError("drain_cap_s must be nonnegative")
        for p, sp in zip(self.spec.stages, (self.static_plan.stage_plans if self.static_plan else ())):
            if sp.batch > p.b_max or sp.cores > p.c_max:
                raise ConfigError(f"static_plan exceeds profile limits for {p.name}")


@dataclass(frozen=True)
class ControlLogRow:
    t_ms: int
    lam_obs: int
    lam_pred: float | None
    mode: Mode | None
    config_cores: int
    n_actions: int


@dataclass
class SimReport:
    """Per-second series plus run aggregates. Deterministic per seed."""

    seconds: int
    rps: list[int]
    violations: list[int]
    drops: list[int]
    p99_ms: list[float]
    cost_cores: list[float]
    arrivals: int
    served: int
    dropped: int
    in_flight_end: int
    served_late: int
    violation_rate: float
    total_core_seconds: float
    core_seconds_check: float
    p99_ms_overall: float
    control_log: list[ControlLogRow] = field(default_factory=list)
    action_log: list[tuple[int, ScalingAction]] = field(default_factory=list)

    @property
    def violating_outcomes(self) -> int:
        """Requests whose outcome violated the SLO: served late or dropped."""
        return self.served_late + self.dropped


class Request:
    __slots__ = ("id", "arrival_ms", "status", "enq_ms", "dispatch_ms", "finish_ms")

    def __init__(self, rid: int, arrival_ms: float, n_stages: int):
        self.id = rid
        self.arrival_ms = arrival_ms
        self.status = RequestStatus.IN_FLIGHT
        self.enq_ms = [math.nan] * n_stages
        self.dispatch_ms = [math.nan] * n_stages
        self.finish_ms = [math.nan] * n_stages

    @property
    def e2e_ms(self) -> float:
        return self.finish_ms[-1] - self.arrival_ms


class InstanceState:
    __slots__ = (
        "id", "stage", "cores", "spawned_at_ms", "ready_at_ms", "busy_until_ms",
        "retiring", "live", "segments", "intervals",
    )

    def __init__(self, iid: int, stage: int, cores: int, spawned_at_ms: float, ready_at_ms: float):
        self.id = iid
        self.stage = stage
        self.cores = cores
        self.spawned_at_ms = spawned_at_ms
        self.ready_at_ms = ready_at_ms
        self.busy_until_ms = 0.0
        self.retiring = False
        self.live = True
        self.segments: list[tuple[float, int]] = [(spawned_at_ms, cores)]
        self.intervals: list[tuple[float, float]] = []

    def idle_at(self, t: float) -> bool:
        return self.live and not self.retiring and self.ready_at_ms <= t and self.busy_until_ms <= t

    def set_cores(self, t: float, cores: int) -> None:
        if cores != self.cores:
            self.segments.append((t, cores))
            self.cores = cores

    def cost_until(self, t: float) -> float:
        """Core-seconds consumed from spawn until t (or retirement if earlier)."""
        total = 0.0
        seg = self.segments
        for i, (start, cores) in enumerate(seg):
            end = seg[i + 1][0] if i + 1 < len(seg) else t
            total += cores * max(0.0, min(end, t) - start) / 1000.0
        return total


def should_drop(request: Request, now_ms: float, drop_policy: DropPolicy, slo_ms: int) -> bool:
    """Queue back-pressure relief: drop once a request's age passes the bound."""
    age = now_ms - request.arrival_ms
    if drop_policy is DropPolicy.AT_SLO:
        return age >= slo_ms
    if drop_policy is DropPolicy.AT_3X_SLO:
        return age >= 3 * slo_ms
    return False


def batch_dispatch_rule(
    head_enqueued_ms: float,
    queue_len: int,
    batch: int,
    now_ms: float,
    lam: float,
    slack_ms: float = 0.0,
) -> int:
    """How many requests to dispatch now: a full batch once the queue holds
    one, a partial batch when the head has waited past the modeled forming
    delay plus slack, otherwise 0 (keep waiting)."""
    if queue_len <= 0:
        return 0
    if queue_len >= batch:
        return batch
    if now_ms - head_enqueued_ms > queue_delay(batch, lam) + slack_ms:
        return queue_len
    return 0


class _StageRuntime:
    __slots__ = ("idx", "profile", "batch", "queue", "q_head", "instances", "rr", "flush_token")

    def __init__(self, idx: int, profile: ModelProfile, batch: int):
        self.idx = idx
        self.profile = profile
        self.batch = batch
        self.queue: list[tuple[float, Request]] = []
        self.q_head = 0
        self.instances: list[InstanceState] = []
        self.rr = 0
        self.flush_token = 0

    def qlen(self) -> int:
        return len(self.queue) - self.q_head

    def q_peek(self) -> tuple[float, Request]:
        return self.queue[self.q_head]

    def q_pop(self) -> tuple[float, Request]:
        item = self.queue[self.q_head]
        self.q_head += 1
        if self.q_head > 4096 and self.q_head * 2 > len(self.queue):
            del self.queue[: self.q_head]
            self.q_head = 0
        return item

    def live_instances(self) -> list[InstanceState]:
        return [i for i in self.instances if i.live]


class _Barrier:
    __slots__ = ("waiting", "actions")

    def __init__(self, waiting: set[int], actions: list[ScalingAction]):
        self.waiting = waiting
        self.actions = actions


def _fallback_horizontal(spec: PipelineSpec, lam: float) -> PipelinePlan:
    """Smallest-batch plan used when even the optimal one-core plan cannot
    meet the SLO; capacity still covers lam so the backlog stays bounded."""
    plans = tuple(
        StagePlan(batch=1, cores=1, instances=max(1, math.ceil(lam / throughput(p, 1, 1))))
        for p in spec.stages
    )
    return PipelinePlan(
        kind=PlanKind.HORIZONTAL,
        stage_plans=plans,
        total_cores=sum(sp.instances for sp in plans),
        predicted_e2e_ms=sum(latency(p, 1, 1) for p in spec.stages),
        lam=lam,
    )


def _best_effort_vertical(spec: PipelineSpec, lam: float) -> PipelinePlan:
    """Max-throughput single-instance config for rates vertical scaling
    cannot fully serve: every stage runs c_max cores with the batch that
    maximizes throughput while keeping processing latency inside the SLO."""
    plans = []
    for p in spec.stages:
        best_b, best_h = 1, 0.0
        for b in range(1, p.b_max + 1):
            if latency(p, b, p.c_max) > spec.slo_ms:
                break
            h = throughput(p, b, p.c_max)
            if h > best_h:
                best_b, best_h = b, h
        plans.append(StagePlan(batch=best_b, cores=p.c_max, instances=1))
    plans = tuple(plans)
    e2e = sum(latency(p, sp.batch, sp.cores) for p, sp in zip(spec.stages, plans))
    return PipelinePlan(
        kind=PlanKind.VERTICAL,
        stage_plans=plans,
        total_cores=sum(sp.cores for sp in plans),
        predicted_e2e_ms=e2e,
        lam=lam,
    )


class _JointPolicy:
    """Adapter around the transition controller plus the rate predictor."""

    name = Policy.JOINT

    def __init__(self, scn: Scenario):
        self.scn = scn
        self.state = ControllerState(Mode.HORIZONTAL_STEADY)
        self.predictor = WindowedMaxPredictor(
            window_s=scn.predictor_window_s,
            lookback_s=scn.predictor_lookback_s,
            headroom=scn.predictor_headroom,
        )
        self.last_pred: float | None = None

    def initial_plan(self, lam0: float) -> PipelinePlan:
        try:
            return solve_horizontal(self.scn.spec, lam0)
        except Infeasible:
            return _fallback_horizontal(self.scn.spec, lam0)

    def on_tick(self, now_ms: int, tick: int, lam_obs: int, views: list[StageConfig]) -> list[ScalingAction]:
        self.predictor.observe(tick, lam_obs)
        lam_pred = self.predictor.predict_max(self.scn.predictor_horizon_s)
        self.last_pred = lam_pred
        self.state, actions = step(
            self.state,
            self.scn.spec,
            lam_obs,
            lam_pred,
            views,
            now_ms=now_ms,
            cold_start_ms=self.scn.cold_start_ms,
        )
        return actions

    @property
    def mode(self) -> Mode | None:
        return self.state.mode


class _HorizontalOnlyPolicy:
    """Reactive one-core scaler: re-plans on the observed rate every tick."""

    name = Policy.HORIZONTAL_ONLY

    def __init__(self, scn: Scenario):
        self.scn = scn
        self.last_pred = None
        self.mode = None

    def initial_plan(self, lam0: float) -> PipelinePlan:
        try:
            return solve_horizontal(self.scn.spec, lam0)
        except Infeasible:
            return _fallback_horizontal(self.scn.spec, lam0)

    def on_tick(self, now_ms: int, tick: int, lam_obs: int, views: list[StageConfig]) -> list[ScalingAction]:
        lam = max(lam_obs, 1)
        try:
            plan = solve_horizontal(self.scn.spec, lam)
        except Infeasible:
            plan = _fallback_horizontal(self.scn.spec, lam)
        actions: list[ScalingAction] = []
        for s, (cfg, sp) in enumerate(zip(views, plan.stage_plans)):
            if cfg.batch != sp.batch:
                actions.append(set_batch(s, sp.batch, now_ms))
            have = cfg.n_total
            if sp.instances > have:
                actions.append(spawn_instances(s, sp.instances - have, cores=1, t=now_ms))
            elif sp.instances < have:
                actions.append(retire_instances(s, have - sp.instances, t=now_ms))
        return actions


class _VerticalOnlyPolicy:
    """Reactive in-place scaler pinned to one instance per stage."""

    name = Policy.VERTICAL_ONLY

    def __init__(self, scn: Scenario):
        self.scn = scn
        self.last_pred = None
        self.mode = None
        self._ones = (1,) * len(scn.spec.stages)

    def initial_plan(self, lam0: float) -> PipelinePlan:
        try:
            return solve_vertical(self.scn.spec, lam0, instances=self._ones)
        except Infeasible:
            return _best_effort_vertical(self.scn.spec, lam0)

    def on_tick(self, now_ms: int, tick: int, lam_obs: int, views: list[StageConfig]) -> list[ScalingAction]:
        lam = max(lam_obs, 1)
        try:
            plan = solve_vertical(self.scn.spec, lam, instances=self._ones)
        except Infeasible:
            plan = _best_effort_vertical(self.scn.spec, lam)
        return plan_h2v_scaleup(views, plan, t=now_ms)


class _StaticPolicy:
    name = Policy.STATIC

    def __init__(self, scn: Scenario):
        self.scn = scn
        self.last_pred = None
        self.mode = None

    def initial_plan(self, lam0: float) -> PipelinePlan:
        return self.scn.static_plan

    def on_tick(self, now_ms: int, tick: int, lam_obs: int, views: list[StageConfig]) -> list[ScalingAction]:
        return []


_POLICIES = {
    Policy.JOINT: _JointPolicy,
    Policy.HORIZONTAL_ONLY: _HorizontalOnlyPolicy,
    Policy.VERTICAL_ONLY: _VerticalOnlyPolicy,
    Policy.STATIC: _StaticPolicy,
}

# event kinds, ordered within one timestamp by the sequence counter only
_ARRIVE, _DONE, _READY, _CORES, _FLUSH, _TICK = range(6)

_FLUSH_EPS_MS = 1e-3


class _Simulation:
    def __init__(self, scn: Scenario):
        self.scn = scn
        self.spec = scn.spec
        self.n_stages = len(scn.spec.stages)
        self.slo = scn.spec.slo_ms
        self.rng = np.random.default_rng(scn.seed)
        self.heap: list[tuple[float, int, int, object]] = []
        self.seq = 0
        self.now = 0.0
        self.next_iid = 0
        self.lam_est = 1.0

        self.requests: list[Request] = []
        self.stages: list[_StageRuntime] = []
        self.retired: list[InstanceState] = []
        self.barriers: dict[int, list[_Barrier]] = {}

        self.total_cores = 0
        self.last_cost_t = 0.0
        self.cost_buckets: dict[int, float] = {}

        self.served = 0
        self.dropped = 0
        self.served_late = 0
        self.viol_per_sec: dict[int, int] = {}
        self.drop_per_sec: dict[int, int] = {}
        self.lat_per_sec: dict[int, list[float]] = {}
        self.all_lat: list[float] = []

        self.control_log: list[ControlLogRow] = []
        self.action_log: list[tuple[int, ScalingAction]] = []

    # -- event plumbing -----------------------------------------------------

    def push(self, t: float, kind: int, payload: object) -> None:
        heapq.heappush(self.heap, (t, self.seq, kind, payload))
        self.seq += 1

    # -- cost accounting ----------------------------------------------------

    def _accrue(self, t: float) -> None:
        t0 = self.last_cost_t
        if t <= t0:
            return
        while t0 < t:
            sec = int(t0 // 1000)
            boundary = min(t, (sec + 1) * 1000.0)
            self.cost_buckets[sec] = self.cost_buckets.get(sec, 0.0) + \
                self.total_cores * (boundary - t0) / 1000.0
            t0 = boundary
        self.last_cost_t = t

    def _cores_delta(self, t: float, delta: int) -> None:
        self._accrue(t)
        self.total_cores += delta

    # -- instance lifecycle -------------------------------------------------

    def _spawn(self, stage: int, cores: int, t: float, warm: bool) -> InstanceState:
        ready = t if warm else t + self.scn.cold_start_ms
        inst = InstanceState(self.next_iid, stage, cores, t, ready)
        self.next_iid += 1
        self.stages[stage].instances.append(inst)
        self._cores_delta(t, cores)
        if not warm:
            self.push(ready, _READY, inst)
        return inst

    def _remove_instance(self, inst: InstanceState, t: float) -> None:
        inst.live = False
        inst.segments.append((t, 0))
        self._cores_delta(t, -inst.cores)
        self.retired.append(inst)
        st = self.stages[inst.stage]
        st.instances = [i for i in st.instances if i.live]
        if st.rr >= len(st.instances):
            st.rr = 0
        self._release_barriers(inst.id, t)

    def _release_barriers(self, iid: int, t: float) -> None:
        for barrier in self.barriers.pop(iid, []):
            barrier.waiting.discard(iid)
            if not barrier.waiting and barrier.actions:
                acts, barrier.actions = barrier.actions, []
                self.apply_actions(acts, t, allow_defer=False)

    def _retire(self, stage: int, count: int, t: float) -> None:
        st = self.stages[stage]
        live = st.live_instances()
        booting = sorted((i for i in live if i.ready_at_ms > t), key=lambda i: -i.id)
        idle = sorted((i for i in live if i.idle_at(t)), key=lambda i: -i.id)
        busy = sorted(
            (i for i in live if i.ready_at_ms <= t and not i.idle_at(t) and not i.retiring),
            key=lambda i: -i.id,
        )
        for inst in (booting + idle + busy)[:count]:
            if inst.busy_until_ms > t:
                inst.retiring = True  # drained at batch completion
            else:
                self._remove_instance(inst, t)

    # -- adapter ------------------------------------------------------------

    def _purge_deferred(self, stage: int) -> None:
        """A newer decision supersedes any queued second-phase actions for the
        stage; without this a stale deferred downsize could collapse capacity
        after a burst re-raised it."""
        for barriers in self.barriers.values():
            for barrier in barriers:
                if barrier.actions:
                    barrier.actions = [a for a in barrier.actions if a.stage != stage]

    def apply_actions(self, actions: list[ScalingAction], t: float, allow_defer: bool = True) -> None:
        spawned: list[int] = []
        deferred: list[ScalingAction] = []
        touched: set[int] = set()
        for a in actions:
            self.action_log.append((int(t), a))
            if a.after_spawns and allow_defer:
                deferred.append(a)
                continue
            touched.add(a.stage)
            if allow_defer:
                self._purge_deferred(a.stage)
            if a.kind is ActionKind.SET_BATCH:
                self.stages[a.stage].batch = a.batch
            elif a.kind is ActionKind.SET_CORES:
                self.push(t + self.scn.inplace_delay_ms, _CORES, (a.stage, a.cores))
            elif a.kind is ActionKind.SPAWN_INSTANCES:
                for _ in range(a.count):
                    spawned.append(self._spawn(a.stage, a.cores, t, warm=False).id)
            elif a.kind is ActionKind.RETIRE_INSTANCES:
                self._retire(a.stage, a.count, t)
        if deferred:
            if spawned:
                barrier = _Barrier(set(spawned), deferred)
                for iid in spawned:
                    self.barriers.setdefault(iid, []).append(barrier)
            else:
                self.apply_actions(deferred, t, allow_defer=False)
        for s in touched:
            self.try_dispatch(s, t)

    # -- queueing and dispatch ----------------------------------------------

    def _next_idle(self, st: _StageRuntime, t: float) -> InstanceState | None:
        n = len(st.instances)
        for k in range(n):
            idx = (st.rr + k) % n
            inst = st.instances[idx]
            if inst.idle_at(t):
                st.rr = (idx + 1) % n
                return inst
        return None

    def _drop(self, req: Request, t: float) -> None:
        req.status = RequestStatus.DROPPED
        self.dropped += 1
        sec = int(t // 1000)
        self.drop_per_sec[sec] = self.drop_per_sec.get(sec, 0) + 1

    def try_dispatch(self, s: int, t: float) -> None:
        st = self.stages[s]
        while True:
            while st.qlen() and should_drop(st.q_peek()[1], t, self.scn.drop_policy, self.slo):
                self._drop(st.q_pop()[1], t)
            qlen = st.qlen()
            if qlen == 0:
                st.flush_token += 1
                return
            head_t = st.q_peek()[0]
            k = batch_dispatch_rule(head_t, qlen, st.batch, t, self.lam_est, self.scn.flush_slack_ms)
            if k == 0:
                if any(i.idle_at(t) for i in st.instances):
                    st.flush_token += 1
                    deadline = head_t + queue_delay(st.batch, self.lam_est) + \
                        self.scn.flush_slack_ms + _FLUSH_EPS_MS
                    self.push(max(deadline, t), _FLUSH, (s, st.flush_token))
                return
            inst = self._next_idle(st, t)
            if inst is None:
                return
            # Fill the batch with a drop check on every pull: past the first
            # stage, expired requests are not necessarily a queue prefix.
            batch: list[Request] = []
            while len(batch) < k and st.qlen():
                req = st.q_pop()[1]
                if should_drop(req, t, self.scn.drop_policy, self.slo):
                    self._drop(req, t)
                else:
                    batch.append(req)
            if not batch:
                continue
            proc = latency(st.profile, len(batch), inst.cores)
            assert inst.ready_at_ms <= t and inst.busy_until_ms <= t
            inst.busy_until_ms = t + proc
            inst.intervals.append((t, t + proc))
            for req in batch:
                req.dispatch_ms[s] = t
            self.push(t + proc, _DONE, (s, inst, batch))

    # -- event handlers -----------------------------------------------------

    def _on_arrive(self, req: Request, t: float) -> None:
        req.enq_ms[0] = t
        self.stages[0].queue.append((t, req))
        self.try_dispatch(0, t)

    def _on_done(self, s: int, inst: InstanceState, batch: list[Request], t: float) -> None:
        for req in batch:
            req.finish_ms[s] = t
        if s + 1 < self.n_stages:
            nxt = self.stages[s + 1]
            for req in batch:
                req.enq_ms[s + 1] = t
                nxt.queue.append((t, req))
            self.try_dispatch(s + 1, t)
        else:
            sec = int(t // 1000)
            for req in batch:
                req.status = RequestStatus.SERVED
                self.served += 1
                e2e = req.e2e_ms
                self.all_lat.append(e2e)
                self.lat_per_sec.setdefault(sec, []).append(e2e)
                if e2e > self.slo:
                    self.served_late += 1
                    self.viol_per_sec[sec] = self.viol_per_sec.get(sec, 0) + 1
        if inst.retiring and inst.live:
            self._remove_instance(inst, t)
        else:
            self.try_dispatch(s, t)

    def _views(self, t: float, include_booting: bool) -> list[StageConfig]:
        """Policy-facing state; retiring instances no longer count as capacity."""
        views = []
        for st in self.stages:
            ready = tuple(
                i.cores for i in st.instances if i.live and not i.retiring and i.ready_at_ms <= t
            )
            booting = sum(
                1 for i in st.instances if i.live and not i.retiring and i.ready_at_ms > t
            )
            views.append(StageConfig(st.batch, ready, pending=booting if include_booting else 0))
        return views

    def _on_tick(self, tick: int, t: float, policy) -> None:
        sec = tick - 1
        lam_obs = self.arrivals_per_sec[sec] if 0 <= sec < len(self.arrivals_per_sec) else 0
        self.lam_est = float(max(lam_obs, 1))
        include_booting = self.scn.policy is not Policy.JOINT
        views = self._views(t, include_booting)
        actions = policy.on_tick(int(t), tick, lam_obs, views)
        self.control_log.append(
            ControlLogRow(
                t_ms=int(t),
                lam_obs=lam_obs,
                lam_pred=policy.last_pred,
                mode=policy.mode,
                config_cores=self.total_cores,
                n_actions=len(actions),
            )
        )
        if actions:
            self.apply_actions(actions, t)
        for s in range(self.n_stages):
            self.try_dispatch(s, t)
        in_flight = len(self.requests) - self.served - self.dropped
        trace_end = len(self.scn.trace) * 1000.0
        if t < trace_end or in_flight > 0:
            self.push(t + self.scn.control_period_ms, _TICK, tick + 1)

    # -- main loop ------------------------------------------------------------

    def run(self) -> SimReport:
        scn = self.scn
        trace = scn.trace
        lam0 = scn.initial_lambda if scn.initial_lambda is not None else float(max(trace.rps[0], 1))
        policy = _POLICIES[scn.policy](scn)
        init = policy.initial_plan(lam0)
        for s, sp in enumerate(init.stage_plans):
            self.stages.append(_StageRuntime(s, self.spec.stages[s], sp.batch))
            for _ in range(sp.instances):
                self._spawn(s, sp.cores, 0.0, warm=True)

        self.arrivals_per_sec = []
        rid = 0
        for sec, rate in enumerate(trace.rps):
            n = int(self.rng.poisson(rate))
            self.arrivals_per_sec.append(n)
            if n:
                offs = np.sort(self.rng.uniform(0.0, 1000.0, size=n))
                for off in offs:
                    req = Request(rid, sec * 1000.0 + float(off), self.n_stages)
                    rid += 1
                    self.requests.append(req)
                    self.push(req.arrival_ms, _ARRIVE, req)
        self.lam_est = float(max(trace.rps[0], 1))
        self.push(scn.control_period_ms, _TICK, 1)

        hard_end = len(trace) * 1000.0 + scn.drain_cap_s * 1000.0
        while self.heap:
            t, _, kind, payload = heapq.heappop(self.heap)
            if t > hard_end:
                break
            self.now = t
            if kind == _ARRIVE:
                self._on_arrive(payload, t)
            elif kind == _DONE:
                s, inst, batch = payload
                self._on_done(s, inst, batch, t)
            elif kind == _READY:
                if payload.live:
                    self._release_barriers(payload.id, t)
                    self.try_dispatch(payload.stage, t)
            elif kind == _CORES:
                s, cores = payload
                self._accrue(t)
                for inst in self.stages[s].instances:
                    if inst.live and inst.cores != cores:
                        self.total_cores += cores - inst.cores
                        inst.set_cores(t, cores)
            elif kind == _FLUSH:
                s, token = payload
                if token == self.stages[s].flush_token:
                    self.try_dispatch(s, t)
            elif kind == _TICK:
                self._on_tick(payload, t, policy)

        end_ms = max(self.now, len(trace) * 1000.0)
        self._accrue(end_ms)
        return self._report(end_ms)

    # -- reporting ------------------------------------------------------------

    def _report(self, end_ms: float) -> SimReport:
        seconds = max(len(self.scn.trace), math.ceil(end_ms / 1000.0))
        rps = [
            self.arrivals_per_sec[s] if s < len(self.arrivals_per_sec) else 0
            for s in range(seconds)
        ]
        violations = [self.viol_per_sec.get(s, 0) for s in range(seconds)]
        drops = [self.drop_per_sec.get(s, 0) for s in range(seconds)]
        p99 = [
            float(np.percentile(self.lat_per_sec[s], 99)) if s in self.lat_per_sec else 0.0
            for s in range(seconds)
        ]
        cost = [self.cost_buckets.get(s, 0.0) for s in range(seconds)]

        arrivals = len(self.requests)
        in_flight = sum(1 for r in self.requests if r.status is RequestStatus.IN_FLIGHT)
        total_cost = sum(self.cost_buckets.values())
        check = sum(i.cost_until(end_ms) for i in self.retired) + sum(
            i.cost_until(end_ms) for st in self.stages for i in st.instances if i.live
        )
        violating = self.served_late + self.dropped
        return SimReport(
            seconds=seconds,
            rps=rps,
            violations=violations,
            drops=drops,
            p99_ms=p99,
            cost_cores=cost,
            arrivals=arrivals,
            served=self.served,
            dropped=self.dropped,
            in_flight_end=in_flight,
            served_late=self.served_late,
            violation_rate=(violating / arrivals) if arrivals else 0.0,
            total_core_seconds=total_cost,
            core_seconds_check=check,
            p99_ms_overall=float(np.percentile(self.all_lat, 99)) if self.all_lat else 0.0,
            control_log=self.control_log,
            action_log=self.action_log,
        )


def run(scenario: Scenario) -> SimReport:
    """Simulate one scenario end to end (trace plus drain) and report."""
    return _Simulation(scenario).run()
