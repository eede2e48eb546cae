"""Walk the scaling-mode state machine directly, without the simulator.

Feeds a scripted rate path to the controller one tick at a time and prints
the mode and the actions it emits. The path rises past the in-place ceiling
(forcing the hybrid spawn path), then settles until the forecast agrees with
the observed rate and the one-core handover fires.
"""

from pipescale import (
    ControllerState,
    ModelProfile,
    PipelineSpec,
    StageConfig,
    WindowedMaxPredictor,
    step,
)
from pipescale.transitions import ActionKind

COLD_START_MS = 5500

profile = ModelProfile(gamma=10.0, epsilon=40.0, delta=2.0, eta=5.0, name="detector")
spec = PipelineSpec(stages=(profile,), slo_ms=1000)

# scripted per-second ingress: calm, burst past the single-instance in-place
# ceiling (~323 rps for this profile), then a calm plateau
path = [20] * 5 + [120] * 4 + [400] * 6 + [40] * 40


class ToyAdapter:
    """Single-stage stand-in for the executor: applies actions instantly,
    except spawns (ready after the cold start) and second-phase actions
    (applied when the spawns land)."""

    def __init__(self):
        self.batch = 1
        self.cores = [1]
        self.pending = []   # (ready_at_ms, count, cores)
        self.deferred = []  # after_spawns actions waiting on self.pending

    def settle(self, now_ms):
        landed = [p for p in self.pending if p[0] <= now_ms]
        self.pending = [p for p in self.pending if p[0] > now_ms]
        for _, count, cores in landed:
            self.cores.extend([cores] * count)
        if landed and not self.pending:
            deferred, self.deferred = self.deferred, []
            self.apply(deferred, now_ms)

    def apply(self, actions, now_ms):
        for a in actions:
            if a.after_spawns and any(
                x.kind is ActionKind.SPAWN_INSTANCES for x in actions
            ):
                self.deferred.append(a)
            elif a.kind is ActionKind.SET_BATCH:
                self.batch = a.batch
            elif a.kind is ActionKind.SET_CORES:
                self.cores = [a.cores] * len(self.cores)
            elif a.kind is ActionKind.SPAWN_INSTANCES:
                self.pending.append((now_ms + COLD_START_MS, a.count, a.cores))
            elif a.kind is ActionKind.RETIRE_INSTANCES:
                self.cores = self.cores[: len(self.cores) - a.count]

    def view(self):
        return [StageConfig(batch=self.batch, cores=tuple(self.cores))]


def describe(a):
    tag = " [after spawns]" if a.after_spawns else ""
    if a.kind is ActionKind.SET_CORES:
        return f"set_cores({a.cores}c){tag}"
    if a.kind is ActionKind.SET_BATCH:
        return f"set_batch(b{a.batch}){tag}"
    if a.kind is ActionKind.SPAWN_INSTANCES:
        return f"spawn({a.count} x {a.cores}c){tag}"
    return f"retire({a.count}){tag}"


adapter = ToyAdapter()
predictor = WindowedMaxPredictor(lookback_s=10)
state = ControllerState()

for t, rps in enumerate(path):
    now_ms = (t + 1) * 1000
    adapter.settle(now_ms)
    predictor.observe(t, rps)
    lam_pred = predictor.predict_max()
    state, actions = step(state, spec, rps, lam_pred, adapter.view(), now_ms=now_ms)
    adapter.apply(actions, now_ms)
    acts = ", ".join(describe(a) for a in actions) if actions else "-"
    print(f"t={t:>3}s rps={rps:>4} pred={lam_pred:>5.0f} "
          f"mode={state.mode.value:<18} config=b{adapter.batch}/{adapter.cores}  {acts}")
