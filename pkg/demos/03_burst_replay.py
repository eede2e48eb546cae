"""Replay a traffic burst under the three autoscaling policies.

A single-stage pipeline idles at 20 rps, spikes to 120 rps for five seconds,
and settles back. The one-core-only scaler has to cold-start new instances
(5.5 s), the in-place scaler raises cores within 100 ms, and the joint policy
does the latter first and hands capacity back to cheap one-core instances
once the forecast stabilizes.
"""

from pipescale import (
    ModelProfile,
    PipelineSpec,
    Policy,
    Scenario,
    WorkloadTrace,
    fit_profile,
    run,
    synth_samples,
)

gen = ModelProfile(gamma=4.0, epsilon=40.0, delta=3.5, eta=4.0, name="cardet")
profile = fit_profile(
    synth_samples(gen, (1, 2, 4, 8, 16), (1, 2, 4, 8, 16)), name="cardet"
)
spec = PipelineSpec(stages=(profile,), slo_ms=1000)
trace = WorkloadTrace(tuple([20] * 10 + [120] * 5 + [20] * 25))

print("trace: 20 rps, then 120 rps for 5 s (seconds 10-14), then 20 rps")
print(f"SLO {spec.slo_ms} ms, cold start 5.5 s, in-place core change 0.1 s\n")


def spark(series, lo=0, hi=None):
    marks = " .:-=+*#%@"
    hi = hi if hi is not None else max(max(series), 1)
    return "".join(marks[min(int(v / hi * (len(marks) - 1)), len(marks) - 1)] for v in series)


reports = {}
for policy in (Policy.HORIZONTAL_ONLY, Policy.VERTICAL_ONLY, Policy.JOINT):
    reports[policy] = run(Scenario(spec=spec, trace=trace, policy=policy, seed=0))

print(f"{'policy':<12} {'violated+dropped':>16} {'served':>8} {'core-s':>8} {'p99 ms':>8}")
for policy, rep in reports.items():
    print(f"{policy.value:<12} {rep.violating_outcomes:>16} {rep.served:>8} "
          f"{rep.total_core_seconds:>8.0f} {rep.p99_ms_overall:>8.0f}")

print("\nviolations + drops per second (burst window marked):")
window = "".join("^" if 10 <= s <= 14 else " " for s in range(len(trace)))
for policy, rep in reports.items():
    combined = [v + d for v, d in zip(rep.violations, rep.drops)][: len(trace)]
    print(f"{policy.value:<12} |{spark(combined)}|")
print(f"{'burst':<12}  {window}")

print("\nallocated cores per second:")
for policy, rep in reports.items():
    print(f"{policy.value:<12} |{spark(rep.cost_cores[: len(trace)])}|")
