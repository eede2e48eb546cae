"""Planner and discrete-event simulation lab for joint vertical + horizontal
autoscaling of multi-stage inference pipelines."""

from .profile import (
    DegenerateSamples,
    ModelProfile,
    OutOfRange,
    ProfileSample,
    fit_profile,
    latency,
    synth_samples,
    throughput,
)
from .queueing import QueueParams, queue_delay, queue_delay_worst_case
from .optimizer import (
    GridTooLarge,
    Infeasible,
    PipelinePlan,
    PipelineSpec,
    PlanKind,
    StagePlan,
    brute_force_optimize,
    solve_horizontal,
    solve_hybrid,
    solve_vertical,
)
from .predictor import (
    NoHistory,
    NonMonotonicTime,
    RateObservation,
    RatePredictor,
    WindowedMaxPredictor,
)
from .transitions import (
    ActionKind,
    ControllerState,
    Mode,
    PendingSpawn,
    ScalingAction,
    StageConfig,
    amdahl_speedup,
    is_stable,
    plan_h2v_scaleup,
    plan_v2h_transition,
    step,
)
from .simulator import (
    ConfigError,
    DropPolicy,
    Policy,
    Request,
    RequestStatus,
    Scenario,
    SimReport,
    WorkloadTrace,
    batch_dispatch_rule,
    run,
    should_drop,
)
from .io import (
    GapError,
    ParseError,
    RunConfig,
    load_pipeline_spec,
    load_run_config,
    load_samples_csv,
    load_trace,
    save_trace,
    scenario_from_config,
    write_report,
)

__version__ = "0.1.0"
