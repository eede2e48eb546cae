"""Per-model performance profiles: latency and throughput as a function of
batch size and CPU core allocation.

A profile is the four-coefficient latency surface

    l(b, c) = gamma * b / c + epsilon / c + delta * b + eta   [milliseconds]

fitted offline from measured (batch, cores, latency) samples. Throughput is
derived as the batch served per processing interval, 1000 * b / l(b, c)
requests per second.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import nnls


class OutOfRange(ValueError):
    """Batch or core argument outside the profile's fitted range."""


class DegenerateSamples(ValueError):
    """Profiling samples do not span the four latency basis directions."""


@dataclass(frozen=True)
class ProfileSample:
    """One measured latency point: a batch of `batch` requests on `cores` CPUs."""

    batch: int
    cores: int
    latency_ms: float

    def __post_init__(self) -> None:
        if self.batch < 1 or self.cores < 1:
            raise ValueError(f"batch and cores must be >= 1, got ({self.batch}, {self.cores})")
        if not self.latency_ms > 0:
            raise ValueError(f"latency_ms must be positive, got {self.latency_ms}")


@dataclass(frozen=True)
class ModelProfile:
    """Fitted latency coefficients plus the (b, c) range they are valid on."""

    gamma: float
    epsilon: float
    delta: float
    eta: float
    b_max: int = 16
    c_max: int = 16
    name: str = "model"

    def __post_init__(self) -> None:
        for field in ("gamma", "epsilon", "delta", "eta"):
            if getattr(self, field) < 0:
                raise ValueError(f"{field} must be nonnegative, got {getattr(self, field)}")
        if self.b_max < 1 or self.c_max < 1:
            raise ValueError(f"b_max and c_max must be >= 1, got ({self.b_max}, {self.c_max})")


def latency(profile: ModelProfile, b: int, c: int) -> float:
    """Processing latency in ms for one batch of size `b` on `c` cores."""
    if not 1 <= b <= profile.b_max:
        raise OutOfRange(f"batch {b} outside [1, {profile.b_max}] for {profile.name}")
    if not 1 <= c <= profile.c_max:
        raise OutOfRange(f"cores {c} outside [1, {profile.c_max}] for {profile.name}")
    return profile.gamma * b / c + profile.epsilon / c + profile.delta * b + profile.eta


def throughput(profile: ModelProfile, b: int, c: int) -> float:
    """Steady-state requests/second one instance sustains at (b, c).

    Defined as the batch completed per processing interval:
    1000 * b / latency(b, c).
    """
    return 1000.0 * b / latency(profile, b, c)


def fit_profile(
    samples: Iterable[ProfileSample],
    b_max: int = 16,
    c_max: int = 16,
    name: str = "model",
) -> ModelProfile:
    """Least-squares fit of the latency surface, constrained to nonnegative
    coefficients so the monotonicity properties the planner relies on hold.

    Needs at least 4 samples spanning >= 2 distinct batch and >= 2 distinct
    core values; anything less leaves the design matrix rank-deficient and
    raises DegenerateSamples.
    """
    pts = list(samples)
    design = np.array([[s.batch / s.cores, 1.0 / s.cores, float(s.batch), 1.0] for s in pts])
    if len(pts) < 4 or np.linalg.matrix_rank(design) < 4:
        raise DegenerateSamples(
            f"need >= 4 samples spanning the {{b/c, 1/c, b, 1}} basis, got {len(pts)}"
        )
    target = np.array([s.latency_ms for s in pts])
    coeffs, _ = nnls(design, target)
    gamma, epsilon, delta, eta = (float(v) for v in coeffs)
    return ModelProfile(gamma, epsilon, delta, eta, b_max=b_max, c_max=c_max, name=name)


def synth_samples(
    profile: ModelProfile,
    batches: Sequence[int],
    cores: Sequence[int],
    noise_sd: float = 0.0,
    rng: np.random.Generator | None = None,
    repeats: int = 1,
) -> list[ProfileSample]:
    """Generate samples from a known profile, optionally with Gaussian noise.

    Convenience for round-trip fitting and for building desk-scale scenarios
    without measurement hardware.
    """
    if noise_sd > 0 and rng is None:
        raise ValueError("noisy generation needs an explicit rng for reproducibility")
    out = []
    for _ in range(repeats):
        for b in batches:
            for c in cores:
                l = latency(profile, b, c)
                if noise_sd > 0:
                    l = max(1e-6, l + float(rng.normal(0.0, noise_sd)))
                out.append(ProfileSample(b, c, l))
    return out
