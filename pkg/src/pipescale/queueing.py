"""Queuing delay of a batch-forming stage queue.

The first request of a batch waits for the last one to arrive, so at arrival
rate `lam` the head of a size-`b` batch waits (b - 1) / lam seconds. The
worst-case form adds the wait for a free instance; for any plan the optimizer
emits (which guarantees n * h >= lam) that second term is nonpositive, so the
simple form is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

from .profile import ModelProfile, latency


@dataclass(frozen=True)
class QueueParams:
    """Arguments of the queuing-delay model for one stage."""

    b: int
    n: int
    lam: float

    def __post_init__(self) -> None:
        if self.b < 1 or self.n < 1:
            raise ValueError(f"b and n must be >= 1, got ({self.b}, {self.n})")
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")


def queue_delay(b: int, lam: float) -> float:
    """Batch-forming wait of the head request, in ms."""
    if b < 1:
        raise ValueError(f"b must be >= 1, got {b}")
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    return 1000.0 * (b - 1) / lam


def queue_delay_worst_case(
    profile: ModelProfile, b: int, c: int, n: int, lam: float
) -> float:
    """Worst-case queuing delay in ms, including the wait for a busy instance.

    max( (b-1)/lam , l(b,c) - (n*b + 1)/lam ), with both terms in ms. Used to
    validate that the simple queue_delay form is safe for planner outputs, not
    by the planner itself.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    form_wait = 1000.0 * (b - 1) / lam
    busy_wait = latency(profile, b, c) - 1000.0 * (n * b + 1) / lam
    return max(form_wait, busy_wait)
