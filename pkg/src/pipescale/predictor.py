"""Forecast of the near-term peak request rate.

The stability check only consumes a single scalar (the maximum rate expected
over the next few seconds), so the predictor is a pluggable contract: anything
with observe()/predict_max() and deterministic behavior for a given history
qualifies. The shipped baseline returns the windowed maximum of recent
observations times a configurable headroom factor. A learned model can be
substituted without touching the controller.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Protocol


@dataclass(frozen=True)
class RateObservation:
    """One per-second arrival count at the pipeline ingress."""

    t: int
    rps: int

    def __post_init__(self) -> None:
        if self.rps < 0:
            raise ValueError(f"rps must be nonnegative, got {self.rps}")


class NonMonotonicTime(ValueError):
    """observe() called with a timestamp not after the previous one."""


class NoHistory(RuntimeError):
    """predict_max() called before any observation."""


class RatePredictor(Protocol):
    """Contract the controller consumes; implementations must be deterministic."""

    def observe(self, t: int, rps: int) -> None: ...

    def predict_max(self, horizon_s: int = 10) -> float: ...


class WindowedMaxPredictor:
    """Baseline forecaster: max observed rate over a recent lookback window.

    `window_s` bounds the retained history, `lookback_s` is how far back the
    maximum scans, and `headroom` scales the forecast (values above 1 mimic a
    learned predictor that over-shoots peaks and delays scale-down).
    """

    def __init__(self, window_s: int = 120, lookback_s: int = 30, headroom: float = 1.0):
        if window_s < 1 or lookback_s < 1:
            raise ValueError("window_s and lookback_s must be >= 1")
        if headroom <= 0:
            raise ValueError(f"headroom must be positive, got {headroom}")
        self.window_s = window_s
        self.lookback_s = lookback_s
        self.headroom = headroom
        self._history: deque[RateObservation] = deque(maxlen=window_s)

    def __len__(self) -> int:
        return len(self._history)

    def observe(self, t: int, rps: int) -> None:
        """Append one per-second arrival count; t must strictly increase."""
        if self._history and t <= self._history[-1].t:
            raise NonMonotonicTime(
                f"t={t} not after last observation t={self._history[-1].t}"
            )
        self._history.append(RateObservation(t, rps))

    def predict_max(self, horizon_s: int = 10) -> float:
        """Forecast the peak rate over the next horizon_s seconds."""
        if not self._history:
            raise NoHistory("no rate observations yet")
        span = min(len(self._history), self.lookback_s)
        recent = list(self._history)[-span:]
        return max(obs.rps for obs in recent) * self.headroom
