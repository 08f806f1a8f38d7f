"""Triangular drive protocols and the containers sweep engines fill in."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass(frozen=True)
class SweepProtocol:
    """Symmetric triangular ramp of the drive amplitude.

    The drive rises linearly from drive_start to drive_start + drive_span over
    ramp_time, then falls back at the same rate; total duration 2 * ramp_time.
    samples is the number of recorded points per leg, laid on a uniform drive
    grid that includes both endpoints.
    """

    drive_start: float
    drive_span: float
    ramp_time: float
    samples: int = 201

    def __post_init__(self) -> None:
        if self.drive_start < 0:
            raise ValueError("drive_start must be non-negative")
        if self.drive_span <= 0:
            raise ValueError("drive_span must be positive")
        if self.ramp_time <= 0:
            raise ValueError("ramp_time must be positive")
        if self.samples < 2:
            raise ValueError("need at least two samples per leg")

    @property
    def total_time(self) -> float:
        return 2.0 * self.ramp_time

    def drive(self, t):
        """Drive amplitude at time t (scalar or array), valid on [0, 2 ramp_time]."""
        t = np.asarray(t, dtype=float)
        up = self.drive_start + (t / self.ramp_time) * self.drive_span
        down = self.drive_start - ((t - 2.0 * self.ramp_time) / self.ramp_time) * self.drive_span
        out = np.where(t <= self.ramp_time, up, down)
        return out if out.ndim else float(out)

    def drive_grid(self) -> np.ndarray:
        """Ascending drive values at which both legs are sampled."""
        return np.linspace(self.drive_start, self.drive_start + self.drive_span, self.samples)

    def up_times(self) -> np.ndarray:
        """Times on the rising leg matching drive_grid(), ascending."""
        # clipped: the endpoint can overshoot ramp_time by one ulp
        raw = (self.drive_grid() - self.drive_start) / self.drive_span * self.ramp_time
        return np.clip(raw, 0.0, self.ramp_time)

    def down_times(self) -> np.ndarray:
        """Times on the falling leg, ascending in time (descending in drive)."""
        raw = 2.0 * self.ramp_time - self.up_times()[::-1]
        return np.clip(raw, self.ramp_time, 2.0 * self.ramp_time)


@dataclass
class HysteresisTrace:
    """One closed loop: observables on both legs, aligned to an ascending drive grid."""

    protocol: SweepProtocol
    drive: np.ndarray
    n_up: np.ndarray
    n_down: np.ndarray
    g2_up: np.ndarray
    g2_down: np.ndarray
    metadata: dict[str, Any] = field(default_factory=dict)

    def population_gap(self) -> np.ndarray:
        return np.abs(self.n_down - self.n_up)


@dataclass
class DimerTrace:
    """Loop observables for two coupled resonators on an ascending drive grid."""

    protocol: SweepProtocol
    drive: np.ndarray
    n1_up: np.ndarray
    n1_down: np.ndarray
    n2_up: np.ndarray
    n2_down: np.ndarray
    g2_local_up: np.ndarray
    g2_local_down: np.ndarray
    g2_cross_up: np.ndarray
    g2_cross_down: np.ndarray
    metadata: dict[str, Any] = field(default_factory=dict)

    def site_mean_up(self) -> np.ndarray:
        return 0.5 * (self.n1_up + self.n2_up)

    def site_mean_down(self) -> np.ndarray:
        return 0.5 * (self.n1_down + self.n2_down)
