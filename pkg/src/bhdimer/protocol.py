"""Piecewise parameter schedules: detuning sweep followed by drive switch-off."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace


class CaptureConditionError(ValueError):
    """The final detuning lies beyond the critical detuning of the limit cycle."""


@dataclass(frozen=True)
class Segment:
    t_start: float
    t_end: float
    delta_start: float
    delta_end: float
    omega: float

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def delta(self, t: float) -> float:
        if self.delta_start == self.delta_end:
            return self.delta_start
        s = (t - self.t_start) / self.duration
        return self.delta_start + (self.delta_end - self.delta_start) * s


@dataclass(frozen=True)
class ParameterSchedule:
    segments: tuple[Segment, ...]
    J: float
    U: float
    gamma: float

    def __post_init__(self):
        if not self.segments:
            raise ValueError("schedule needs at least one segment")
        for seg in self.segments:
            if not seg.t_end > seg.t_start:
                raise ValueError(f"segment times must increase: {seg}")
        for a, b in zip(self.segments, self.segments[1:]):
            if b.t_start != a.t_end:
                raise ValueError("segments must be contiguous")
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")

    @property
    def t_start(self) -> float:
        return self.segments[0].t_start

    @property
    def t_end(self) -> float:
        return self.segments[-1].t_end

    @property
    def period(self) -> float:
        """Tunneling period T = 2 pi / J."""
        return 2 * math.pi / self.J

    def segment_at(self, t: float) -> Segment:
        # right-continuous: at a boundary the later segment applies
        for seg in reversed(self.segments):
            if t >= seg.t_start:
                return seg
        return self.segments[0]

    def __call__(self, t: float) -> tuple[float, float]:
        seg = self.segment_at(t)
        return seg.delta(t), seg.omega

    def validate(self) -> None:
        """Reject a driven stage whose detuning reaches the critical detuning."""
        for seg in self.segments:
            if seg.omega == 0:
                continue
            if self.gamma == 0:
                continue
            d_cr = critical_detuning(self.U, seg.omega, self.gamma)
            if max(seg.delta_start, seg.delta_end) >= d_cr:
                raise CaptureConditionError(
                    f"final detuning {max(seg.delta_start, seg.delta_end)} >= critical detuning {d_cr:.4g}"
                )

    def to_dict(self) -> dict:
        return {
            "J": self.J,
            "U": self.U,
            "gamma": self.gamma,
            "segments": [vars(s).copy() for s in self.segments],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ParameterSchedule":
        segs = tuple(Segment(**s) for s in data["segments"])
        return cls(segs, data["J"], data["U"], data["gamma"])


def sweep_schedule(delta_in, delta_f, rate, J, U, gamma, omega, t0=0.0) -> ParameterSchedule:
    """Linear detuning ramp lasting ``rate`` tunneling periods per unit of detuning."""
    if not delta_in < delta_f:
        raise ValueError(f"need delta_in < delta_f, got {delta_in} >= {delta_f}")
    if not (rate > 0 and math.isfinite(rate)):
        raise ValueError("rate must be positive and finite")
    duration = (delta_f - delta_in) * rate * 2 * math.pi / J
    seg = Segment(t0, t0 + duration, delta_in, delta_f, omega)
    return ParameterSchedule((seg,), J, U, gamma)


def append_hold(schedule: ParameterSchedule, duration: float, omega: float, delta=None) -> ParameterSchedule:
    """Append a constant-detuning segment, by default at the last detuning of ``schedule``."""
    if not (duration > 0 and math.isfinite(schedule.t_end)):
        raise ValueError("hold duration must be positive")
    last = schedule.segments[-1]
    d = last.delta_end if delta is None else delta
    seg = Segment(last.t_end, last.t_end + duration, d, d, omega)
    return replace(schedule, segments=schedule.segments + (seg,))


def dwell(schedule: ParameterSchedule, duration: float) -> ParameterSchedule:
    """Keep the drive on at the final detuning for ``duration``."""
    return append_hold(schedule, duration, schedule.segments[-1].omega)


def switch_off(schedule: ParameterSchedule, hold_duration: float, delta_hold=None) -> ParameterSchedule:
    """Drive off; the detuning stays at its final value unless ``delta_hold`` is given.

    Without drive the detuning term commutes with every number-conserving
    observable, so the choice of ``delta_hold`` does not affect them.
    """
    return append_hold(schedule, hold_duration, 0.0, delta_hold)


def free_schedule(delta, duration, J, U, gamma, t0=0.0) -> ParameterSchedule:
    """Undriven evolution at fixed detuning."""
    if not duration > 0:
        raise ValueError("duration must be positive")
    return ParameterSchedule((Segment(t0, t0 + duration, delta, delta, 0.0),), J, U, gamma)


def critical_detuning(U: float, omega: float, gamma: float) -> float:
    """U (omega / gamma)^2, where the basin of the limit cycle vanishes."""
    if gamma <= 0:
        raise ValueError("critical detuning is undefined for gamma <= 0")
    return U * (omega / gamma) ** 2


def check_capture(schedule: ParameterSchedule) -> bool:
    """Like :meth:`ParameterSchedule.validate` but only warns."""
    try:
        schedule.validate()
    except CaptureConditionError as exc:
        warnings.warn(str(exc), stacklevel=2)
        return False
    return True
