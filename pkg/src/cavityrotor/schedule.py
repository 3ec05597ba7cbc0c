"""Piecewise drive programs for the cavity pump."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

from .errors import ParameterError
from .model import DrivePoint

SHAPES = ("constant", "linear", "smoothstep")


def _ramp(shape: str, u: float) -> float:
    if shape == "linear":
        return u
    if shape == "smoothstep":
        return u * u * (3.0 - 2.0 * u)
    return 0.0


@dataclass(frozen=True)
class Segment:
    """One piece of a drive program; ``duration`` in seconds.

    A zero-duration segment is an instantaneous jump from ``start`` to ``end``.
    """

    duration: float
    shape: str
    start: DrivePoint
    end: DrivePoint
    label: str = ""

    def __post_init__(self):
        if not self.duration >= 0:
            raise ParameterError(f"segment duration must be non-negative, got {self.duration}")
        if self.shape not in SHAPES:
            raise ParameterError(f"unknown segment shape {self.shape!r}")
        if self.shape == "constant" and self.start != self.end:
            raise ParameterError("constant segment needs identical start and end drives")

    @classmethod
    def hold(cls, duration: float, drive: DrivePoint, label: str = "") -> "Segment":
        return cls(duration, "constant", drive, drive, label)

    def drive_at(self, local_time: float) -> DrivePoint:
        if self.shape == "constant":
            return self.start
        if self.duration == 0:
            return self.end
        u = min(max(local_time / self.duration, 0.0), 1.0)
        s = _ramp(self.shape, u)
        return DrivePoint(
            eta=self.start.eta + (self.end.eta - self.start.eta) * s,
            delta=self.start.delta + (self.end.delta - self.start.delta) * s,
        )


@dataclass(frozen=True)
class DriveSchedule:
    segments: Tuple[Segment, ...] = field(default_factory=tuple)

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        for a, b in zip(segs, segs[1:]):
            if a.end != b.start:
                raise ParameterError(
                    f"segments {a.label or a}->{b.label or b} are not contiguous in drive")

    @property
    def total_duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    def __len__(self):
        return len(self.segments)

    @property
    def boundaries(self):
        """Start times of every segment plus the end time."""
        out, t = [0.0], 0.0
        for s in self.segments:
            t += s.duration
            out.append(t)
        return out

    def drive_at(self, t: float) -> DrivePoint:
        """Drive at absolute time ``t``; right-continuous at jumps."""
        if not self.segments:
            raise ParameterError("empty schedule has no drive")
        start = 0.0
        for seg in self.segments:
            if t < start + seg.duration:
                return seg.drive_at(t - start)
            start += seg.duration
        return self.segments[-1].end

    def merged(self) -> "DriveSchedule":
        """Equivalent schedule with adjacent identical holds fused."""
        out = []
        for seg in self.segments:
            if (out and seg.shape == "constant" and out[-1].shape == "constant"
                    and out[-1].start == seg.start):
                prev = out.pop()
                seg = Segment(prev.duration + seg.duration, "constant", seg.start, seg.end,
                              prev.label or seg.label)
            out.append(seg)
        return DriveSchedule(tuple(out))

    def reversed(self) -> "DriveSchedule":
        # linear and smoothstep ramps are point-symmetric, so swapping the
        # endpoints traverses each ramp backwards
        return DriveSchedule(tuple(
            Segment(s.duration, s.shape, s.end, s.start, s.label)
            for s in reversed(self.segments)))
