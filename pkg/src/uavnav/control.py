"""Displacement decomposition and rc command scheduling.

A 3D body-frame displacement is reduced to three sequential primitives --
turn (yaw), horizontal translation (pitch), vertical translation (throttle) --
and each primitive becomes one velocity-duration rc command followed by an
explicit stop.  Commands drive a four-axis rc interface (roll, pitch,
throttle, yaw_rate), each axis in [-100, 100] units, where 100 maps linearly
to the platform's maximum speed for that axis.

Primitives execute strictly in yaw -> pitch -> throttle order: turning first
means the following forward translation already points at the waypoint.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Optional

from .geometry import Displacement3


@dataclass(frozen=True)
class ControlPrimitives:
    """Per-axis displacement demands: radians, meters, meters."""

    delta_yaw: float       # signed, positive = turn right
    delta_pitch: float     # horizontal distance, >= 0
    delta_throttle: float  # signed vertical distance


@dataclass(frozen=True)
class SpeedConfig:
    """Predefined primitive speeds plus the rc calibration limits."""

    p_yaw: float = math.radians(50.0)   # rad/s
    p_pitch: float = 0.5                # m/s
    p_throttle: float = 0.5             # m/s
    v_max: float = 1.0                  # m/s at rc magnitude 100
    omega_max: float = math.radians(100.0)  # rad/s at rc magnitude 100

    def __post_init__(self):
        for name, v in (("p_yaw", self.p_yaw), ("p_pitch", self.p_pitch),
                        ("p_throttle", self.p_throttle), ("v_max", self.v_max),
                        ("omega_max", self.omega_max)):
            if not v > 0.0:
                raise ValueError(f"{name} must be > 0, got {v}")
        if self.p_pitch > self.v_max or self.p_throttle > self.v_max:
            raise ValueError("translation speeds must not exceed v_max")
        if self.p_yaw > self.omega_max:
            raise ValueError("p_yaw must not exceed omega_max")


@dataclass(frozen=True)
class Deadbands:
    """Per-axis thresholds below which a primitive is skipped entirely."""

    yaw: float = math.radians(0.5)  # rad
    pitch: float = 0.02             # m
    throttle: float = 0.02          # m

    @classmethod
    def zero(cls) -> "Deadbands":
        return cls(0.0, 0.0, 0.0)


@dataclass(frozen=True)
class RcCommand:
    roll: float = 0.0
    pitch: float = 0.0
    throttle: float = 0.0
    yaw_rate: float = 0.0

    def __post_init__(self):
        for name, v in (("roll", self.roll), ("pitch", self.pitch),
                        ("throttle", self.throttle), ("yaw_rate", self.yaw_rate)):
            if not -100.0 <= v <= 100.0:
                raise ValueError(f"rc {name}={v} outside [-100, 100]")

    def is_stop(self) -> bool:
        return self.roll == 0.0 and self.pitch == 0.0 and self.throttle == 0.0 and self.yaw_rate == 0.0


STOP = RcCommand()


@dataclass(frozen=True)
class TimedCommand:
    rc: RcCommand
    duration: float  # seconds

    def __post_init__(self):
        if not (math.isfinite(self.duration) and self.duration >= 0.0):
            raise ValueError(f"duration must be finite and >= 0, got {self.duration}")


@dataclass(frozen=True)
class CommandSchedule:
    commands: tuple[TimedCommand, ...] = ()

    def motion_commands(self) -> tuple[TimedCommand, ...]:
        return tuple(c for c in self.commands if not c.rc.is_stop())

    def total_duration(self) -> float:
        return sum(c.duration for c in self.commands)

    def digest(self) -> str:
        payload = [[c.rc.roll, c.rc.pitch, c.rc.throttle, c.rc.yaw_rate, c.duration]
                   for c in self.commands]
        blob = json.dumps(payload, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def decompose(d: Displacement3) -> ControlPrimitives:
    """Split a forward-hemisphere displacement into yaw/pitch/throttle demands.

    delta_yaw = atan(sx / sy), delta_pitch = sqrt(sx^2 + sy^2),
    delta_throttle = sz.  Requires sy > 0; a planner must never emit a
    behind-camera displacement.
    """
    if not d.sy > 0.0:
        raise ValueError(f"displacement must point forward (sy > 0), got sy={d.sy}")
    return ControlPrimitives(
        delta_yaw=math.atan(d.sx / d.sy),
        delta_pitch=math.hypot(d.sx, d.sy),
        delta_throttle=d.sz,
    )


def _rc_value(delta: float, speed: float, axis_max: float) -> float:
    return math.copysign(100.0 * speed / axis_max, delta)


def schedule(prim: ControlPrimitives, speeds: SpeedConfig,
             deadbands: Optional[Deadbands] = None) -> CommandSchedule:
    """Turn primitives into single-axis velocity-duration commands.

    Emits (in yaw -> pitch -> throttle order) one command per primitive whose
    magnitude exceeds its deadband, each followed by an all-zero stop of
    duration 0.  Duration = |delta| / predefined speed; the rc value encodes
    that predefined speed on the linear rc calibration.
    """
    db = deadbands if deadbands is not None else Deadbands()
    for name, v in (("delta_yaw", prim.delta_yaw), ("delta_pitch", prim.delta_pitch),
                    ("delta_throttle", prim.delta_throttle)):
        if not math.isfinite(v):
            raise ValueError(f"{name} is not finite: {v}")
    if prim.delta_pitch < 0.0:
        raise ValueError(f"delta_pitch must be >= 0, got {prim.delta_pitch}")

    cmds: list[TimedCommand] = []

    def emit(rc: RcCommand, duration: float) -> None:
        cmds.append(TimedCommand(rc, duration))
        cmds.append(TimedCommand(STOP, 0.0))

    if abs(prim.delta_yaw) > db.yaw:
        emit(RcCommand(yaw_rate=_rc_value(prim.delta_yaw, speeds.p_yaw, speeds.omega_max)),
             abs(prim.delta_yaw) / speeds.p_yaw)
    if prim.delta_pitch > db.pitch:
        emit(RcCommand(pitch=_rc_value(1.0, speeds.p_pitch, speeds.v_max)),
             prim.delta_pitch / speeds.p_pitch)
    if abs(prim.delta_throttle) > db.throttle:
        emit(RcCommand(throttle=_rc_value(prim.delta_throttle, speeds.p_throttle, speeds.v_max)),
             abs(prim.delta_throttle) / speeds.p_throttle)
    return CommandSchedule(tuple(cmds))


def yaw_sweep(angle: float, speeds: SpeedConfig) -> CommandSchedule:
    """Yaw-only schedule used to execute a search directive."""
    return schedule(ControlPrimitives(angle, 0.0, 0.0), speeds, Deadbands.zero())


def vertical_step(distance: float, speeds: SpeedConfig) -> CommandSchedule:
    """Throttle-only schedule used to execute a vertical search directive."""
    return schedule(ControlPrimitives(0.0, 0.0, distance), speeds, Deadbands.zero())
