"""Deterministic kinematic UAV world.

World frame: x/y horizontal, z up.  UAV yaw is measured clockwise (viewed
from above) from world +y, so yaw 0 faces +y and the world-from-body rotation
is Rz(-yaw).  Velocity-level rc commands integrate at a fixed tick with no
inertia: the contribution of a command is exactly speed * time.

The per-episode integration order is fixed and load-bearing for determinism:
advance targets, step the UAV, observe, adjudicate.  Reordering changes
trajectory logs and is forbidden.

Scenes and tasks load from a human-editable JSON file with explicit units
(meters, seconds, degrees); see ``load_scene`` for the schema.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import kernels
from .control import RcCommand, SpeedConfig
from .geometry import CameraModel
from .planner import EntityView, ImageBox, Instruction, Observation

SCENE_SCHEMA_VERSION = 1

TASK_CATEGORIES = ("navigation", "obstacle_avoidance", "long_horizon",
                   "reasoning", "search", "follow")

DEFAULT_UAV_RADIUS = 0.15   # collision sphere radius, meters
_FORWARD_EPS = 1e-9


@dataclass(frozen=True)
class UavState:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    yaw: float = 0.0  # radians, clockwise from world +y

    def __post_init__(self):
        for name, v in (("x", self.x), ("y", self.y), ("z", self.z), ("yaw", self.yaw)):
            if not math.isfinite(v):
                raise ValueError(f"UavState.{name} is not finite: {v}")

    def position(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class Target:
    target_id: str
    position: tuple[float, float, float]   # meters
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0)  # m/s
    radius: float = 0.5                    # bounding sphere, meters


@dataclass(frozen=True)
class BoxObstacle:
    min_corner: tuple[float, float, float]
    max_corner: tuple[float, float, float]
    label: str = ""

    def __post_init__(self):
        if not all(a < b for a, b in zip(self.min_corner, self.max_corner)):
            raise ValueError(f"degenerate obstacle box {self.min_corner}..{self.max_corner}")

    def contains(self, p: tuple[float, float, float], inflate: float = 0.0) -> bool:
        return all(self.min_corner[a] - inflate <= p[a] <= self.max_corner[a] + inflate
                   for a in range(3))


@dataclass(frozen=True)
class WorldBounds:
    lo: tuple[float, float, float] = (-50.0, -50.0, 0.0)
    hi: tuple[float, float, float] = (50.0, 50.0, 30.0)

    def __post_init__(self):
        if not all(a < b for a, b in zip(self.lo, self.hi)):
            raise ValueError(f"degenerate world bounds {self.lo}..{self.hi}")


@dataclass(frozen=True)
class Scene:
    targets: tuple[Target, ...]
    obstacles: tuple[BoxObstacle, ...] = ()
    bounds: WorldBounds = WorldBounds()

    def __post_init__(self):
        seen = set()
        for t in self.targets:
            if t.target_id in seen:
                raise ValueError(f"duplicate target id {t.target_id!r}")
            seen.add(t.target_id)
            if not all(self.bounds.lo[a] <= t.position[a] <= self.bounds.hi[a] for a in range(3)):
                raise ValueError(f"target {t.target_id!r} starts outside world bounds")

    def target(self, target_id: str) -> Target:
        for t in self.targets:
            if t.target_id == target_id:
                return t
        raise KeyError(target_id)


@dataclass(frozen=True)
class Task:
    instruction: Instruction
    goal_sequence: tuple[str, ...]
    category: str
    success_threshold: float = 2.0   # meters
    follow_hold: float = 30.0        # seconds, follow category only
    timeout: float = 120.0           # seconds

    def __post_init__(self):
        if self.category not in TASK_CATEGORIES:
            raise ValueError(f"unknown task category {self.category!r}")
        if not self.goal_sequence:
            raise ValueError("goal_sequence must list at least one target id")
        if not self.success_threshold > 0.0:
            raise ValueError("success_threshold must be > 0")
        if not self.timeout > 0.0:
            raise ValueError("timeout must be > 0")


# --- terminal status ---------------------------------------------------------

@dataclass(frozen=True)
class Running:
    pass


@dataclass(frozen=True)
class Success:
    pass


@dataclass(frozen=True)
class Collision:
    entity: str


@dataclass(frozen=True)
class Timeout:
    pass


Status = Union[Running, Success, Collision, Timeout]


def status_label(status: Status) -> str:
    if isinstance(status, Running):
        return "running"
    if isinstance(status, Success):
        return "success"
    if isinstance(status, Collision):
        return f"collision:{status.entity}"
    return "timeout"


@dataclass(frozen=True)
class Progress:
    """Adjudication cursor: active goal index plus the follow-hold timer.

    ``last_t`` is the timestamp of the previous adjudication; the follow hold
    accumulates the in-range tick intervals and resets on any excursion.
    """

    goal_index: int = 0
    hold_s: float = 0.0
    last_t: float = 0.0
    terminal: Optional[Status] = None


# --- dynamics ----------------------------------------------------------------

def rc_body_velocity(rc: RcCommand, mapping: SpeedConfig) -> tuple[float, float, float, float]:
    """Linear rc calibration: (vx_b, vy_b, vz_b, yaw_rate) in m/s and rad/s."""
    return (
        rc.roll / 100.0 * mapping.v_max,
        rc.pitch / 100.0 * mapping.v_max,
        rc.throttle / 100.0 * mapping.v_max,
        rc.yaw_rate / 100.0 * mapping.omega_max,
    )


def step(state: UavState, rc: RcCommand, mapping: SpeedConfig, dt: float) -> UavState:
    """Integrate one tick of a velocity command (first-order kinematics)."""
    if not dt > 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    vx, vy, vz, wz = rc_body_velocity(rc, mapping)
    out = np.empty((1, 4), dtype=np.float64)
    kernels.rc_block(out, state.x, state.y, state.z, state.yaw, vx, vy, vz, wz, dt)
    return UavState(out[0, 0], out[0, 1], out[0, 2], out[0, 3])


def advance_targets(scene: Scene, dt: float) -> Scene:
    """Move every target one tick, reflecting velocity at world bounds."""
    if not dt > 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if not scene.targets:
        return scene
    pos = np.array([t.position for t in scene.targets], dtype=np.float64)
    vel = np.array([t.velocity for t in scene.targets], dtype=np.float64)
    pos_out = np.empty((1,) + pos.shape, dtype=np.float64)
    vel_out = np.empty((1,) + vel.shape, dtype=np.float64)
    kernels.targets_block(pos_out, vel_out, pos, vel,
                          np.array(scene.bounds.lo), np.array(scene.bounds.hi), dt)
    new_targets = tuple(
        replace(t, position=tuple(pos[j]), velocity=tuple(vel[j]))
        for j, t in enumerate(scene.targets)
    )
    return replace(scene, targets=new_targets)


# --- observation -------------------------------------------------------------

def _body_offset(state: UavState, p: tuple[float, float, float]) -> tuple[float, float, float]:
    ox = p[0] - state.x
    oy = p[1] - state.y
    oz = p[2] - state.z
    c = math.cos(state.yaw)
    s = math.sin(state.yaw)
    return (c * ox - s * oy, s * ox + c * oy, oz)


def _clip_box(cam: CameraModel, x1: float, y1: float, x2: float, y2: float,
              label: str) -> Optional[ImageBox]:
    x1c, x2c = max(0.0, x1), min(float(cam.width), x2)
    y1c, y2c = max(0.0, y1), min(float(cam.height), y2)
    if x1c < x2c and y1c < y2c:
        return ImageBox(x1c, y1c, x2c, y2c, label)
    return None


def _pixel_u(cam: CameraModel, bx: float, by: float) -> float:
    return (1.0 + (bx / by) / cam.tan_alpha) * cam.width / 2.0


def _pixel_v(cam: CameraModel, bz: float, by: float) -> float:
    return (1.0 - (bz / by) / cam.tan_beta) * cam.height / 2.0


def _target_view(cam: CameraModel, state: UavState, t: Target) -> EntityView:
    bx, by, bz = _body_offset(state, t.position)
    rng = math.sqrt(bx * bx + by * by + bz * bz)
    visible = (by > _FORWARD_EPS
               and abs(bx) <= by * cam.tan_alpha
               and abs(bz) <= by * cam.tan_beta)
    box = None
    if by > _FORWARD_EPS:
        # Linearized sphere footprint: project center +- radius at center depth.
        uc = _pixel_u(cam, bx, by)
        vc = _pixel_v(cam, bz, by)
        hu = (t.radius / by) / cam.tan_alpha * cam.width / 2.0
        hv = (t.radius / by) / cam.tan_beta * cam.height / 2.0
        box = _clip_box(cam, uc - hu, vc - hv, uc + hu, vc + hv, t.target_id)
    return EntityView(t.target_id, "target", box, visible, rng)


def _obstacle_view(cam: CameraModel, state: UavState, idx: int, ob: BoxObstacle) -> EntityView:
    center = tuple((ob.min_corner[a] + ob.max_corner[a]) / 2.0 for a in range(3))
    cx, cy, cz = _body_offset(state, center)
    rng = math.sqrt(cx * cx + cy * cy + cz * cz)
    visible = (cy > _FORWARD_EPS
               and abs(cx) <= cy * cam.tan_alpha
               and abs(cz) <= cy * cam.tan_beta)
    # Image footprint from the forward corners only; a box straddling the
    # camera plane is underestimated (acceptable: the planner margins absorb it).
    u_lo = v_lo = math.inf
    u_hi = v_hi = -math.inf
    any_forward = False
    for xi in (ob.min_corner[0], ob.max_corner[0]):
        for yi in (ob.min_corner[1], ob.max_corner[1]):
            for zi in (ob.min_corner[2], ob.max_corner[2]):
                bx, by, bz = _body_offset(state, (xi, yi, zi))
                if by <= _FORWARD_EPS:
                    continue
                any_forward = True
                u = _pixel_u(cam, bx, by)
                v = _pixel_v(cam, bz, by)
                u_lo, u_hi = min(u_lo, u), max(u_hi, u)
                v_lo, v_hi = min(v_lo, v), max(v_hi, v)
    label = ob.label or f"box{idx}"
    box = _clip_box(cam, u_lo, v_lo, u_hi, v_hi, label) if any_forward else None
    return EntityView(label, "obstacle", box, visible, rng)


def observe(scene: Scene, state: UavState, cam: CameraModel, t: float,
            frame: Optional[bytes] = None) -> Observation:
    """Project every scene entity into the camera as a symbolic entity view."""
    views = [_target_view(cam, state, tgt) for tgt in scene.targets]
    views += [_obstacle_view(cam, state, i, ob) for i, ob in enumerate(scene.obstacles)]
    return Observation(timestamp=t, camera=cam, entity_views=tuple(views), frame=frame)


# --- adjudication ------------------------------------------------------------

def check(scene: Scene, state: UavState, task: Task, progress: Progress, t: float,
          obs: Observation, uav_radius: float = DEFAULT_UAV_RADIUS) -> tuple[Status, Progress]:
    """Adjudicate one tick; terminal statuses are absorbing.

    Precedence within a tick: collision, then goal progress/success, then
    timeout.  A goal counts as reached only while it is visible in the current
    observation; the follow category instead accumulates continuous
    within-threshold time until the hold requirement is met.
    """
    if progress.terminal is not None:
        return progress.terminal, progress

    p = state.position()
    for ob in scene.obstacles:
        if ob.contains(p, inflate=uav_radius):
            status = Collision(ob.label or "obstacle")
            return status, replace(progress, terminal=status, last_t=t)

    if task.category == "follow":
        view = obs.view(task.goal_sequence[0])
        in_range = view is not None and view.range_m <= task.success_threshold
        hold = progress.hold_s + (t - progress.last_t) if in_range else 0.0
        if hold >= task.follow_hold - 1e-9:
            status = Success()
            return status, replace(progress, hold_s=hold, last_t=t, terminal=status)
        progress = replace(progress, hold_s=hold, last_t=t)
    else:
        goal_id = task.goal_sequence[progress.goal_index]
        view = obs.view(goal_id)
        if view is not None and view.range_m <= task.success_threshold and view.visible:
            next_index = progress.goal_index + 1
            if next_index >= len(task.goal_sequence):
                status = Success()
                return status, replace(progress, goal_index=next_index, last_t=t,
                                       terminal=status)
            progress = replace(progress, goal_index=next_index, last_t=t)
        else:
            progress = replace(progress, last_t=t)

    if t >= task.timeout:
        status = Timeout()
        return status, replace(progress, terminal=status)
    return Running(), progress


# --- scene/task files --------------------------------------------------------

def scene_to_dict(scene: Scene, task: Task, start: UavState) -> dict:
    return {
        "schema_version": SCENE_SCHEMA_VERSION,
        "scene": {
            "bounds": {"min_m": list(scene.bounds.lo), "max_m": list(scene.bounds.hi)},
            "targets": [
                {"id": t.target_id, "position_m": list(t.position),
                 "velocity_mps": list(t.velocity), "radius_m": t.radius}
                for t in scene.targets
            ],
            "obstacles": [
                {"min_m": list(o.min_corner), "max_m": list(o.max_corner), "label": o.label}
                for o in scene.obstacles
            ],
        },
        "task": {
            "instruction": task.instruction.text,
            "goal_sequence": list(task.goal_sequence),
            "category": task.category,
            "success_threshold_m": task.success_threshold,
            "follow_hold_s": task.follow_hold,
            "timeout_s": task.timeout,
        },
        # yaw_rad is authoritative (exact round trip); yaw_deg is for human editing.
        "start": {"position_m": [start.x, start.y, start.z],
                  "yaw_deg": math.degrees(start.yaw), "yaw_rad": start.yaw},
    }


def scene_from_dict(data: dict) -> tuple[Scene, Task, UavState]:
    version = data.get("schema_version")
    if version != SCENE_SCHEMA_VERSION:
        raise ValueError(f"unsupported scene schema_version {version!r} "
                         f"(expected {SCENE_SCHEMA_VERSION})")
    s = data["scene"]
    bounds = WorldBounds(tuple(s["bounds"]["min_m"]), tuple(s["bounds"]["max_m"]))
    targets = tuple(
        Target(t["id"], tuple(t["position_m"]),
               tuple(t.get("velocity_mps", (0.0, 0.0, 0.0))),
               float(t.get("radius_m", 0.5)))
        for t in s["targets"]
    )
    obstacles = tuple(
        BoxObstacle(tuple(o["min_m"]), tuple(o["max_m"]), o.get("label", ""))
        for o in s.get("obstacles", ())
    )
    scene = Scene(targets, obstacles, bounds)

    tk = data["task"]
    task = Task(
        instruction=Instruction(tk["instruction"]),
        goal_sequence=tuple(tk["goal_sequence"]),
        category=tk["category"],
        success_threshold=float(tk.get("success_threshold_m", 2.0)),
        follow_hold=float(tk.get("follow_hold_s", 30.0)),
        timeout=float(tk.get("timeout_s", 120.0)),
    )
    for gid in task.goal_sequence:
        scene.target(gid)  # raises KeyError for unknown ids

    st = data.get("start", {})
    pos = st.get("position_m", [0.0, 0.0, 1.5])
    yaw = st["yaw_rad"] if "yaw_rad" in st else math.radians(st.get("yaw_deg", 0.0))
    start = UavState(pos[0], pos[1], pos[2], yaw)
    return scene, task, start


def load_scene(path: Union[str, Path]) -> tuple[Scene, Task, UavState]:
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    try:
        return scene_from_dict(data)
    except KeyError as e:
        raise ValueError(f"scene file {path} is missing field {e}") from e
