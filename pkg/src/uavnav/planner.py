"""Waypoint planners and image-space obstacle adjustment.

Every planner implements ``plan(instruction, observation) -> outcome`` where
the outcome is one of:

  Plan(WaypointPlan)  -- fly toward a pixel waypoint with a depth label
  Search(direction)   -- target unseen; sweep left/right or nudge up/down
  Done()              -- planner believes the task is complete
  Failure(reason)     -- planner cannot produce a plan (machine-readable why)

Three implementations live here and in ``vlm``:

  OraclePlanner   -- geometric ground-truth emulation of a perfect model,
                     driven by the live simulator state (for offline tests
                     and benchmarks).
  ScriptedPlanner -- replays a recorded outcome sequence verbatim.
  VlmPlanner      -- remote model client speaking the JSON wire protocol
                     (see ``uavnav.vlm``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

from .geometry import CameraModel, Displacement3, PixelWaypoint, denormalize, project

logger = logging.getLogger(__name__)

SEARCH_DIRECTIONS = ("left", "right", "up", "down")


@dataclass(frozen=True)
class Instruction:
    text: str

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("instruction text must be non-empty")


@dataclass(frozen=True)
class ImageBox:
    """Axis-aligned image-space box, pixels, top-left origin."""

    x1: float
    y1: float
    x2: float
    y2: float
    label: str = ""

    def __post_init__(self):
        if not (self.x1 < self.x2 and self.y1 < self.y2):
            raise ValueError(f"degenerate box ({self.x1},{self.y1})-({self.x2},{self.y2})")

    def inflated(self, margin: float) -> "ImageBox":
        return ImageBox(self.x1 - margin, self.y1 - margin,
                        self.x2 + margin, self.y2 + margin, self.label)

    def contains(self, u: float, v: float) -> bool:
        """Strict interior test; boundary points count as outside."""
        return self.x1 < u < self.x2 and self.y1 < v < self.y2


# Wire-protocol name: detected obstacle bounding boxes.
ObstacleBox = ImageBox


@dataclass(frozen=True)
class EntityView:
    """Symbolic per-entity observation row (stand-in for pixels)."""

    entity_id: str
    kind: str                  # "target" | "obstacle"
    box: Optional[ImageBox]    # image box clipped to bounds, None if off-image
    visible: bool              # center forward and inside the field of view
    range_m: float             # Euclidean distance to the entity center


@dataclass(frozen=True)
class Observation:
    timestamp: float
    camera: CameraModel
    entity_views: tuple[EntityView, ...] = ()
    frame: Optional[bytes] = None  # encoded image, remote-model mode only

    def view(self, entity_id: str) -> Optional[EntityView]:
        for ev in self.entity_views:
            if ev.entity_id == entity_id:
                return ev
        return None

    def obstacle_views(self) -> tuple[EntityView, ...]:
        return tuple(ev for ev in self.entity_views if ev.kind == "obstacle")


@dataclass(frozen=True)
class WaypointPlan:
    waypoint: PixelWaypoint
    depth: int
    obstacles: tuple[ImageBox, ...] = ()
    done: bool = False
    rationale: Optional[str] = None


@dataclass(frozen=True)
class Plan:
    plan: WaypointPlan


@dataclass(frozen=True)
class Search:
    direction: str

    def __post_init__(self):
        if self.direction not in SEARCH_DIRECTIONS:
            raise ValueError(f"unknown search direction {self.direction!r}")


@dataclass(frozen=True)
class Done:
    pass


@dataclass(frozen=True)
class Failure:
    reason: str


PlannerOutcome = Union[Plan, Search, Done, Failure]


def outcome_to_dict(outcome: PlannerOutcome) -> dict:
    if isinstance(outcome, Plan):
        p = outcome.plan
        return {
            "kind": "plan",
            "waypoint": [p.waypoint.u, p.waypoint.v],
            "depth": p.depth,
            "obstacles": [[b.x1, b.y1, b.x2, b.y2, b.label] for b in p.obstacles],
            "done": p.done,
            "rationale": p.rationale,
        }
    if isinstance(outcome, Search):
        return {"kind": "search", "direction": outcome.direction}
    if isinstance(outcome, Done):
        return {"kind": "done"}
    return {"kind": "failure", "reason": outcome.reason}


def outcome_from_dict(d: dict) -> PlannerOutcome:
    kind = d.get("kind")
    if kind == "plan":
        boxes = tuple(ImageBox(b[0], b[1], b[2], b[3], b[4]) for b in d.get("obstacles", []))
        return Plan(WaypointPlan(
            waypoint=PixelWaypoint(d["waypoint"][0], d["waypoint"][1]),
            depth=d["depth"],
            obstacles=boxes,
            done=d.get("done", False),
            rationale=d.get("rationale"),
        ))
    if kind == "search":
        return Search(d["direction"])
    if kind == "done":
        return Done()
    if kind == "failure":
        return Failure(d.get("reason", "unknown"))
    raise ValueError(f"unknown outcome kind {kind!r}")


def quantize_depth(range_m: float, num_labels: int, d_ref: float) -> int:
    """Map a metric range onto a depth label in {1..num_labels}.

    The label scale saturates at d_ref meters; rounding is half-up.
    """
    if not range_m > 0.0:
        raise ValueError(f"range must be > 0, got {range_m}")
    raw = math.floor(num_labels * min(range_m, d_ref) / d_ref + 0.5)
    return max(1, min(num_labels, raw))


_AVOID_MAX_HOPS = 8


def avoid_adjust(wp: PixelWaypoint, boxes: Sequence[ImageBox], margin: float,
                 image_width: float) -> PixelWaypoint:
    """Shift a waypoint horizontally out of obstacle boxes inflated by margin.

    A waypoint strictly inside an inflated box moves to the nearer inflated
    edge (ties break rightward).  If the shifted point lands inside another
    box the hop repeats up to a fixed bound, after which the waypoint is
    placed at the center of the widest free horizontal gap on its row.  When
    the row has no free column the original waypoint is returned unchanged
    with a logged warning.
    """
    inflated = [b.inflated(margin) for b in boxes]

    def hit(u: float) -> Optional[ImageBox]:
        for b in inflated:
            if b.contains(u, wp.v):
                return b
        return None

    if hit(wp.u) is None:
        return wp

    u = wp.u
    for _ in range(_AVOID_MAX_HOPS):
        b = hit(u)
        if b is None:
            return PixelWaypoint(u, wp.v)
        left_ok = b.x1 >= 0.0
        right_ok = b.x2 <= image_width
        if left_ok and right_ok:
            u = b.x2 if (b.x2 - u) <= (u - b.x1) else b.x1
        elif right_ok:
            u = b.x2
        elif left_ok:
            u = b.x1
        else:
            break
    else:
        if hit(u) is None:
            return PixelWaypoint(u, wp.v)

    # Fallback: widest free interval of this row across the image width.
    spans = sorted((max(0.0, b.x1), min(image_width, b.x2))
                   for b in inflated if b.y1 < wp.v < b.y2 and b.x2 > 0.0 and b.x1 < image_width)
    gaps: list[tuple[float, float]] = []
    cursor = 0.0
    for x1, x2 in spans:
        if x1 > cursor:
            gaps.append((cursor, x1))
        cursor = max(cursor, x2)
    if cursor < image_width:
        gaps.append((cursor, image_width))
    if not gaps:
        logger.warning("avoid_adjust: no free column on row v=%.1f; waypoint unchanged", wp.v)
        return wp
    lo, hi = max(gaps, key=lambda g: g[1] - g[0])
    return PixelWaypoint((lo + hi) / 2.0, wp.v)


@dataclass(frozen=True)
class OracleConfig:
    num_labels: int = 10
    d_ref: float = 10.0          # metric span of the label scale
    search_step: float = math.radians(30.0)  # yaw sweep per Search directive
    vertical_step: float = 1.0   # meters per up/down Search directive
    follow_lead: float = 2.0     # extra travel planned past a followed target


@dataclass
class OraclePlanner:
    """Ground-truth planner: projects the active goal into the camera.

    ``truth`` is a callable returning (goal_position, goal_range, done_allowed,
    success_threshold) -- see ``harness`` for the wiring; keeping it a callable
    means the oracle always sees the live world and the live goal index, so it
    can never disagree with the adjudicator about which goal is active.
    """

    camera: CameraModel
    truth: Callable[[], "OracleView"]
    config: OracleConfig = field(default_factory=OracleConfig)

    def reset(self) -> None:
        pass

    def plan(self, instruction: Instruction, obs: Observation) -> PlannerOutcome:
        view = self.truth()
        return oracle_plan(view, self.camera, self.config,
                           obstacle_boxes=tuple(ev.box for ev in obs.obstacle_views()
                                                if ev.box is not None))


@dataclass(frozen=True)
class OracleView:
    """Body-frame snapshot of the active goal, produced by the harness."""

    goal_body: Displacement3      # goal offset in the UAV body frame
    goal_range: float             # Euclidean distance, meters
    success_threshold: float
    follow_mode: bool             # follow tasks never finish on proximity alone


def oracle_plan(view: OracleView, cam: CameraModel, cfg: OracleConfig,
                obstacle_boxes: tuple[ImageBox, ...] = ()) -> PlannerOutcome:
    g = view.goal_body
    if g.sy > 0.0:
        proj = project(cam, g)
        if proj.in_fov:
            if not view.follow_mode and view.goal_range <= view.success_threshold:
                return Done()
            # Following a moving target: plan a lead distance past it so each
            # hop is long enough to keep pace instead of micro-stepping.
            travel = view.goal_range + (cfg.follow_lead if view.follow_mode else 0.0)
            wp = denormalize(cam, proj.as_waypoint())
            depth = quantize_depth(travel, cfg.num_labels, cfg.d_ref)
            return Plan(WaypointPlan(wp, depth, obstacles=obstacle_boxes))
        if abs(proj.u_norm) <= 1.0:
            return Search("up" if proj.v_norm > 0.0 else "down")
    bearing = math.atan2(g.sx, g.sy)  # signed horizontal angle, positive right
    return Search("right" if bearing >= 0.0 else "left")


@dataclass
class ScriptedPlanner:
    """Replays a fixed outcome sequence; exhaustion is a Failure."""

    outcomes: Sequence[PlannerOutcome]
    _cursor: int = 0

    def reset(self) -> None:
        self._cursor = 0

    def plan(self, instruction: Instruction, obs: Observation) -> PlannerOutcome:
        if self._cursor >= len(self.outcomes):
            return Failure("script exhausted")
        out = self.outcomes[self._cursor]
        self._cursor += 1
        return out
