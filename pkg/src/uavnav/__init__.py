"""uavnav: closed-loop UAV waypoint-navigation engine.

A planner (geometric oracle, scripted log, or remote vision-language model)
emits 2D image-space waypoints with a discrete depth label; the engine scales
the depth, lifts the waypoint to a 3D body-frame displacement, decomposes it
into yaw/pitch/throttle velocity-duration commands, and executes them in a
closed loop inside a deterministic kinematic simulator with success /
collision / timeout adjudication.
"""

import importlib.resources
from pathlib import Path

from .config import EpisodeConfig, load_config
from .control import (CommandSchedule, ControlPrimitives, Deadbands, RcCommand,
                      SpeedConfig, TimedCommand, decompose, schedule)
from .geometry import (CameraModel, Displacement3, NormalizedWaypoint,
                       PixelWaypoint, Projection, denormalize, normalize_pixel,
                       project, unproject)
from .harness import (EpisodeRecord, Metrics, read_record, replay, run_episode,
                      run_episode_file, run_suite)
from .planner import (Done, Failure, ImageBox, Instruction, Observation,
                      ObstacleBox, OracleConfig, OraclePlanner, Plan,
                      PlannerOutcome, ScriptedPlanner, Search, WaypointPlan,
                      avoid_adjust, quantize_depth)
from .scaler import ScalerConfig, scale_depth
from .simworld import (BoxObstacle, Collision, Progress, Running, Scene, Status,
                       Success, Target, Task, Timeout, UavState, WorldBounds,
                       advance_targets, check, load_scene, observe, step)
from .vlm import VlmConfig, VlmPlanner

__version__ = "0.1.0"


def scenes_dir() -> Path:
    """Path to the scene suite shipped with the package."""
    return Path(str(importlib.resources.files("uavnav").joinpath("scenes")))
