"""Closed-loop episode runner, metrics, trajectory records, replay, suites.

One episode is a repeat of: observe, request a plan (the world keeps ticking
through the simulated inference latency), lift the planned waypoint to a 3D
displacement, schedule rc commands, and execute them tick by tick with
adjudication after every tick.  The loop ends on Success / Collision /
Timeout, on a planner Failure, on an unverified Done, or after max_replans.

Two interleavings are supported.  Sequential (default): the active schedule
drains fully, then the next plan is requested and the vehicle hovers through
the latency stall.  Pipelined (``pipelined=True``): the next plan is requested
during the tail of the current schedule so the stall overlaps execution.

Trajectory records are line-delimited JSON with a schema-versioned header row,
one row per planner call ("plan"), one per applied outcome ("apply"), and one
per tick.  Replaying a record feeds its plan rows through a scripted planner
and must reproduce the original tick rows bit for bit.
"""

from __future__ import annotations

import json
import logging
import math
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import kernels
from .config import EpisodeConfig
from .control import (STOP, CommandSchedule, RcCommand, decompose, schedule,
                      vertical_step, yaw_sweep)
from .frames import schematic_frame
from .geometry import Displacement3, normalize_pixel, unproject
from .planner import (Done, Failure, Observation, OraclePlanner, OracleView,
                      PlannerOutcome, ScriptedPlanner, Search, avoid_adjust,
                      outcome_from_dict, outcome_to_dict)
from .scaler import scale_depth
from .simworld import (Progress, Running, Scene, Status, Success, Task, UavState,
                       check, load_scene, observe, rc_body_velocity,
                       scene_from_dict, scene_to_dict, status_label)
from .vlm import VlmConfig, VlmPlanner

logger = logging.getLogger(__name__)

RECORD_SCHEMA_VERSION = 1


class RecordFormatError(ValueError):
    """Unreadable, truncated, or schema-incompatible trajectory record."""


class ReplayMismatchError(RuntimeError):
    """A replayed episode diverged from its source record."""


class EpisodeCrash(RuntimeError):
    """An episode raised mid-flight; carries the partial trajectory record."""

    def __init__(self, cause: BaseException, record: "EpisodeRecord"):
        super().__init__(f"{type(cause).__name__}: {cause}")
        self.cause = cause
        self.record = record


@dataclass(frozen=True)
class Metrics:
    success: bool
    terminal: str              # "success" | "collision:<label>" | "timeout" | failure reason
    completion_time: float     # movement initiation to terminal, seconds
    path_length: float         # meters
    replans: int               # planner invocations
    sim_time: float            # episode end time, seconds

    def to_dict(self) -> dict:
        return {"success": self.success, "terminal": self.terminal,
                "completion_time_s": self.completion_time,
                "path_length_m": self.path_length, "replans": self.replans,
                "sim_time_s": self.sim_time}


@dataclass
class EpisodeRecord:
    header: dict
    plan_rows: list = field(default_factory=list)
    apply_rows: list = field(default_factory=list)
    tick_rows: list = field(default_factory=list)

    def all_rows(self) -> list:
        merged = self.plan_rows + self.apply_rows + self.tick_rows
        merged.sort(key=lambda r: (r.get("t", 0.0), _ROW_ORDER[r["type"]], r.get("seq", -1)))
        return [self.header] + merged

    def write(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for row in self.all_rows():
                f.write(json.dumps(row, separators=(",", ":")) + "\n")


_ROW_ORDER = {"header": 0, "plan": 1, "apply": 2, "tick": 3}


def read_record(path: Union[str, Path]) -> EpisodeRecord:
    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise RecordFormatError(
                    f"{path}: truncated or corrupt row at line {lineno} "
                    f"(last valid row is line {lineno - 1}): {e}") from e
    if not rows or rows[0].get("type") != "header":
        raise RecordFormatError(f"{path}: missing header row")
    header = rows[0]
    if header.get("schema_version") != RECORD_SCHEMA_VERSION:
        raise RecordFormatError(
            f"{path}: schema_version {header.get('schema_version')!r} unsupported "
            f"(expected {RECORD_SCHEMA_VERSION})")
    rec = EpisodeRecord(header=header)
    for row in rows[1:]:
        kind = row.get("type")
        if kind == "plan":
            rec.plan_rows.append(row)
        elif kind == "apply":
            rec.apply_rows.append(row)
        elif kind == "tick":
            rec.tick_rows.append(row)
        else:
            raise RecordFormatError(f"{path}: unknown row type {kind!r}")
    return rec


def _ticks_for(duration: float, dt: float) -> int:
    """Quantize a command duration up to whole ticks (never undershoot)."""
    if duration <= 0.0:
        return 0
    return max(1, math.ceil(duration / dt - 1e-9))


def _quantized_rc(rc: RcCommand, duration: float, n_ticks: int, dt: float) -> RcCommand:
    """Rescale an rc command for its tick-quantized duration.

    Rounding the duration up to n ticks at the scheduled rate would overshoot
    the commanded distance by up to one tick of travel (catastrophic for yaw:
    a 5-degree heading error can steer the following translation into an
    obstacle).  Executing at rate * duration / (n * dt) for n ticks covers the
    commanded distance exactly instead.
    """
    if n_ticks <= 0 or rc.is_stop():
        return rc
    f = min(1.0, duration / (n_ticks * dt))
    return RcCommand(rc.roll * f, rc.pitch * f, rc.throttle * f, rc.yaw_rate * f)


def _jittered_start(start: UavState, cfg: EpisodeConfig) -> UavState:
    if not cfg.jitter_enabled:
        return start
    rng = np.random.default_rng(cfg.seed)
    dx = float(rng.uniform(-cfg.jitter_pos, cfg.jitter_pos))
    dy = float(rng.uniform(-cfg.jitter_pos, cfg.jitter_pos))
    dyaw = float(rng.uniform(-cfg.jitter_yaw, cfg.jitter_yaw))
    return UavState(start.x + dx, start.y + dy, start.z, start.yaw + dyaw)


class _Episode:
    """Single-owner mutable episode state; driven by run_episode only."""

    def __init__(self, cfg: EpisodeConfig, scene: Scene, task: Task, start: UavState,
                 planner=None):
        kernels.warmup()
        self.cfg = cfg
        self.task = task
        self.cam = cfg.camera
        self.dt = cfg.dt
        self.scene0 = scene
        self.start = _jittered_start(start, cfg)
        self.state = self.start
        self.targets0 = scene.targets
        self.tpos = np.array([t.position for t in scene.targets], dtype=np.float64)
        self.tvel = np.array([t.velocity for t in scene.targets], dtype=np.float64)
        self.blo = np.array(scene.bounds.lo, dtype=np.float64)
        self.bhi = np.array(scene.bounds.hi, dtype=np.float64)
        self.k = 0
        self.progress = Progress()
        self.status: Status = Running()
        self.terminal_reason: Optional[str] = None
        self.replans = 0
        self.first_motion_tick: Optional[int] = None
        self.path_length = 0.0
        self.latency_ticks = _ticks_for(cfg.planner_latency, cfg.dt)
        self.planner = planner if planner is not None else self._make_planner()
        self.record = EpisodeRecord(header={
            "type": "header",
            "schema_version": RECORD_SCHEMA_VERSION,
            "backend": kernels.BACKEND,
            "config": cfg.to_dict(),
            "scene": scene_to_dict(scene, task, self.start),
        })
        self.last_obs: Optional[Observation] = None
        self._pending: Optional[tuple[PlannerOutcome, int]] = None  # (outcome, issued_tick)

    # -- wiring ---------------------------------------------------------------

    def _make_planner(self):
        kind = self.cfg.planner_kind
        if kind == "oracle":
            return OraclePlanner(self.cam, self._oracle_view, self.cfg.oracle)
        if kind == "vlm":
            vcfg = self.cfg.vlm if self.cfg.vlm is not None else VlmConfig(
                num_labels=self.cfg.scaler.num_labels)
            return VlmPlanner(self.cam, vcfg)
        raise ValueError("scripted planner requires an explicit outcome script")

    def _oracle_view(self) -> OracleView:
        idx = min(self.progress.goal_index, len(self.task.goal_sequence) - 1)
        goal = self.task.goal_sequence[idx]
        j = next(i for i, t in enumerate(self.targets0) if t.target_id == goal)
        gx, gy, gz = (float(v) for v in self.tpos[j])
        ox = gx - self.state.x
        oy = gy - self.state.y
        oz = gz - self.state.z
        c = math.cos(self.state.yaw)
        s = math.sin(self.state.yaw)
        body = (c * ox - s * oy, s * ox + c * oy, oz)
        return OracleView(
            goal_body=Displacement3(*body),
            goal_range=math.sqrt(ox * ox + oy * oy + oz * oz),
            success_threshold=self.task.success_threshold,
            follow_mode=(self.task.category == "follow"),
        )

    def _scene_now(self) -> Scene:
        targets = tuple(
            replace(t, position=(float(self.tpos[j, 0]), float(self.tpos[j, 1]),
                                 float(self.tpos[j, 2])),
                    velocity=(float(self.tvel[j, 0]), float(self.tvel[j, 1]),
                              float(self.tvel[j, 2])))
            for j, t in enumerate(self.targets0)
        )
        return replace(self.scene0, targets=targets)

    # -- observation / adjudication -------------------------------------------

    def _tick_update(self) -> bool:
        """Observe then adjudicate the current tick; True if now terminal."""
        scene = self._scene_now()
        t = self.k * self.dt
        obs = observe(scene, self.state, self.cam, t)
        self.last_obs = obs
        self.status, self.progress = check(scene, self.state, self.task,
                                           self.progress, t, obs,
                                           uav_radius=self.cfg.uav_radius)
        return not isinstance(self.status, Running)

    # -- planning --------------------------------------------------------------

    def _issue_request(self) -> tuple[PlannerOutcome, int]:
        obs = self.last_obs
        if self.cfg.planner_kind == "vlm" and obs is not None and obs.frame is None:
            obs = replace(obs, frame=schematic_frame(obs))
        self.replans += 1
        outcome = self.planner.plan(self.task.instruction, obs)
        issued_tick = self.k
        self.record.plan_rows.append({
            "type": "plan", "seq": self.replans, "tick": issued_tick,
            "t": issued_tick * self.dt, "outcome": outcome_to_dict(outcome),
        })
        return outcome, issued_tick

    def _avoid_margin(self) -> float:
        margin = self.cfg.avoid_margin_px
        obs = self.last_obs
        if obs is None:
            return margin
        ranges = [ev.range_m for ev in obs.obstacle_views() if ev.box is not None]
        if not ranges:
            return margin
        lateral_per_px = self.cam.tan_alpha * min(ranges) / (self.cam.width / 2.0)
        if lateral_per_px > 0.0:
            needed = (self.cfg.uav_radius + self.cfg.avoid_clearance_m) / lateral_per_px
            margin = max(margin, needed)
        return margin

    def _schedule_for(self, outcome: PlannerOutcome, seq: int) -> Optional[CommandSchedule]:
        """Build the command schedule for an applied outcome (logs an apply row)."""
        if isinstance(outcome, Search):
            step_map = {
                "left": lambda: yaw_sweep(-self.cfg.oracle.search_step, self.cfg.speeds),
                "right": lambda: yaw_sweep(self.cfg.oracle.search_step, self.cfg.speeds),
                "up": lambda: vertical_step(self.cfg.oracle.vertical_step, self.cfg.speeds),
                "down": lambda: vertical_step(-self.cfg.oracle.vertical_step, self.cfg.speeds),
            }
            sched = step_map[outcome.direction]()
            self.record.apply_rows.append({
                "type": "apply", "seq": seq, "tick": self.k, "t": self.k * self.dt,
                "derived": {"search": outcome.direction, "schedule_digest": sched.digest()},
            })
            return sched

        plan = outcome.plan
        wp = plan.waypoint
        margin = None
        if self.cfg.avoid_enabled and plan.obstacles:
            margin = self._avoid_margin()
            wp = avoid_adjust(wp, plan.obstacles, margin, float(self.cam.width))
        label = plan.depth
        if not 1 <= label <= self.cfg.scaler.num_labels:
            clamped = max(1, min(self.cfg.scaler.num_labels, label))
            logger.warning("clamping depth label %d to %d", label, clamped)
            label = clamped
        d_adj = scale_depth(self.cfg.scaler, label)
        disp = unproject(self.cam, normalize_pixel(self.cam, wp), d_adj)
        prim = decompose(disp)
        sched = schedule(prim, self.cfg.speeds, self.cfg.deadbands)

        c = math.cos(self.state.yaw)
        s = math.sin(self.state.yaw)
        world_target = [self.state.x + c * disp.sx + s * disp.sy,
                        self.state.y - s * disp.sx + c * disp.sy,
                        self.state.z + disp.sz]
        self.record.apply_rows.append({
            "type": "apply", "seq": seq, "tick": self.k, "t": self.k * self.dt,
            "derived": {
                "waypoint_px": [wp.u, wp.v],
                "avoid_margin_px": margin,
                "depth_label": label,
                "d_adj_m": d_adj,
                "displacement_m": [disp.sx, disp.sy, disp.sz],
                "primitives": [prim.delta_yaw, prim.delta_pitch, prim.delta_throttle],
                "world_target_m": world_target,
                "schedule_digest": sched.digest(),
            },
        })
        return sched

    # -- execution --------------------------------------------------------------

    def _run_block(self, rc: RcCommand, n_ticks: int, plan_seq: Optional[int],
                   request_at: Optional[int] = None) -> str:
        """Execute n ticks of one rc command.

        Returns "terminal", "goal_advanced", or "ok".  Fires the pipelined
        plan request when the global tick counter reaches request_at.
        """
        if n_ticks <= 0:
            return "ok"
        vx, vy, vz, wz = rc_body_velocity(rc, self.cfg.speeds)
        moving = not rc.is_stop()
        uav_blk = np.empty((n_ticks, 4), dtype=np.float64)
        kernels.rc_block(uav_blk, self.state.x, self.state.y, self.state.z,
                         self.state.yaw, vx, vy, vz, wz, self.dt)
        if len(self.targets0):
            tpos_blk = np.empty((n_ticks,) + self.tpos.shape, dtype=np.float64)
            tvel_blk = np.empty((n_ticks,) + self.tvel.shape, dtype=np.float64)
            kernels.targets_block(tpos_blk, tvel_blk, self.tpos, self.tvel,
                                  self.blo, self.bhi, self.dt)
        else:
            tpos_blk = tvel_blk = None

        rc_list = [rc.roll, rc.pitch, rc.throttle, rc.yaw_rate]
        for i in range(n_ticks):
            prev = self.state
            self.k += 1
            self.state = UavState(float(uav_blk[i, 0]), float(uav_blk[i, 1]),
                                  float(uav_blk[i, 2]), float(uav_blk[i, 3]))
            if tpos_blk is not None:
                self.tpos = tpos_blk[i]
                self.tvel = tvel_blk[i]
            self.path_length += math.sqrt((self.state.x - prev.x) ** 2
                                          + (self.state.y - prev.y) ** 2
                                          + (self.state.z - prev.z) ** 2)
            if moving and self.first_motion_tick is None:
                self.first_motion_tick = self.k
            prev_goal = self.progress.goal_index
            terminal = self._tick_update()
            self.record.tick_rows.append({
                "type": "tick", "k": self.k, "t": self.k * self.dt,
                "state": [self.state.x, self.state.y, self.state.z, self.state.yaw],
                "rc": rc_list, "plan_seq": plan_seq,
            })
            if terminal:
                self._truncate_targets(tpos_blk, tvel_blk, i)
                return "terminal"
            if self.progress.goal_index != prev_goal:
                self._truncate_targets(tpos_blk, tvel_blk, i)
                return "goal_advanced"
            if request_at is not None and self.k == request_at:
                self._pending = self._issue_request()
        return "ok"

    def _truncate_targets(self, tpos_blk, tvel_blk, i: int) -> None:
        if tpos_blk is not None:
            self.tpos = tpos_blk[i].copy()
            self.tvel = tvel_blk[i].copy()

    def _execute_schedule(self, sched: CommandSchedule, plan_seq: int) -> str:
        counts = [_ticks_for(c.duration, self.dt) for c in sched.commands]
        total = sum(counts)
        request_at = None
        if (self.cfg.pipelined and self.latency_ticks > 0 and total > 0
                and self._pending is None and self.replans < self.cfg.max_replans):
            request_at = self.k + max(0, total - self.latency_ticks)
            if request_at == self.k:
                self._pending = self._issue_request()
                request_at = None
        for cmd, n in zip(sched.commands, counts):
            result = self._run_block(_quantized_rc(cmd.rc, cmd.duration, n, self.dt),
                                     n, plan_seq, request_at)
            if result != "ok":
                if result == "goal_advanced":
                    self._pending = None  # stale: planned against the previous goal
                return result
        return "ok"

    # -- main loop ---------------------------------------------------------------

    def run(self) -> tuple[Metrics, EpisodeRecord]:
        terminal = self._tick_update()
        self.record.tick_rows.append({
            "type": "tick", "k": 0, "t": 0.0,
            "state": [self.state.x, self.state.y, self.state.z, self.state.yaw],
            "rc": [0.0, 0.0, 0.0, 0.0], "plan_seq": None,
        })
        while not terminal:
            if self._pending is not None:
                outcome, issued_tick = self._pending
                self._pending = None
            else:
                if self.replans >= self.cfg.max_replans:
                    self.terminal_reason = "max_replans"
                    break
                outcome, issued_tick = self._issue_request()
            seq = self.replans

            # The world keeps ticking (hover) until the result is "ready".
            ready_tick = issued_tick + self.latency_ticks
            if self.k < ready_tick:
                result = self._run_block(STOP, ready_tick - self.k, None)
                if result == "terminal":
                    break
                if result == "goal_advanced":
                    continue  # outcome is stale: it planned against the previous goal

            if isinstance(outcome, Failure):
                self.terminal_reason = f"planner_failure:{outcome.reason}"
                break
            if isinstance(outcome, Done):
                # Every tick is adjudicated, so an un-adjudicated Done means the
                # planner's belief is wrong (e.g. goal out of view): not a success.
                self.terminal_reason = "done_unverified"
                break
            sched = self._schedule_for(outcome, seq)
            result = self._execute_schedule(sched, seq)
            if result == "terminal":
                break
            # "ok" or "goal_advanced": loop around and replan.
        return self._metrics(), self.record

    def _metrics(self) -> Metrics:
        if isinstance(self.status, Running):
            terminal = self.terminal_reason or "incomplete"
        else:
            terminal = status_label(self.status)
        if self.first_motion_tick is None:
            completion = 0.0
        else:
            completion = (self.k - self.first_motion_tick) * self.dt
        m = Metrics(
            success=isinstance(self.status, Success),
            terminal=terminal,
            completion_time=completion,
            path_length=self.path_length,
            replans=self.replans,
            sim_time=self.k * self.dt,
        )
        self.record.header["metrics"] = m.to_dict()
        return m


def run_episode(cfg: EpisodeConfig, scene: Scene, task: Task, start: UavState,
                planner=None) -> tuple[Metrics, EpisodeRecord]:
    """Run one closed-loop episode; returns metrics and the trajectory record.

    An exception inside the loop is re-raised as EpisodeCrash carrying the
    partial record, so callers can persist the trajectory up to the fault.
    """
    episode = _Episode(cfg, scene, task, start, planner=planner)
    try:
        return episode.run()
    except Exception as e:
        raise EpisodeCrash(e, episode.record) from e


def run_episode_file(cfg: EpisodeConfig, scene_path: Union[str, Path],
                     planner=None) -> tuple[Metrics, EpisodeRecord]:
    scene, task, start = load_scene(scene_path)
    return run_episode(cfg, scene, task, start, planner=planner)


# -- replay ---------------------------------------------------------------------


def replay(record_path: Union[str, Path], verify: bool = True,
           overrides: Optional[dict] = None) -> tuple[Metrics, EpisodeRecord]:
    """Re-run an episode from its trajectory record via the scripted planner.

    With verify=True (default) the replayed tick rows must match the record
    exactly; any divergence raises ReplayMismatchError.  ``overrides`` is
    compared against the recorded config: any differing key is a mismatch
    error, because a replay only reproduces the recorded configuration.
    """
    rec = read_record(record_path)
    header = rec.header
    if header.get("backend") != kernels.BACKEND:
        raise RecordFormatError(
            f"record was produced with kernel backend {header.get('backend')!r} "
            f"but the active backend is {kernels.BACKEND!r}")
    cfg = EpisodeConfig.from_dict(header["config"])
    if overrides:
        recorded = header["config"]
        for key, value in overrides.items():
            if key not in recorded:
                raise RecordFormatError(f"unknown config key {key!r} in replay overrides")
            if recorded[key] != value:
                raise RecordFormatError(
                    f"config mismatch on {key!r}: record has {recorded[key]!r}, "
                    f"requested {value!r}")
    scene, task, start = scene_from_dict(header["scene"])
    outcomes = [outcome_from_dict(row["outcome"]) for row in rec.plan_rows]
    cfg = replace(cfg, planner_kind="scripted", jitter_enabled=False)
    metrics, new_rec = run_episode(cfg, scene, task, start,
                                   planner=ScriptedPlanner(outcomes))
    if verify:
        if len(new_rec.tick_rows) != len(rec.tick_rows):
            raise ReplayMismatchError(
                f"replay produced {len(new_rec.tick_rows)} ticks, "
                f"record has {len(rec.tick_rows)}")
        for old, new in zip(rec.tick_rows, new_rec.tick_rows):
            if old["state"] != new["state"] or old["rc"] != new["rc"] or old["k"] != new["k"]:
                raise ReplayMismatchError(f"replay diverged at tick {old['k']}")
    return metrics, new_rec


# -- suites ------------------------------------------------------------------------


def run_suite(suite_dir: Union[str, Path], cfg: EpisodeConfig, reps: int = 5,
              out_dir: Optional[Union[str, Path]] = None) -> dict:
    """Run every scene under suite_dir ``reps`` times and aggregate per category.

    Returns (and optionally writes) a machine-readable report.  The report
    bytes are deterministic for a given (suite, config, seed).
    """
    paths = sorted(p for p in Path(suite_dir).rglob("*.json"))
    if not paths:
        raise ValueError(f"no scene files under {suite_dir}")
    episodes = []
    for path in paths:
        scene, task, start = load_scene(path)
        for rep in range(reps):
            ecfg = replace(cfg, seed=cfg.seed + rep)
            try:
                metrics, rec = run_episode(ecfg, scene, task, start)
            except EpisodeCrash as e:
                crash_dir = Path(out_dir) if out_dir is not None else Path(tempfile.mkdtemp(
                    prefix="uavnav_crash_"))
                crash_dir.mkdir(parents=True, exist_ok=True)
                crash_log = crash_dir / f"{path.stem}_rep{rep}_crash.jsonl"
                e.record.write(crash_log)
                raise RuntimeError(
                    f"episode {path.name} rep {rep} crashed ({e}); "
                    f"partial trajectory log: {crash_log}") from e
            episodes.append({
                "scene": path.name, "category": task.category, "rep": rep,
                "seed": ecfg.seed, **metrics.to_dict(),
            })
            if out_dir is not None:
                out = Path(out_dir)
                out.mkdir(parents=True, exist_ok=True)
                rec.write(out / f"{path.stem}_rep{rep}.jsonl")

    categories: dict[str, dict] = {}
    for ep in episodes:
        cat = categories.setdefault(ep["category"], {"episodes": 0, "successes": 0,
                                                     "completion_times": []})
        cat["episodes"] += 1
        if ep["success"]:
            cat["successes"] += 1
            cat["completion_times"].append(ep["completion_time_s"])

    def _summarize(bucket: dict) -> dict:
        times = bucket.pop("completion_times")
        bucket["success_rate_pct"] = 100.0 * bucket["successes"] / bucket["episodes"]
        bucket["mean_completion_time_s"] = (sum(times) / len(times)) if times else None
        return bucket

    report = {
        "schema_version": RECORD_SCHEMA_VERSION,
        "suite": str(suite_dir),
        "reps": reps,
        "base_seed": cfg.seed,
        "planner": cfg.planner_kind,
        "categories": {cat: _summarize(b) for cat, b in sorted(categories.items())},
        "overall": {
            "episodes": len(episodes),
            "successes": sum(1 for e in episodes if e["success"]),
        },
        "episodes": episodes,
    }
    report["overall"]["success_rate_pct"] = (
        100.0 * report["overall"]["successes"] / report["overall"]["episodes"])
    times = [e["completion_time_s"] for e in episodes if e["success"]]
    report["overall"]["mean_completion_time_s"] = (sum(times) / len(times)) if times else None
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(render_report_json(report), encoding="utf-8")
    return report


def render_report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def render_report_table(report: dict) -> str:
    """Fixed-width per-category summary table."""

    def line(name: str, row: dict) -> str:
        mean_t = row["mean_completion_time_s"]
        mean_s = f"{mean_t:.1f}" if mean_t is not None else "-"
        frac = f"{row['successes']}/{row['episodes']}"
        return f"{name:<20} {row['success_rate_pct']:>7.1f}% {frac:>9} {mean_s:>14}"

    header = f"{'category':<20} {'SR':>8} {'episodes':>9} {'mean time (s)':>14}"
    lines = [header, "-" * len(header)]
    lines += [line(cat, row) for cat, row in report["categories"].items()]
    lines.append("-" * len(header))
    lines.append(line("overall", report["overall"]))
    return "\n".join(lines)
