"""Episode configuration: defaults, JSON config files, and record round-trip.

The human-facing config file expresses angles in degrees and carries explicit
units in its key names; internally everything is radians/meters/seconds.  The
same EpisodeConfig serializes exactly (float-preserving) into trajectory-record
headers so a replay reconstructs the identical configuration.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

from .control import Deadbands, SpeedConfig
from .geometry import CameraModel
from .planner import OracleConfig
from .scaler import ScalerConfig
from .vlm import VlmConfig

PLANNER_KINDS = ("oracle", "scripted", "vlm")


class ConfigError(ValueError):
    """Invalid configuration file or option combination."""


@dataclass(frozen=True)
class EpisodeConfig:
    planner_kind: str = "oracle"
    camera: CameraModel = field(default_factory=CameraModel)
    scaler: ScalerConfig = field(default_factory=ScalerConfig)
    speeds: SpeedConfig = field(default_factory=SpeedConfig)
    deadbands: Deadbands = field(default_factory=Deadbands)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    vlm: Optional[VlmConfig] = None
    dt: float = 0.1                   # control tick, seconds
    planner_latency: float = 0.0      # simulated inference delay, seconds
    max_replans: int = 60
    seed: int = 0
    pipelined: bool = False           # plan during the tail of execution
    avoid_enabled: bool = True
    avoid_margin_px: float = 10.0
    avoid_clearance_m: float = 0.35   # physical clearance target beyond the UAV radius
    uav_radius: float = 0.15
    jitter_enabled: bool = True
    jitter_pos: float = 0.25          # +- meters on x/y of the start pose
    jitter_yaw: float = math.radians(5.0)

    def __post_init__(self):
        if self.planner_kind not in PLANNER_KINDS:
            raise ConfigError(f"unknown planner kind {self.planner_kind!r}")
        if not self.dt > 0.0:
            raise ConfigError(f"dt must be > 0, got {self.dt}")
        if self.planner_latency < 0.0:
            raise ConfigError(f"planner_latency must be >= 0, got {self.planner_latency}")
        if self.max_replans < 1:
            raise ConfigError("max_replans must be >= 1")

    def to_dict(self) -> dict:
        d = {
            "planner_kind": self.planner_kind,
            "camera": {"width": self.camera.width, "height": self.camera.height,
                       "alpha_rad": self.camera.alpha, "beta_rad": self.camera.beta},
            "scaler": {"s": self.scaler.s, "num_labels": self.scaler.num_labels,
                       "p": self.scaler.p, "d_min": self.scaler.d_min,
                       "mode": self.scaler.mode, "fixed_step": self.scaler.fixed_step},
            "speeds": {"p_yaw_rad_s": self.speeds.p_yaw, "p_pitch_m_s": self.speeds.p_pitch,
                       "p_throttle_m_s": self.speeds.p_throttle, "v_max_m_s": self.speeds.v_max,
                       "omega_max_rad_s": self.speeds.omega_max},
            "deadbands": {"yaw_rad": self.deadbands.yaw, "pitch_m": self.deadbands.pitch,
                          "throttle_m": self.deadbands.throttle},
            "oracle": {"num_labels": self.oracle.num_labels, "d_ref_m": self.oracle.d_ref,
                       "search_step_rad": self.oracle.search_step,
                       "vertical_step_m": self.oracle.vertical_step,
                       "follow_lead_m": self.oracle.follow_lead},
            "dt": self.dt,
            "planner_latency": self.planner_latency,
            "max_replans": self.max_replans,
            "seed": self.seed,
            "pipelined": self.pipelined,
            "avoid_enabled": self.avoid_enabled,
            "avoid_margin_px": self.avoid_margin_px,
            "avoid_clearance_m": self.avoid_clearance_m,
            "uav_radius": self.uav_radius,
            "jitter_enabled": self.jitter_enabled,
            "jitter_pos": self.jitter_pos,
            "jitter_yaw": self.jitter_yaw,
        }
        if self.vlm is not None:
            d["vlm"] = {"endpoint_url": self.vlm.endpoint_url, "model": self.vlm.model,
                        "api_key_env": self.vlm.api_key_env, "timeout_s": self.vlm.timeout_s,
                        "max_attempts": self.vlm.max_attempts, "num_labels": self.vlm.num_labels,
                        "avoid_mode": self.vlm.avoid_mode,
                        "prompt_version": self.vlm.prompt_version}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EpisodeConfig":
        cam = d["camera"]
        sc = d["scaler"]
        sp = d["speeds"]
        db = d["deadbands"]
        orc = d["oracle"]
        vlm = None
        if "vlm" in d:
            v = d["vlm"]
            vlm = VlmConfig(v["endpoint_url"], v["model"], v["api_key_env"], v["timeout_s"],
                            v["max_attempts"], v["num_labels"], v["avoid_mode"],
                            v["prompt_version"])
        return cls(
            planner_kind=d["planner_kind"],
            camera=CameraModel(cam["width"], cam["height"], cam["alpha_rad"], cam["beta_rad"]),
            scaler=ScalerConfig(sc["s"], sc["num_labels"], sc["p"], sc["d_min"],
                                sc["mode"], sc["fixed_step"]),
            speeds=SpeedConfig(sp["p_yaw_rad_s"], sp["p_pitch_m_s"], sp["p_throttle_m_s"],
                               sp["v_max_m_s"], sp["omega_max_rad_s"]),
            deadbands=Deadbands(db["yaw_rad"], db["pitch_m"], db["throttle_m"]),
            oracle=OracleConfig(orc["num_labels"], orc["d_ref_m"], orc["search_step_rad"],
                                orc["vertical_step_m"], orc["follow_lead_m"]),
            vlm=vlm,
            dt=d["dt"],
            planner_latency=d["planner_latency"],
            max_replans=d["max_replans"],
            seed=d["seed"],
            pipelined=d["pipelined"],
            avoid_enabled=d["avoid_enabled"],
            avoid_margin_px=d["avoid_margin_px"],
            avoid_clearance_m=d["avoid_clearance_m"],
            uav_radius=d["uav_radius"],
            jitter_enabled=d["jitter_enabled"],
            jitter_pos=d["jitter_pos"],
            jitter_yaw=d["jitter_yaw"],
        )


def _build_from_file_dict(data: dict) -> EpisodeConfig:
    cfg = EpisodeConfig()
    if "camera" in data:
        c = data["camera"]
        cfg = replace(cfg, camera=CameraModel.from_degrees(
            int(c.get("width", 960)), int(c.get("height", 720)),
            float(c.get("alpha_deg", 41.3)), float(c.get("beta_deg", 31.0))))
    if "scaler" in data:
        s = data["scaler"]
        cfg = replace(cfg, scaler=ScalerConfig(
            s=float(s.get("s_m", 10.0)), num_labels=int(s.get("num_labels", 10)),
            p=float(s.get("p", 1.8)), d_min=float(s.get("d_min_m", 0.1)),
            mode=s.get("mode", "adaptive"), fixed_step=float(s.get("fixed_step_m", 2.0))))
    if "speeds" in data:
        s = data["speeds"]
        cfg = replace(cfg, speeds=SpeedConfig(
            p_yaw=math.radians(float(s.get("p_yaw_deg_s", 50.0))),
            p_pitch=float(s.get("p_pitch_m_s", 0.5)),
            p_throttle=float(s.get("p_throttle_m_s", 0.5)),
            v_max=float(s.get("v_max_m_s", 1.0)),
            omega_max=math.radians(float(s.get("omega_max_deg_s", 100.0)))))
    if "deadbands" in data:
        s = data["deadbands"]
        cfg = replace(cfg, deadbands=Deadbands(
            yaw=math.radians(float(s.get("yaw_deg", 0.5))),
            pitch=float(s.get("pitch_m", 0.02)),
            throttle=float(s.get("throttle_m", 0.02))))
    if "oracle" in data:
        s = data["oracle"]
        cfg = replace(cfg, oracle=OracleConfig(
            num_labels=int(s.get("num_labels", cfg.scaler.num_labels)),
            d_ref=float(s.get("d_ref_m", 10.0)),
            search_step=math.radians(float(s.get("search_step_deg", 30.0))),
            vertical_step=float(s.get("vertical_step_m", 1.0)),
            follow_lead=float(s.get("follow_lead_m", 2.0))))
    if "vlm" in data:
        s = data["vlm"]
        cfg = replace(cfg, vlm=VlmConfig(
            endpoint_url=s.get("endpoint_url", VlmConfig.endpoint_url),
            model=s.get("model", VlmConfig.model),
            api_key_env=s.get("api_key_env", VlmConfig.api_key_env),
            timeout_s=float(s.get("timeout_s", 30.0)),
            max_attempts=int(s.get("max_attempts", 3)),
            num_labels=int(s.get("num_labels", cfg.scaler.num_labels)),
            avoid_mode=bool(s.get("avoid_mode", True))))
    if "harness" in data:
        s = data["harness"]
        cfg = replace(
            cfg,
            dt=float(s.get("dt_s", 0.1)),
            planner_latency=float(s.get("planner_latency_s", 0.0)),
            max_replans=int(s.get("max_replans", 60)),
            pipelined=bool(s.get("pipelined", False)),
            avoid_enabled=bool(s.get("avoid_enabled", True)),
            avoid_margin_px=float(s.get("avoid_margin_px", 10.0)),
            avoid_clearance_m=float(s.get("avoid_clearance_m", 0.35)),
            uav_radius=float(s.get("uav_radius_m", 0.15)),
            jitter_enabled=bool(s.get("jitter_enabled", True)),
            jitter_pos=float(s.get("jitter_pos_m", 0.25)),
            jitter_yaw=math.radians(float(s.get("jitter_yaw_deg", 5.0))),
        )
    return cfg


def load_config(path: Optional[Union[str, Path]] = None) -> EpisodeConfig:
    """Build an EpisodeConfig from a JSON config file (or pure defaults)."""
    if path is None:
        return EpisodeConfig()
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    try:
        return _build_from_file_dict(data)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid config file {path}: {e}") from e
