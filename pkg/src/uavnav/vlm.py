"""Remote vision-language planner client.

Speaks a chat-completions style HTTP endpoint: one POST per plan request
carrying the rendered prompt plus the current frame as a base64 image.  The
model must answer with a single JSON object on the wire schema

    {"target": {"u": int, "v": int, "distance": int},
     "obstacles": [{"x1": int, "y1": int, "x2": int, "y2": int, "label": str}],
     "done": bool}

Out-of-range coordinates are clamped into the image and the distance label
into {1..L} (both logged).  A malformed or failed reply is retried with the
parse error appended to the prompt; after ``max_attempts`` total attempts the
planner returns Failure with a machine-readable reason.  The API credential is
read from the environment variable named in the config and never logged.
"""

from __future__ import annotations

import base64
import importlib.resources
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import requests

from .geometry import CameraModel, PixelWaypoint
from .planner import (Done, Failure, ImageBox, Instruction, Observation, Plan,
                      PlannerOutcome, WaypointPlan)

logger = logging.getLogger(__name__)

PROMPT_VERSION = "v1"


def load_prompt_template(version: str = PROMPT_VERSION) -> str:
    ref = importlib.resources.files("uavnav").joinpath(f"assets/prompt_{version}.txt")
    return ref.read_text(encoding="utf-8")


def render_prompt(template: str, instruction: str, cam: CameraModel,
                  num_labels: int, avoid_mode: bool) -> str:
    avoid_note = ("Obstacle avoidance is ON: report every obstacle bounding box and "
                  "place the waypoint so the straight path avoids all boxes."
                  if avoid_mode else
                  "Obstacle avoidance is OFF: the obstacles list may be empty.")
    return template.format(
        instruction=instruction,
        image_width=cam.width,
        image_height=cam.height,
        num_depth_labels=num_labels,
        avoid_mode_note=avoid_note,
    )


def extract_json_object(text: str) -> dict:
    """Return the first balanced JSON object embedded in free-form text.

    Handles markdown code fences and leading/trailing prose; raises
    ValueError if no parseable object exists.
    """
    start = text.find("{")
    while start != -1:
        depth = 0
        in_str = False
        escape = False
        for i in range(start, len(text)):
            ch = text[i]
            if in_str:
                if escape:
                    escape = False
                elif ch == "\\":
                    escape = True
                elif ch == '"':
                    in_str = False
                continue
            if ch == '"':
                in_str = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    candidate = text[start:i + 1]
                    try:
                        obj = json.loads(candidate)
                    except json.JSONDecodeError as e:
                        raise ValueError(f"unparseable JSON object: {e}") from e
                    if not isinstance(obj, dict):
                        raise ValueError("top-level JSON value is not an object")
                    return obj
        start = text.find("{", start + 1)
    raise ValueError("no JSON object found in reply")


@dataclass(frozen=True)
class VlmConfig:
    endpoint_url: str = "http://127.0.0.1:8080/v1/chat/completions"
    model: str = "local-vlm"
    api_key_env: str = "UAVNAV_VLM_API_KEY"
    timeout_s: float = 30.0
    max_attempts: int = 3
    num_labels: int = 10
    avoid_mode: bool = True
    prompt_version: str = PROMPT_VERSION

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


def _clamp(value: float, lo: float, hi: float, what: str) -> float:
    if value < lo or value > hi:
        logger.warning("clamping %s=%s into [%s, %s]", what, value, lo, hi)
        return min(hi, max(lo, value))
    return value


def parse_wire_reply(obj: dict, cam: CameraModel, num_labels: int) -> PlannerOutcome:
    """Validate a wire-schema object and convert it to an outcome.

    Raises ValueError on schema violations (triggering a retry upstream).
    """
    if not isinstance(obj.get("done"), bool):
        if "done" in obj:
            raise ValueError(f"'done' must be a bool, got {obj['done']!r}")
        obj = {**obj, "done": False}
    if obj["done"]:
        return Done()

    target = obj.get("target")
    if not isinstance(target, dict):
        raise ValueError("missing 'target' object")
    for key in ("u", "v", "distance"):
        if not isinstance(target.get(key), (int, float)) or isinstance(target.get(key), bool):
            raise ValueError(f"target.{key} missing or non-numeric")

    u = _clamp(float(target["u"]), 0.0, float(cam.width), "target.u")
    v = _clamp(float(target["v"]), 0.0, float(cam.height), "target.v")
    distance = int(_clamp(int(target["distance"]), 1, num_labels, "target.distance"))

    raw_boxes = obj.get("obstacles", [])
    if not isinstance(raw_boxes, list):
        raise ValueError("'obstacles' must be a list")
    boxes = []
    for rb in raw_boxes:
        if not isinstance(rb, dict):
            raise ValueError("obstacle entries must be objects")
        try:
            x1, y1 = float(rb["x1"]), float(rb["y1"])
            x2, y2 = float(rb["x2"]), float(rb["y2"])
        except (KeyError, TypeError, ValueError) as e:
            raise ValueError(f"bad obstacle box: {e}") from e
        x1 = _clamp(x1, 0.0, float(cam.width), "obstacle.x1")
        x2 = _clamp(x2, 0.0, float(cam.width), "obstacle.x2")
        y1 = _clamp(y1, 0.0, float(cam.height), "obstacle.y1")
        y2 = _clamp(y2, 0.0, float(cam.height), "obstacle.y2")
        if x1 >= x2 or y1 >= y2:
            logger.warning("dropping degenerate obstacle box %s", rb)
            continue
        boxes.append(ImageBox(x1, y1, x2, y2, str(rb.get("label", ""))))

    return Plan(WaypointPlan(PixelWaypoint(u, v), distance, tuple(boxes),
                             rationale=obj.get("rationale")))


@dataclass
class VlmPlanner:
    """Planner backed by a remote model endpoint."""

    camera: CameraModel
    config: VlmConfig = field(default_factory=VlmConfig)
    post_fn: Callable = requests.post
    _template: Optional[str] = None

    def reset(self) -> None:
        pass

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def plan(self, instruction: Instruction, obs: Observation) -> PlannerOutcome:
        if obs.frame is None:
            return Failure("no frame attached to observation")
        if self._template is None:
            self._template = load_prompt_template(self.config.prompt_version)
        prompt = render_prompt(self._template, instruction.text, self.camera,
                               self.config.num_labels, self.config.avoid_mode)
        image_b64 = base64.b64encode(obs.frame).decode("ascii")

        last_error = ""
        for attempt in range(1, self.config.max_attempts + 1):
            user_text = prompt if not last_error else (
                f"{prompt}\n\nYour previous reply could not be used: {last_error}\n"
                "Reply with exactly one JSON object and nothing else.")
            payload = {
                "model": self.config.model,
                "messages": [
                    {"role": "user", "content": [
                        {"type": "text", "text": user_text},
                        {"type": "image_url",
                         "image_url": {"url": f"data:image/png;base64,{image_b64}"}},
                    ]},
                ],
            }
            try:
                resp = self.post_fn(self.config.endpoint_url, json=payload,
                                    headers=self._headers(), timeout=self.config.timeout_s)
                resp.raise_for_status()
                body = resp.json()
                content = body["choices"][0]["message"]["content"]
                return parse_wire_reply(extract_json_object(content), self.camera,
                                        self.config.num_labels)
            except (requests.RequestException, ValueError, KeyError, IndexError, TypeError) as e:
                last_error = f"{type(e).__name__}: {e}"
                logger.warning("plan attempt %d/%d failed: %s",
                               attempt, self.config.max_attempts, last_error)
        return Failure(f"remote planner failed after {self.config.max_attempts} attempts: {last_error}")
