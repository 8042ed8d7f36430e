import json
import logging

import pytest

from uavnav.geometry import CameraModel
from uavnav.planner import Done, Failure, Instruction, Observation, Plan
from uavnav.vlm import (VlmConfig, VlmPlanner, extract_json_object,
                        load_prompt_template, parse_wire_reply, render_prompt)

CAM = CameraModel()
INSTRUCTION = Instruction("fly to the red chair")


def _obs(frame=b"\x89PNG fakebytes"):
    return Observation(timestamp=0.0, camera=CAM, frame=frame)


def _planner(mock_vlm, **overrides):
    overrides.setdefault("timeout_s", 5.0)
    cfg = VlmConfig(endpoint_url=mock_vlm.url, **overrides)
    return VlmPlanner(CAM, cfg)


# --- reply parsing -----------------------------------------------------------

def test_parse_schema_identity():
    out = parse_wire_reply(
        {"target": {"u": 480, "v": 360, "distance": 7}, "obstacles": [], "done": False},
        CAM, 10)
    assert isinstance(out, Plan)
    assert (out.plan.waypoint.u, out.plan.waypoint.v) == (480.0, 360.0)
    assert out.plan.depth == 7
    assert out.plan.obstacles == ()


def test_parse_done_short_circuits():
    assert isinstance(parse_wire_reply({"done": True}, CAM, 10), Done)


def test_parse_clamps_distance_with_warning(caplog):
    with caplog.at_level(logging.WARNING, logger="uavnav.vlm"):
        out = parse_wire_reply(
            {"target": {"u": 480, "v": 360, "distance": 14}, "obstacles": [],
             "done": False}, CAM, 10)
    assert out.plan.depth == 10
    assert any("target.distance" in r.getMessage() for r in caplog.records)


def test_parse_clamps_coordinates(caplog):
    with caplog.at_level(logging.WARNING, logger="uavnav.vlm"):
        out = parse_wire_reply(
            {"target": {"u": 2000, "v": -5, "distance": 3}, "done": False}, CAM, 10)
    assert (out.plan.waypoint.u, out.plan.waypoint.v) == (960.0, 0.0)


def test_parse_obstacle_boxes():
    out = parse_wire_reply(
        {"target": {"u": 100, "v": 100, "distance": 2},
         "obstacles": [{"x1": 10, "y1": 20, "x2": 60, "y2": 90, "label": "cone"}],
         "done": False}, CAM, 10)
    box = out.plan.obstacles[0]
    assert (box.x1, box.y1, box.x2, box.y2, box.label) == (10, 20, 60, 90, "cone")


@pytest.mark.parametrize("bad", [
    {},                                                    # no target, no done
    {"done": "yes"},                                       # non-bool done
    {"target": {"u": 1, "v": 2}, "done": False},           # missing distance
    {"target": {"u": "a", "v": 2, "distance": 3}, "done": False},
    {"target": {"u": 1, "v": 2, "distance": 3}, "obstacles": {}, "done": False},
])
def test_parse_rejects_malformed(bad):
    with pytest.raises(ValueError):
        parse_wire_reply(bad, CAM, 10)


# --- JSON extraction ----------------------------------------------------------

def test_extract_plain_object():
    assert extract_json_object('{"a": 1}') == {"a": 1}


def test_extract_from_markdown_fence():
    text = 'Sure!\n```json\n{"done": true}\n```\nanything else'
    assert extract_json_object(text) == {"done": True}


def test_extract_skips_prose_braces_in_strings():
    text = 'note {"x": "a } b", "y": 2} trailing'
    assert extract_json_object(text) == {"x": "a } b", "y": 2}


def test_extract_rejects_no_object():
    with pytest.raises(ValueError, match="no JSON object"):
        extract_json_object("I cannot help with that")


# --- prompt template ----------------------------------------------------------

def test_prompt_renders_all_placeholders():
    template = load_prompt_template()
    text = render_prompt(template, "find the dog", CAM, 10, avoid_mode=True)
    assert "find the dog" in text
    assert "960" in text and "720" in text
    assert "10" in text
    assert "avoidance is ON" in text
    off = render_prompt(template, "find the dog", CAM, 10, avoid_mode=False)
    assert "avoidance is OFF" in off


# --- end to end against the mock server ----------------------------------------

def test_plan_round_trip(mock_vlm):
    mock_vlm.responses.append({"content": json.dumps(
        {"target": {"u": 510, "v": 340, "distance": 6}, "obstacles": [], "done": False})})
    out = _planner(mock_vlm).plan(INSTRUCTION, _obs())
    assert isinstance(out, Plan)
    assert out.plan.depth == 6
    assert len(mock_vlm.requests) == 1
    payload = mock_vlm.requests[0]
    text = payload["messages"][0]["content"][0]["text"]
    assert "fly to the red chair" in text
    image_url = payload["messages"][0]["content"][1]["image_url"]["url"]
    assert image_url.startswith("data:image/png;base64,")


def test_three_malformed_replies_fail_after_exactly_three_requests(mock_vlm):
    for _ in range(3):
        mock_vlm.responses.append({"content": "I think you should fly forward."})
    out = _planner(mock_vlm).plan(INSTRUCTION, _obs())
    assert isinstance(out, Failure)
    assert "3 attempts" in out.reason
    assert len(mock_vlm.requests) == 3


def test_retry_appends_previous_error_to_prompt(mock_vlm):
    mock_vlm.responses.append({"content": "not json at all"})
    mock_vlm.responses.append({"content": '{"done": true}'})
    out = _planner(mock_vlm).plan(INSTRUCTION, _obs())
    assert isinstance(out, Done)
    assert len(mock_vlm.requests) == 2
    retry_text = mock_vlm.requests[1]["messages"][0]["content"][0]["text"]
    assert "could not be used" in retry_text


def test_http_error_retries_then_recovers(mock_vlm):
    mock_vlm.responses.append({"status": 500})
    mock_vlm.responses.append({"content": '{"done": true}'})
    out = _planner(mock_vlm).plan(INSTRUCTION, _obs())
    assert isinstance(out, Done)
    assert len(mock_vlm.requests) == 2


def test_timeout_counts_as_attempt(mock_vlm):
    mock_vlm.responses.append({"delay_s": 1.0, "content": '{"done": true}'})
    out = _planner(mock_vlm, timeout_s=0.2, max_attempts=1).plan(INSTRUCTION, _obs())
    assert isinstance(out, Failure)


def test_missing_frame_is_failure(mock_vlm):
    out = _planner(mock_vlm).plan(INSTRUCTION, _obs(frame=None))
    assert out == Failure("no frame attached to observation")
    assert len(mock_vlm.requests) == 0


def test_credential_header_from_named_env_var(mock_vlm, monkeypatch):
    monkeypatch.setenv("TEST_VLM_KEY", "sekret")
    planner = VlmPlanner(CAM, VlmConfig(endpoint_url=mock_vlm.url,
                                        api_key_env="TEST_VLM_KEY", timeout_s=5.0))
    assert planner._headers()["Authorization"] == "Bearer sekret"
