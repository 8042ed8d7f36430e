import json
import math
import pytest

from uavnav.config import EpisodeConfig
from uavnav.harness import (RecordFormatError, ReplayMismatchError, read_record,
                            render_report_json, replay, run_episode,
                            run_episode_file, run_suite)
from uavnav.planner import Done, Failure, Instruction, ScriptedPlanner, Search
from uavnav.simworld import Scene, Target, Task, UavState, WorldBounds
import uavnav

SCENES = uavnav.scenes_dir()


def _cfg(**kw):
    kw.setdefault("jitter_enabled", False)
    return EpisodeConfig(**kw)


def _nav_setup(target_pos=(0.0, 8.0, 1.5), threshold=1.0, timeout=120.0,
               category="navigation"):
    scene = Scene((Target("goal", target_pos),), (),
                  WorldBounds((-60, -60, 0), (60, 80, 30)))
    task = Task(Instruction("fly to the goal"), ("goal",), category,
                success_threshold=threshold, timeout=timeout)
    return scene, task, UavState(0.0, 0.0, 1.5, 0.0)


def test_target_eight_meters_ahead_needs_at_least_two_plans():
    # With adaptive scaling the first stride is 10 * 0.8^1.8 = 6.692 m < 8 m,
    # so a tight 1 m threshold forces at least one replan.
    scene, task, start = _nav_setup()
    metrics, record = run_episode(_cfg(), scene, task, start)
    assert metrics.success
    assert metrics.replans >= 2
    first = record.apply_rows[0]["derived"]
    assert first["depth_label"] == 8
    assert first["d_adj_m"] == pytest.approx(6.6920931365841486, rel=1e-9)


def test_goal_already_within_threshold_at_start():
    scene, task, start = _nav_setup(target_pos=(0.0, 0.8, 1.5))
    metrics, record = run_episode(_cfg(), scene, task, start)
    assert metrics.success
    assert metrics.completion_time == 0.0
    assert metrics.path_length == 0.0
    assert metrics.replans == 0
    assert all(row["rc"] == [0.0, 0.0, 0.0, 0.0] for row in record.tick_rows)


def test_planner_failure_marks_episode_unsuccessful():
    scene, task, start = _nav_setup()
    metrics, _ = run_episode(_cfg(planner_kind="scripted"), scene, task, start,
                             planner=ScriptedPlanner([Failure("remote timeout")]))
    assert not metrics.success
    assert metrics.terminal == "planner_failure:remote timeout"
    assert metrics.path_length == 0.0


def test_done_without_adjudicated_success_is_not_success():
    scene, task, start = _nav_setup(target_pos=(0.0, 20.0, 1.5))
    metrics, _ = run_episode(_cfg(planner_kind="scripted"), scene, task, start,
                             planner=ScriptedPlanner([Done()]))
    assert not metrics.success
    assert metrics.terminal == "done_unverified"


def test_max_replans_bounds_pathological_scripts():
    scene, task, start = _nav_setup(target_pos=(0.0, 50.0, 1.5), timeout=10_000.0)
    planner = ScriptedPlanner([Search("left"), Search("right")] * 200)
    metrics, _ = run_episode(_cfg(planner_kind="scripted", max_replans=9),
                             scene, task, start, planner=planner)
    assert not metrics.success
    assert metrics.terminal == "max_replans"
    assert metrics.replans == 9


def test_replan_monotonic_progress_toward_static_goal():
    metrics, record = run_episode_file(_cfg(seed=0), SCENES / "nav_03.json")
    assert metrics.success
    goal = record.header["scene"]["scene"]["targets"][0]["position_m"]
    ticks = {row["k"]: row for row in record.tick_rows}
    distances = []
    for apply_row in record.apply_rows:
        state = ticks[apply_row["tick"]]["state"]
        distances.append(math.dist(state[:3], goal))
    assert len(distances) >= 2
    assert all(b < a for a, b in zip(distances, distances[1:]))


def test_completion_time_accounting_is_exact():
    metrics, record = run_episode_file(_cfg(seed=1, planner_latency=1.5),
                                       SCENES / "nav_02.json")
    moving = [row["k"] for row in record.tick_rows if any(row["rc"])]
    k_move = min(moving)
    k_term = record.tick_rows[-1]["k"]
    assert metrics.completion_time == (k_term - k_move) * 0.1


def test_latency_injection_preserves_success_and_slows_completion():
    times = {}
    for latency in (0.0, 1.5, 3.0):
        metrics, _ = run_episode_file(_cfg(seed=0, planner_latency=latency),
                                      SCENES / "nav_01.json")
        assert metrics.success, f"latency {latency} broke the episode"
        times[latency] = metrics.completion_time
    assert times[0.0] < times[1.5] < times[3.0]
    # the pre-movement stall is excluded, every later stall is counted
    # (nav_01 needs exactly 2 plans at every latency)
    assert times[1.5] == pytest.approx(times[0.0] + 1.5, abs=1e-9)
    assert times[3.0] == pytest.approx(times[0.0] + 3.0, abs=1e-9)


def test_long_horizon_interrupts_schedule_at_goal_advance():
    metrics, record = run_episode_file(_cfg(seed=0), SCENES / "longh_02.json")
    assert metrics.success
    # three goals, each needing >= 2 strides: several applied plans
    assert len(record.apply_rows) >= 6


def test_jitter_is_seeded_and_optional():
    path = SCENES / "nav_01.json"
    base = json.loads(path.read_text())["start"]["position_m"]
    _, rec_a = run_episode_file(EpisodeConfig(seed=1), path)
    _, rec_b = run_episode_file(EpisodeConfig(seed=2), path)
    _, rec_c = run_episode_file(EpisodeConfig(seed=1), path)
    start_a = rec_a.header["scene"]["start"]["position_m"]
    start_b = rec_b.header["scene"]["start"]["position_m"]
    start_c = rec_c.header["scene"]["start"]["position_m"]
    assert start_a != start_b
    assert start_a == start_c
    assert start_a != base
    _, rec_d = run_episode_file(_cfg(seed=1), path)
    assert rec_d.header["scene"]["start"]["position_m"] == base


def test_pipelined_mode_overlaps_planning_and_still_succeeds(tmp_path):
    cfg = _cfg(seed=0, planner_latency=1.5, pipelined=True)
    metrics, record = run_episode_file(cfg, SCENES / "nav_04.json")
    assert metrics.success
    # at least one request must have been issued while a schedule was running
    apply_ticks = {row["seq"]: row["tick"] for row in record.apply_rows}
    overlapped = [row for row in record.plan_rows
                  if row["seq"] - 1 in apply_ticks and row["seq"] > 1
                  and row["tick"] < max(r["k"] for r in record.tick_rows)]
    assert overlapped
    p = tmp_path / "pipelined.jsonl"
    record.write(p)
    metrics2, _ = replay(p)
    assert metrics2 == metrics


# --- records and replay ---------------------------------------------------------

def test_replay_reproduces_trajectory_bitwise(tmp_path):
    metrics, record = run_episode_file(EpisodeConfig(seed=4, planner_latency=1.5),
                                       SCENES / "obstacle_01.json")
    p = tmp_path / "ep.jsonl"
    record.write(p)
    metrics2, record2 = replay(p, verify=True)
    assert metrics2 == metrics
    assert [r["state"] for r in record2.tick_rows] == [r["state"] for r in record.tick_rows]
    assert [r["rc"] for r in record2.tick_rows] == [r["rc"] for r in record.tick_rows]


def test_replay_of_follow_episode_with_moving_target(tmp_path):
    metrics, record = run_episode_file(EpisodeConfig(seed=2), SCENES / "follow_01.json")
    assert metrics.success
    p = tmp_path / "follow.jsonl"
    record.write(p)
    metrics2, _ = replay(p)
    assert metrics2 == metrics


def test_truncated_record_names_last_valid_row(tmp_path):
    _, record = run_episode_file(_cfg(), SCENES / "nav_01.json")
    p = tmp_path / "ep.jsonl"
    record.write(p)
    lines = p.read_text().splitlines(keepends=True)
    with open(p, "w") as f:
        f.writelines(lines[:-1])
        f.write(lines[-1][: len(lines[-1]) // 2])  # cut the final row in half
    with pytest.raises(RecordFormatError, match=r"last valid row is line \d+"):
        read_record(p)


def test_schema_version_mismatch_is_an_error(tmp_path):
    _, record = run_episode_file(_cfg(), SCENES / "nav_01.json")
    record.header["schema_version"] = 99
    p = tmp_path / "ep.jsonl"
    record.write(p)
    with pytest.raises(RecordFormatError, match="schema_version"):
        read_record(p)


def test_replay_rejects_conflicting_config_overrides(tmp_path):
    _, record = run_episode_file(_cfg(), SCENES / "nav_01.json")
    p = tmp_path / "ep.jsonl"
    record.write(p)
    with pytest.raises(RecordFormatError, match="config mismatch on 'dt'"):
        replay(p, overrides={"dt": 0.05})
    replay(p, overrides={"dt": 0.1})  # matching override is fine


def test_replay_rejects_foreign_backend(tmp_path):
    _, record = run_episode_file(_cfg(), SCENES / "nav_01.json")
    record.header["backend"] = "something-else"
    p = tmp_path / "ep.jsonl"
    record.write(p)
    with pytest.raises(RecordFormatError, match="backend"):
        replay(p)


def test_tampered_record_fails_replay_verification(tmp_path):
    _, record = run_episode_file(_cfg(), SCENES / "nav_01.json")
    record.tick_rows[50]["state"][0] += 1e-9
    p = tmp_path / "ep.jsonl"
    record.write(p)
    with pytest.raises(ReplayMismatchError, match="diverged at tick 50"):
        replay(p)


# --- suites ------------------------------------------------------------------------

def test_suite_aggregates_and_is_deterministic(tmp_path):
    suite = tmp_path / "suite"
    suite.mkdir()
    for stem in ("nav_01", "follow_01"):
        (suite / f"{stem}.json").write_text((SCENES / f"{stem}.json").read_text())
    cfg = EpisodeConfig(seed=5)
    report_a = run_suite(suite, cfg, reps=2)
    report_b = run_suite(suite, cfg, reps=2)
    assert render_report_json(report_a) == render_report_json(report_b)
    assert report_a["overall"]["episodes"] == 4
    assert report_a["overall"]["success_rate_pct"] == 100.0
    assert set(report_a["categories"]) == {"navigation", "follow"}
    nav = report_a["categories"]["navigation"]
    assert nav["successes"] == 2 and nav["episodes"] == 2
    assert nav["mean_completion_time_s"] > 0


def test_suite_omits_empty_categories(tmp_path):
    suite = tmp_path / "suite"
    suite.mkdir()
    (suite / "nav_01.json").write_text((SCENES / "nav_01.json").read_text())
    report = run_suite(suite, EpisodeConfig(seed=0), reps=1)
    assert list(report["categories"]) == ["navigation"]


def test_suite_requires_scenes(tmp_path):
    with pytest.raises(ValueError, match="no scene files"):
        run_suite(tmp_path, EpisodeConfig(), reps=1)


# --- remote planner in the loop ------------------------------------------------------

def test_full_episode_with_remote_planner(mock_vlm):
    # A dead-center goal 5 m out: replying "center pixel, label 5" twice walks
    # the vehicle inside the 2 m success threshold.
    from uavnav.vlm import VlmConfig
    reply = json.dumps({"target": {"u": 480, "v": 360, "distance": 5},
                        "obstacles": [], "done": False})
    for _ in range(6):
        mock_vlm.responses.append({"content": reply})
    scene, task, start = _nav_setup(target_pos=(0.0, 5.0, 1.5), threshold=2.0)
    cfg = _cfg(planner_kind="vlm",
               vlm=VlmConfig(endpoint_url=mock_vlm.url, timeout_s=5.0))
    metrics, record = run_episode(cfg, scene, task, start)
    assert metrics.success, metrics.terminal
    assert 2 <= metrics.replans <= 3
    # each request carried a rendered schematic frame
    image_url = mock_vlm.requests[0]["messages"][0]["content"][1]["image_url"]["url"]
    assert image_url.startswith("data:image/png;base64,")


def test_remote_planner_failure_terminates_episode(mock_vlm):
    from uavnav.vlm import VlmConfig
    for _ in range(3):
        mock_vlm.responses.append({"content": "no json"})
    scene, task, start = _nav_setup()
    cfg = _cfg(planner_kind="vlm",
               vlm=VlmConfig(endpoint_url=mock_vlm.url, timeout_s=5.0, max_attempts=3))
    metrics, _ = run_episode(cfg, scene, task, start)
    assert not metrics.success
    assert metrics.terminal.startswith("planner_failure:")


# --- crash handling ------------------------------------------------------------------

def test_suite_crash_points_at_partial_log(tmp_path):
    from uavnav.harness import EpisodeCrash

    class ExplodingPlanner:
        def plan(self, instruction, obs):
            raise ZeroDivisionError("boom")

    scene, task, start = _nav_setup()
    with pytest.raises(EpisodeCrash, match="boom") as exc:
        run_episode(_cfg(planner_kind="scripted"), scene, task, start,
                    planner=ExplodingPlanner())
    assert exc.value.record.tick_rows  # partial trajectory preserved


# --- metrics shape -------------------------------------------------------------------

def test_metrics_dict_round_trip_values():
    metrics, _ = run_episode_file(_cfg(seed=0), SCENES / "nav_01.json")
    d = metrics.to_dict()
    assert d["success"] is True
    assert d["terminal"] == "success"
    assert d["completion_time_s"] <= d["sim_time_s"]
    assert d["path_length_m"] >= 10.0  # at least the straight-line distance flown
