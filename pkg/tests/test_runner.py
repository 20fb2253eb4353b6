import json

import pytest
import yaml

from fetchbot.runner import ScenarioRunner
from fetchbot.scenario import ConfigError, load_scenario, scenario_from_dict
from fetchbot.trace import TraceWriter

MINI_WORLD = """
name: mini
seed: 3
max_ticks: 400
world:
  walls:
    - [0.0, 0.0, 6.0, 0.0]
    - [6.0, 0.0, 6.0, 3.0]
    - [6.0, 3.0, 0.0, 3.0]
    - [0.0, 3.0, 0.0, 0.0]
  obstacles:
    - {center: [0.4, 1.5], radius: 0.2, label: user}
  objects:
    - {id: water, marker: 1, position: [4.8, 1.5, 0.8], mass: 0.5}
    - {id: dumbbell, marker: 2, position: [4.7, 1.3, 0.8], mass: 5.0}
robot:
  start: [1.2, 1.5, 0.0]
task:
  warehouse_goal: [4.1, 1.5, 0.0]
  user_goal: [1.3, 1.5, 3.14159265]
"""


@pytest.fixture(scope="module")
def mini_scenario():
    return scenario_from_dict(yaml.safe_load(MINI_WORLD))


class TestScenarioLoading:
    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_scenario(tmp_path / "nope.yaml")

    def test_invalid_yaml(self, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text("world: [unclosed")
        with pytest.raises(ConfigError, match="invalid YAML"):
            load_scenario(p)

    def test_missing_required_key(self):
        with pytest.raises(ConfigError, match="missing required key"):
            scenario_from_dict({"world": {"walls": []}, "robot": {"start": [0, 0, 0]}})

    def test_bad_wall_row(self):
        raw = yaml.safe_load(MINI_WORLD)
        raw["world"]["walls"][0] = [1, 2, 3]
        with pytest.raises(ConfigError, match="walls"):
            scenario_from_dict(raw)

    def test_script_validation(self):
        raw = yaml.safe_load(MINI_WORLD)
        raw["script"] = [{"tick": 5, "command": "estop"}]
        with pytest.raises(ConfigError, match="command"):
            scenario_from_dict(raw)

    def test_builtin_scenarios_load(self, corridor_scenario, replan_scenario):
        assert corridor_scenario.name == "corridor_fetch"
        assert replan_scenario.name == "corridor_replan"
        assert any(o["label"] == "dropped" for o in replan_scenario.obstacles)


def run_with_script(scenario, script, max_ticks=None, seed=None):
    scenario = scenario_from_dict(yaml.safe_load(MINI_WORLD)) if scenario is None else scenario
    scenario.script = [(t, dict(c)) for t, c in script]
    runner = ScenarioRunner(scenario, seed=seed, trace=TraceWriter())
    result = runner.run(max_ticks=max_ticks)
    return runner, result


class TestEStopBehavior:
    def test_estop_latches_velocity_to_zero(self):
        runner, result = run_with_script(
            None,
            [(40, {"type": "say", "text": "fetch the water"}), (100, {"type": "estop"})],
            max_ticks=220,
        )
        records = [json.loads(line) for line in runner.trace.records]
        assert any(r["state"] == "EStopped" for r in records)
        for rec in records:
            if rec["tick"] > 100:
                assert rec["twist"]["v"] == 0.0
                assert rec["twist"]["omega"] == 0.0
                assert rec["state"] == "EStopped"

    def test_reset_releases_latch(self):
        runner, result = run_with_script(
            None,
            [(50, {"type": "estop"}), (60, {"type": "reset"})],
            max_ticks=120,
        )
        records = [json.loads(line) for line in runner.trace.records]
        assert records[55]["state"] == "EStopped"
        assert records[70]["state"] in ("Idle", "Identifying", "Listening")


class TestTaskOutcomes:
    def test_payload_gate_aborts_heavy_fetch(self, mini_scenario):
        runner, result = run_with_script(
            mini_scenario,
            [(40, {"type": "fetch", "object": "dumbbell"})],
            max_ticks=1500,
        )
        records = [json.loads(line) for line in runner.trace.records]
        assert any("GraspFailed" in e for r in records for e in r["events"])
        assert any(r["state"] == "Recovery" for r in records)
        assert not result.completed

    def test_unreachable_warehouse_recovers(self):
        raw = yaml.safe_load(MINI_WORLD)
        raw["world"]["walls"].append([3.0, 0.0, 3.0, 3.0])  # seal the corridor
        scenario = scenario_from_dict(raw)
        runner, result = run_with_script(
            scenario,
            [(40, {"type": "say", "text": "fetch the water"})],
            max_ticks=400,
        )
        records = [json.loads(line) for line in runner.trace.records]
        assert any("PlanFailed" in e for r in records for e in r["events"])
        assert any(r["state"] == "Recovery" for r in records)
        assert not result.completed
        assert result.final_state == "Idle"

    def test_noparse_retries_then_gives_up(self, mini_scenario):
        script = [(40 + 10 * i, {"type": "say", "text": "gibberish words"}) for i in range(3)]
        runner, result = run_with_script(mini_scenario, script, max_ticks=140)
        records = [json.loads(line) for line in runner.trace.records]
        noparse = sum(1 for r in records for e in r["events"] if e == "NoParse")
        assert noparse == 3
        assert records[-1]["state"] in ("Idle", "Identifying", "Listening")

    def test_say_ignored_outside_listening(self, mini_scenario):
        runner, _ = run_with_script(
            mini_scenario, [(1, {"type": "say", "text": "fetch the water"})], max_ticks=30)
        records = [json.loads(line) for line in runner.trace.records]
        assert any("say_ignored:not_listening" in r["events"] for r in records)

    def test_add_obstacle_command(self, mini_scenario):
        runner, _ = run_with_script(
            mini_scenario, [(10, {"type": "add_obstacle", "x": 3.0, "y": 1.5, "r": 0.2})],
            max_ticks=30)
        assert any(o.label == "injected" for o in runner.world.obstacles)

    def test_set_pose_moves_robot_and_filter(self, mini_scenario):
        runner, _ = run_with_script(
            mini_scenario, [(5, {"type": "set_pose", "x": 2.5, "y": 1.0, "theta": 0.5})],
            max_ticks=12)
        assert runner.world.base_pose.x == pytest.approx(2.5, abs=0.1)
        assert runner.estimate.distance_to(runner.world.base_pose) < 0.2


class TestTraceFormat:
    def test_record_schema(self, mini_scenario):
        runner, _ = run_with_script(mini_scenario, [], max_ticks=10)
        for line in runner.trace.records:
            rec = json.loads(line)
            assert set(rec) <= {"tick", "time_s", "state", "pose", "twist", "events", "cost_breakdown"}
            assert set(rec["pose"]) == {"x", "y", "theta"}
            assert set(rec["twist"]) == {"v", "omega"}
            assert isinstance(rec["events"], list)

    def test_command_log_records_applied_tick(self, mini_scenario):
        runner, _ = run_with_script(mini_scenario, [(7, {"type": "estop"})], max_ticks=20)
        assert (7, {"type": "estop"}) in [(t, c) for t, c in runner.command_log]
