"""
Tests for the service-robot scenario: assembly, fault injection and monitor verdicts
"""

import pytest
from pydantic import ValidationError

from btrv.engine import TerminalStatus
from btrv.errors import ScenarioBuildError
from btrv.monitors import MonitorStatus, verdicts
from btrv.program_graph import Channel, ChannelId, ChannelSystem
from btrv.scenario import (BATTERY_READER, COMPONENTS, LOCALIZATION, NAVIGATION, TICK_GENERATOR, build_scenario,
                           check_layering, resolve_tree, robot_state)
from btrv.scope_eval import Verdict, evaluate
from btrv.values import Symbol
from models.scenario_models import OverrideNavigation, ScenarioConfig, SchedulerKind

READING = ChannelId(BATTERY_READER, "BatteryLevel")
STATION_REQUEST = ChannelId("GoToRechargingStation", NAVIGATION)


def scenario_file(data_dir, name):
    return ScenarioConfig.load(data_dir / "scenarios" / name)


def verdict_map(trace):
    return {v.name: v for v in verdicts(trace)}


def test_default_scenario_assembly(scenario_config):
    scenario = build_scenario(scenario_config)
    names = [p.name for p in scenario.system.processes]
    assert names[0] == TICK_GENERATOR
    assert "BT.Root" in names and "BT.GoToDestination" in names
    for component in COMPONENTS:
        assert component in names
    assert "WaitForUser" not in names
    assert [m.name for m in scenario.monitors] == ["phi1", "phi2"]
    assert scenario.rejected == []
    assert scenario.system.tick_channel == ChannelId(TICK_GENERATOR, "BT.Root")
    assert scenario.monitors[1].spec.pattern.theta == 100


def test_initial_robot_state(scenario_config):
    scenario = build_scenario(scenario_config)
    trace = scenario.run(horizon=0)
    assert robot_state(scenario, trace.final) == {"robot_cell": [1, 1], "battery_level": 33, "clock": 0}


def test_nominal_mission_recharges_then_arrives(data_dir):
    scenario = build_scenario(scenario_file(data_dir, "default.json"))
    trace = scenario.run()
    assert trace.status is TerminalStatus.HORIZON
    assert trace.violations == []
    assert all(v.status is MonitorStatus.RUNNING for v in verdicts(trace))
    state = robot_state(scenario, trace.final)
    assert state["robot_cell"] == [1, 12]
    assert state["battery_level"] == 95

    low = next(i for i, e in enumerate(trace.tss)
               if READING in e.state and e.state[READING][1] <= 30)
    assert trace.tss[low].tick == 9
    to_station = [i for i, e in enumerate(trace.tss)
                  if e.state.get(STATION_REQUEST) == (Symbol("start_navigation"), Symbol("RechargingStation"))]
    assert to_station and to_station[0] > low


def test_forced_low_reading_violates_minimum_level(data_dir):
    scenario = build_scenario(scenario_file(data_dir, "experiment1.json"))
    trace = scenario.run()
    result = verdict_map(trace)
    assert result["phi1"].status is MonitorStatus.VIOLATED
    assert result["phi1"].tick == 5
    assert result["phi1"].channel == str(READING)
    assert result["phi2"].status is MonitorStatus.RUNNING
    phi1 = scenario.properties[0].formula
    assert evaluate(phi1, trace.tss) is Verdict.FALSE


def test_forced_reading_stops_early_when_asked(data_dir):
    scenario = build_scenario(scenario_file(data_dir, "experiment1.json"))
    trace = scenario.run(stop_on_violation=True)
    assert trace.status is TerminalStatus.VIOLATION
    assert trace.ticks == 6
    assert len(trace.violations) == 1


def test_threshold_bug_violates_response(data_dir):
    scenario = build_scenario(scenario_file(data_dir, "experiment2.json"))
    trace = scenario.run()
    result = verdict_map(trace)
    assert result["phi1"].status is MonitorStatus.RUNNING
    assert result["phi2"].status is MonitorStatus.VIOLATED
    assert result["phi2"].tick == 9 + 100
    assert robot_state(scenario, trace.final)["robot_cell"] == [1, 12]
    assert evaluate(scenario.properties[1].formula, trace.tss) is Verdict.FALSE


def test_response_holds_without_the_bug(data_dir):
    config = scenario_file(data_dir, "experiment2.json").model_copy(update={"faults": []})
    trace = build_scenario(config).run()
    assert verdict_map(trace)["phi2"].status is MonitorStatus.RUNNING


def test_monitors_do_not_interfere(data_dir):
    scenario = build_scenario(scenario_file(data_dir, "experiment1.json"))
    for seed in range(50):
        plain = scenario.run(monitored=False, horizon=400, seed=seed)
        watched = scenario.run(monitored=True, horizon=400, seed=seed)
        assert watched.choices == plain.choices
        assert watched.tss.entries == plain.tss.entries
        assert plain.violations == []


def test_monitors_agree_with_evaluator_over_many_seeds(data_dir):
    """Both monitors against offline evaluation, with a short response bound so phi2 can fail"""
    scenario = build_scenario(scenario_file(data_dir, "default.json"), bindings={"theta": 2})
    phi1, phi2 = (p.formula for p in scenario.properties)
    for seed in range(200):
        trace = scenario.run(horizon=900, seed=seed)
        result = verdict_map(trace)
        for name, formula in (("phi1", phi1), ("phi2", phi2)):
            violated = result[name].status is MonitorStatus.VIOLATED
            assert violated == (evaluate(formula, trace.tss) is Verdict.FALSE), (name, seed)


@pytest.mark.parametrize("name", ["default.json", "experiment1.json"])
def test_minimum_level_monitor_agrees_with_evaluator(data_dir, name):
    scenario = build_scenario(scenario_file(data_dir, name))
    phi1 = scenario.properties[0].formula
    for seed in range(4):
        trace = scenario.run(horizon=1200, seed=seed)
        violated = verdict_map(trace)["phi1"].status is MonitorStatus.VIOLATED
        assert violated == (evaluate(phi1, trace.tss) is Verdict.FALSE)


def test_round_robin_scheduler(scenario_config):
    config = scenario_config.model_copy(update={"scheduler": SchedulerKind.round_robin})
    trace = build_scenario(config).run(horizon=600)
    assert trace.status is TerminalStatus.HORIZON
    assert trace.ticks > 0


def test_wait_at_station_tree_uses_reconstructed_skills():
    scenario = build_scenario(ScenarioConfig(name="wait", tree="wait_at_station", seed=4))
    names = [p.name for p in scenario.system.processes]
    assert "WaitForUser" in names and "AtRechargingStation" in names
    trace = scenario.run(horizon=3000)
    assert trace.violations == []
    assert trace.final.variables["BT.WaitForUser"]["unmapped"] == 0


def test_navigation_override_freezes_the_robot():
    config = ScenarioConfig(name="frozen", seed=1, faults=[OverrideNavigation(from_tick=0, to_tick=1000)])
    scenario = build_scenario(config)
    trace = scenario.run(horizon=1500)
    assert trace.ticks > 3
    assert robot_state(scenario, trace.final)["robot_cell"] == [1, 1]


def test_theta_from_config_and_bindings(scenario_config):
    config = scenario_config.model_copy(update={"theta": 5})
    assert build_scenario(config).monitors[1].spec.pattern.theta == 5
    assert build_scenario(config, bindings={"theta": 7}).monitors[1].spec.pattern.theta == 7


def test_non_monitorable_property_is_rejected(scenario_config):
    scenario = build_scenario(scenario_config, properties_text=(
        "ok: always not (BatteryReader, BatteryLevel, m[1] = <error>);\n"
        "late: eventually (Localization, AtDestination, m[1] = <ok>);\n"))
    assert [m.name for m in scenario.monitors] == ["ok"]
    assert [p.name for p, _ in scenario.rejected] == ["late"]
    assert scenario.diagnostics.counts() == {"not_monitorable": 1}
    assert scenario.diagnostics.entries[0].location == "late"


def test_layering_rejects_crossing_channels(scenario_config):
    cs = build_scenario(scenario_config).system
    crossing = ChannelSystem(cs.name, cs.processes,
                             list(cs.channels.values()) + [Channel(ChannelId(TICK_GENERATOR, LOCALIZATION), 1)],
                             cs.shared.values(), cs.tick_channel)
    compiled = build_scenario(scenario_config).compiled
    check_layering(cs, compiled)
    with pytest.raises(ScenarioBuildError):
        check_layering(crossing, compiled)


@pytest.mark.parametrize("tree_text", [
    "tree T\n? Root {\n    condition Foo\n}\n",
    "tree T\n? Root {\n    condition GoToDestination\n}\n",
    "tree T\n? Root {\n    action GoToDestination halt [<pause>]\n}\n",
    "tree T\n? Root {\n    condition WaitForUser\n}\n",
    "tree T tick Clock\n? Root {\n    action GoToDestination\n}\n",
])
def test_invalid_bindings(tmp_path, tree_text):
    path = tmp_path / "tree.bt"
    path.write_text(tree_text, encoding="utf-8")
    with pytest.raises(ScenarioBuildError):
        build_scenario(ScenarioConfig(tree=str(path)))


def test_unknown_tree():
    with pytest.raises(ScenarioBuildError):
        resolve_tree("no_such_tree")


def test_fault_targets_are_checked(tmp_path):
    with pytest.raises(ScenarioBuildError):
        build_scenario(ScenarioConfig(faults=[{"kind": "skill_threshold_bug", "skill": "AtDestination",
                                               "wrong_threshold": 10}]))
    path = tmp_path / "nav_only.bt"
    path.write_text("tree T\n? Root {\n    action GoToDestination\n}\n", encoding="utf-8")
    with pytest.raises(ScenarioBuildError):
        build_scenario(ScenarioConfig(tree=str(path), faults=[{"kind": "force_battery_level", "value": 5,
                                                                "at_tick": 1}]))


def test_unreachable_station():
    with pytest.raises(ScenarioBuildError):
        build_scenario(ScenarioConfig(map=["#######", "#@.D#R#", "#######"]))


def test_config_validation(tmp_path):
    with pytest.raises(ValidationError):
        OverrideNavigation(from_tick=5, to_tick=5)
    with pytest.raises(ValidationError):
        ScenarioConfig(map=["###", "##"])
    broken = tmp_path / "broken.json"
    broken.write_text('{"seed": -1}', encoding="utf-8")
    with pytest.raises(ScenarioBuildError):
        ScenarioConfig.load(broken)
    binary = tmp_path / "binary.json"
    binary.write_bytes(b"\xff\xfe{\x00}")
    with pytest.raises(ScenarioBuildError):
        ScenarioConfig.load(binary)
