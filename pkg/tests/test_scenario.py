import dataclasses

import pytest

from btverify import data_path
from btverify.behavior_tree import TickStatus
from btverify.scenario import (Injection, ScenarioError, describe_scenario, load_config,
                               run_scenario)
from scenario_checks import (BATTERY_CONN, CLEAN_ORDER, action_selection_errors, comparable,
                             is_goto, is_level_reply, ordered_events)


def cfg(name):
    return load_config(data_path("scenarios", f"{name}.toml"))


class TestConfig:
    def test_load(self):
        c = cfg("experiment1")
        assert c.battery == 100.0
        assert [(i.action, i.tick, i.level) for i in c.injections] == [("set_battery", 200, 10.0)]
        assert c.map.exists() and c.bt.exists()

    def test_missing_map(self, tmp_path):
        text = data_path("scenarios", "clean.toml").read_text()
        bad = tmp_path / "bad.toml"
        bad.write_text(text.replace('"../maps/house.txt"', '"missing/house.txt"'))
        with pytest.raises(ScenarioError, match="missing/house.txt"):
            load_config(bad)

    @pytest.mark.parametrize("kwargs", [
        dict(action="explode", tick=1),
        dict(action="set_battery", tick=1),
        dict(action="set_battery", level=3),
        dict(action="set_battery", level=3, tick=1, when="level < 3"),
        dict(action="plug_cable", tick=-1),
    ])
    def test_bad_injection(self, kwargs):
        with pytest.raises(ScenarioError):
            Injection(**kwargs)

    def test_when_trigger(self):
        inj = Injection("set_battery", when="level < 50 and not charging", level=10)
        assert inj.due(0, {"level": 40, "charging": False})
        assert not inj.due(0, {"level": 60, "charging": False})


class TestWiring:
    def test_unknown_skill_bug_target(self):
        c = cfg("clean")
        c.injections = [Injection("enable_skill_bug", tick=0, threshold=1, skill="Nope")]
        with pytest.raises(ScenarioError, match="Nope"):
            run_scenario(c)

    def test_leaf_without_skill(self, tmp_path):
        bt = tmp_path / "bt.xml"
        bt.write_text(data_path("bt", "scenario.xml").read_text().replace(
            'ID="WaitForUser"', 'ID="WaitForOperator"'))
        c = dataclasses.replace(cfg("clean"), bt=bt)
        with pytest.raises(ScenarioError, match="WaitForOperator"):
            run_scenario(c)

    def test_kind_mismatch(self, tmp_path):
        bt = tmp_path / "bt.xml"
        bt.write_text(data_path("bt", "scenario.xml").read_text().replace(
            '<Action ID="WaitForUser"', '<Condition ID="WaitForUser"'))
        c = dataclasses.replace(cfg("clean"), bt=bt)
        with pytest.raises(ScenarioError, match="WaitForUser"):
            run_scenario(c)


class TestRuns:
    def test_experiment1(self, scenario_runs):
        r = scenario_runs["experiment1"]
        assert len(r.verdicts) == 1
        v = r.verdicts[0]
        assert v.monitor == "battery_never_below_20"
        assert v.witness.payload["level"] == 10.0
        assert v.t == 200

    def test_experiment2(self, scenario_runs):
        r = scenario_runs["experiment2"]
        assert [v.monitor for v in r.verdicts] == ["recharge_on_low_battery"]
        assert not any(is_goto(m, "charging_station") for m in r.messages)

    def test_clean(self, scenario_runs):
        r = scenario_runs["clean"]
        assert r.verdicts == []
        assert r.root_status is TickStatus.SUCCESS
        assert len(ordered_events(r.messages)) == len(CLEAN_ORDER)
        assert not any(is_level_reply(m, lambda v: v <= 20) for m in r.messages)

    def test_one_active_action(self, scenario_runs):
        assert action_selection_errors(scenario_runs["clean"]) == []

    def test_log_files(self, scenario_runs):
        r = scenario_runs["experiment1"]
        log_dir = r.trace_path.parent
        assert (log_dir / "verdicts.jsonl").read_text().count("\n") == 1
        assert "violations: 1" in (log_dir / "report.txt").read_text()

    def test_resume_after_recharge(self, scenario_runs):
        # the destination goto after charging comes from re-evaluating the tree
        msgs = scenario_runs["clean"].messages
        gotos = [m.payload["name"] for m in msgs
                 if m.procedure == "gotoTargetByLocationName" and m.direction.value == "Request"]
        assert gotos == ["destination", "charging_station", "destination"]


class TestDeterminism:
    def test_reruns_identical(self, scenario_runs):
        again = run_scenario(data_path("scenarios", "experiment2.toml"))
        ref = scenario_runs["experiment2"]
        assert comparable(again.messages) == comparable(ref.messages)
        assert again.world_series == ref.world_series

    def test_threaded_same_verdicts(self, scenario_runs):
        for name in ("experiment1", "clean"):
            threaded = run_scenario(data_path("scenarios", f"{name}.toml"), deterministic=False)
            ref = scenario_runs[name]
            assert {v.to_json() for v in threaded.verdicts} == {v.to_json() for v in ref.verdicts}
            assert comparable(threaded.messages) == comparable(ref.messages)

    def test_extra_injection(self):
        r = run_scenario(data_path("scenarios", "clean.toml"),
                         extra_injections=[Injection("set_battery", tick=5, level=15.0)])
        assert [v.monitor for v in r.verdicts] == ["battery_never_below_20"]
        assert r.verdicts[0].t == 5


def test_describe():
    for name in ("clean", "experiment1", "experiment2"):
        text = describe_scenario(data_path("scenarios", f"{name}.toml"))
        assert "service endpoints (3): battery, localization, navigation" in text
        assert "5 types, 6 instances" in text
        n = int(text.split("monitors (")[1].split(")")[0])
        assert 1 <= n <= 2
        assert BATTERY_CONN in text
