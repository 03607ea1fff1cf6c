import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from btverify import data_path
from btverify.bus import Bus, ConnectionId, Direction, Message, TraceWriter
from btverify.monitor import (MonitorInstance, MonitorSpecError, check_messages, check_trace,
                              load_monitor, write_verdicts)
from oracles import response_violation

BATTERY_CONN = ConnectionId("skill/BatteryLevelAbove30", "battery")
NAV_CONN = ConnectionId("skill/GotoDestination", "navigation")
STATION_NAV = ConnectionId("skill/GotoChargingStation", "navigation")


def safety_spec():
    return load_monitor(data_path("monitors", "battery_safety.json"))


def response_spec(**params):
    return load_monitor(data_path("monitors", "recharge_response.json"), params or None)


class Seq:
    """Builds messages with per-connection seq numbers."""

    def __init__(self):
        self.counters = {}

    def pair(self, conn, procedure, t, request=None, reply=None):
        n = self.counters[conn] = self.counters.get(conn, 0) + 1
        return [Message(conn, Direction.REQUEST, procedure, request or {}, n, t),
                Message(conn, Direction.REPLY, procedure, reply or {}, n, t)]


class TestLoad:
    def test_safety(self):
        spec = safety_spec()
        assert set(spec.chart.states) == {"idle", "get", "failure"}
        assert spec.failure_states == {"failure"}
        assert [str(p) for p in spec.patterns] == ["skill/BatteryLevelAbove30->battery"]

    def test_response(self):
        spec = response_spec()
        assert spec.name == "recharge_on_low_battery"
        assert spec.chart.variables["station"] == "charging_station"
        assert spec.chart.variables["low"] == 30
        assert {str(p) for p in spec.patterns} == {"skill/BatteryLevelAbove30->battery",
                                                   "*->navigation"}

    def test_parameters_override(self):
        assert response_spec(bound=10).chart.variables["bound"] == 10
        with pytest.raises(MonitorSpecError):
            response_spec(unknown=1)

    def write(self, tmp_path, **manifest):
        (tmp_path / "c.scxml").write_text(data_path("monitors", "battery_safety.scxml").read_text())
        base = {"name": "m", "chart": "c.scxml", "failure_states": ["failure"],
                "subscriptions": [{"connection": "a->b", "event": "request"}]}
        base.update(manifest)
        path = tmp_path / "m.json"
        path.write_text(json.dumps(base))
        return path

    def test_empty_subscriptions(self, tmp_path):
        with pytest.raises(MonitorSpecError, match="no subscriptions"):
            load_monitor(self.write(tmp_path, subscriptions=[]))

    def test_failure_state_not_in_chart(self, tmp_path):
        with pytest.raises(MonitorSpecError):
            load_monitor(self.write(tmp_path, failure_states=["boom"]))

    def test_bad_direction(self, tmp_path):
        with pytest.raises(MonitorSpecError):
            load_monitor(self.write(tmp_path, subscriptions=[
                {"connection": "a->b", "event": "x", "direction": "Sideways"}]))

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_monitor(tmp_path / "nope.json")


class TestFeed:
    def test_level_50_no_verdict(self):
        m = MonitorInstance(safety_spec())
        out = [m.feed(msg) for msg in Seq().pair(BATTERY_CONN, "level", 0, reply={"level": 50})]
        assert out == [None, None]
        assert m.states == ["idle", "get", "idle"]

    def test_level_10_violation(self):
        m = MonitorInstance(safety_spec())
        req, rep = Seq().pair(BATTERY_CONN, "level", 4, reply={"level": 10})
        assert m.feed(req) is None
        v = m.feed(rep)
        assert v.violated and v.state == "failure" and v.witness == rep
        assert (v.seq, v.t) == (1, 4)

    def test_latch(self):
        m = MonitorInstance(safety_spec())
        seq = Seq()
        verdicts = []
        for lvl in (10, 5, 50):
            verdicts += [m.feed(x) for x in seq.pair(BATTERY_CONN, "level", 0, reply={"level": lvl})]
        assert sum(v is not None for v in verdicts) == 1
        assert m.violated

    def test_unrelated_traffic_ignored(self):
        m = MonitorInstance(safety_spec())
        for msg in Seq().pair(ConnectionId("x", "battery"), "level", 0, reply={"level": 1}):
            assert m.feed(msg) is None
        assert m.messages_seen == 0

    def test_response_low_battery_then_polls(self):
        seq = Seq()
        msgs = seq.pair(NAV_CONN, "gotoTargetByLocationName", 0, {"name": "destination"},
                        {"status": "navigating", "goal": "destination"})
        msgs += seq.pair(BATTERY_CONN, "level", 1, reply={"level": 25})
        for t in range(2, 60):
            msgs += seq.pair(NAV_CONN, "getNavigationStatus", t,
                             reply={"status": "navigating", "goal": "destination", "x": 1, "y": 1})
        verdicts = check_messages(msgs, response_spec())
        assert len(verdicts) == 1
        assert verdicts[0].t == 52
        assert verdicts[0].witness.procedure == "getNavigationStatus"

    def test_response_station_goto_discharges(self):
        seq = Seq()
        msgs = seq.pair(NAV_CONN, "gotoTargetByLocationName", 0, {"name": "destination"})
        msgs += seq.pair(BATTERY_CONN, "level", 1, reply={"level": 25})
        msgs += seq.pair(NAV_CONN, "stopNavigation", 2)
        msgs += seq.pair(STATION_NAV, "gotoTargetByLocationName", 3, {"name": "charging_station"})
        for t in range(4, 100):
            msgs += seq.pair(BATTERY_CONN, "level", t, reply={"level": 24})
        assert check_messages(msgs, response_spec()) == []


levels = st.lists(st.floats(0, 100, allow_nan=False), max_size=40)


@given(levels)
def test_safety_soundness(values):
    seq = Seq()
    msgs = [m for v in values for m in seq.pair(BATTERY_CONN, "level", 0, reply={"level": v})]
    verdicts = check_messages(msgs, safety_spec())
    expected = next((i for i, v in enumerate(values) if v <= 20), None)
    if expected is None:
        assert verdicts == []
    else:
        assert len(verdicts) == 1
        assert verdicts[0].witness.payload["level"] == values[expected]
        assert verdicts[0].seq == expected + 1


abstract = st.lists(st.one_of(
    st.tuples(st.just("goto"), st.sampled_from(["destination", "charging_station", "kitchen"])),
    st.tuples(st.just("stop")),
    st.tuples(st.just("status"), st.sampled_from(["navigating", "reached", "path_not_found",
                                                  "aborted", "idle"])),
    st.tuples(st.just("level"), st.sampled_from([15.0, 25.0, 30.0, 31.0, 80.0])),
), max_size=60)


@settings(max_examples=300, deadline=None)
@given(abstract, st.lists(st.integers(0, 8), min_size=60, max_size=60), st.integers(1, 20))
def test_response_matches_oracle(items, gaps, bound):
    seq = Seq()
    events, msgs = [], []
    t = 0
    for item, gap in zip(items, gaps):
        t += gap
        kind = item[0]
        if kind == "goto":
            conn = STATION_NAV if item[1] == "charging_station" else NAV_CONN
            msgs += seq.pair(conn, "gotoTargetByLocationName", t, {"name": item[1]})
            events.append(("goto", t, item[1]))
        elif kind == "stop":
            msgs += seq.pair(NAV_CONN, "stopNavigation", t)
            events.append(("stop", t))
        elif kind == "status":
            msgs += seq.pair(NAV_CONN, "getNavigationStatus", t, reply={"status": item[1]})
            events.append(("status", t, item[1]))
        else:
            msgs += seq.pair(BATTERY_CONN, "level", t, reply={"level": item[1]})
            events.append(("level", t, item[1]))
    verdicts = check_messages(msgs, response_spec(bound=bound))
    expected = response_violation(events, bound=bound)
    assert [v.t for v in verdicts] == ([] if expected is None else [expected])


class TestOffline:
    def test_live_equals_offline(self, tmp_path):
        bus = Bus()
        level = {"v": 60.0}
        bus.register_endpoint("battery", lambda r: {"level": level["v"]})
        trace = tmp_path / "trace.jsonl"
        live = MonitorInstance(safety_spec())
        with open(trace, "w") as fh:
            bus.add_tap(TraceWriter(fh))
            live.attach(bus)
            for v in (60, 40, 22, 19, 30):
                level["v"] = float(v)
                bus.query("skill/BatteryLevelAbove30", "battery", "level")
        offline = check_trace(trace, safety_spec())
        assert [live.verdict] == offline
        assert offline[0].witness.payload == {"level": 19.0}

    def test_write_verdicts(self, tmp_path):
        seq = Seq()
        verdicts = check_messages(seq.pair(BATTERY_CONN, "level", 0, reply={"level": 1}), safety_spec())
        out = tmp_path / "v.jsonl"
        write_verdicts(verdicts, out)
        line = json.loads(out.read_text())
        assert line["monitor"] == "battery_never_below_20"
        assert line["at"] == {"seq": 1, "t": 0}
        assert line["witness"]["payload"] == {"level": 1}

    def test_experiment1_trace(self, scenario_runs):
        report = scenario_runs["experiment1"]
        verdicts = check_trace(report.trace_path, safety_spec())
        assert len(verdicts) == 1
        # grep the trace for the first battery reply at or below 20
        with open(report.trace_path) as fh:
            first = next(json.loads(l) for l in fh
                         if '"Reply"' in l and '"level":' in l
                         and json.loads(l)["connection"] == "skill/BatteryLevelAbove30->battery"
                         and json.loads(l)["payload"]["level"] <= 20)
        assert verdicts[0].seq == first["seq"]
        assert verdicts[0].witness.payload["level"] == 10.0

    def test_clean_trace(self, scenario_runs):
        assert check_trace(scenario_runs["clean"].trace_path, [safety_spec(), response_spec()]) == []

    def test_experiment2_trace(self, scenario_runs):
        verdicts = check_trace(scenario_runs["experiment2"].trace_path, response_spec())
        assert len(verdicts) == 1
        assert verdicts[0].monitor == "recharge_on_low_battery"
