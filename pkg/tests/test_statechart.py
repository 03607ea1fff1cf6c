import pytest
from hypothesis import given
from hypothesis import strategies as st

from btverify import data_path
from btverify.statechart import (ChartInstance, ChartParseError, DeliveryError, Event,
                                 parse_scxml, load_scxml)

TWO_STATE = """<scxml initial="idle"><state id="idle"><transition event="request" target="get"/>
</state><state id="get"/></scxml>"""


def safety_spec():
    return load_scxml(data_path("monitors", "battery_safety.scxml"))


class TestParse:
    def test_two_state_chart(self):
        chart = parse_scxml(TWO_STATE)
        assert chart.states == ["idle", "get"]
        assert len(chart.transitions) == 1
        assert chart.initial == "idle"

    def test_safety_fixture(self):
        chart = safety_spec()
        assert set(chart.states) == {"idle", "get", "failure"}
        edges = {(t.source, t.event, t.target) for t in chart.transitions}
        assert ("idle", "request", "get") in edges
        assert ("get", "reply", "idle") in edges
        assert ("get", "reply", "failure") in edges
        assert chart.variables == {"limit": 20}

    def test_namespace_is_accepted(self):
        doc = TWO_STATE.replace("<scxml", '<scxml xmlns="http://www.w3.org/2005/07/scxml"')
        assert parse_scxml(doc).states == ["idle", "get"]

    @pytest.mark.parametrize("doc", [
        '<scxml><state id="a"><transition event="e" target="nowhere"/></state></scxml>',
        '<scxml><state id="a"><onentry/></state></scxml>',
        '<scxml><parallel id="p"/></scxml>',
        '<scxml><state id="a"><transition event="e" cond="x &lt;" target="a"/></state></scxml>',
        '<scxml><state id="a">',
        '<scxml/>',
        '<scxml><state id="a"/><state id="a"/></scxml>',
        '<scxml initial="b"><state id="a"/></scxml>',
    ])
    def test_errors(self, doc):
        with pytest.raises(ChartParseError):
            parse_scxml(doc)

    def test_assign_and_datamodel(self):
        chart = parse_scxml("""<scxml><datamodel><data id="n" expr="0"/></datamodel>
          <state id="a"><transition event="inc" target="a"><assign location="n" expr="n + 1"/>
          </transition></state></scxml>""")
        inst = ChartInstance(chart)
        for _ in range(3):
            inst.deliver(Event("inc"))
        assert inst.variables["n"] == 3

    def test_with_variables(self):
        chart = safety_spec().with_variables(limit=25)
        assert chart.variables["limit"] == 25
        with pytest.raises(KeyError):
            safety_spec().with_variables(nope=1)


class TestDeliver:
    def test_request_moves_to_get(self):
        inst = ChartInstance(safety_spec())
        report = inst.deliver(Event("request", {"t": 0, "seq": 1}))
        assert report.fired and (report.old_state, report.new_state) == ("idle", "get")

    def test_reply_50_back_to_idle(self):
        inst = ChartInstance(safety_spec())
        inst.deliver(Event("request"))
        assert inst.deliver(Event("reply", {"level": 50})).new_state == "idle"

    def test_reply_10_to_failure(self):
        inst = ChartInstance(safety_spec())
        inst.deliver(Event("request"))
        assert inst.deliver(Event("reply", {"level": 10})).new_state == "failure"

    def test_unmatched_event_is_not_an_error(self):
        inst = ChartInstance(safety_spec())
        report = inst.deliver(Event("reply", {"level": 10}))
        assert not report.fired and report.new_state == "idle"

    def test_missing_payload_field_is_delivery_error(self):
        inst = ChartInstance(safety_spec())
        inst.deliver(Event("request"))
        with pytest.raises(DeliveryError):
            inst.deliver(Event("reply", {"charge": 10}))

    def test_first_match_wins(self):
        chart = parse_scxml("""<scxml><state id="a">
          <transition event="e" target="b"/><transition event="e" target="c"/></state>
          <state id="b"/><state id="c"/></scxml>""")
        assert ChartInstance(chart).deliver(Event("e")).new_state == "b"

    def test_event_name_required(self):
        with pytest.raises(ValueError):
            Event("")

    def test_history(self):
        inst = ChartInstance(safety_spec(), record_history=True)
        inst.deliver(Event("noise"))
        inst.deliver(Event("request"))
        assert [r.fired for r in inst.history] == [False, True]


events = st.lists(st.tuples(st.sampled_from(["request", "reply", "noise"]),
                            st.integers(0, 100)), max_size=40)


@given(events)
def test_delivery_deterministic_and_states_valid(seq):
    a, b = ChartInstance(safety_spec()), ChartInstance(safety_spec())
    states = set(safety_spec().states)
    for name, level in seq:
        ra = a.deliver(Event(name, {"level": level}))
        rb = b.deliver(Event(name, {"level": level}))
        assert (ra.fired, ra.old_state, ra.new_state) == (rb.fired, rb.old_state, rb.new_state)
        assert a.state in states


@given(events)
def test_every_event_yields_a_report(seq):
    inst = ChartInstance(safety_spec(), record_history=True)
    for name, level in seq:
        inst.deliver(Event(name, {"level": level}))
    assert len(inst.history) == len(seq)
