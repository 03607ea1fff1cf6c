"""Trace queries shared by the scenario and acceptance tests."""
from __future__ import annotations

from btverify.bus import Direction

BATTERY_CONN = "skill/BatteryLevelAbove30->battery"


def is_level_reply(m, pred=lambda v: True):
    return (str(m.connection) == BATTERY_CONN and m.direction is Direction.REPLY
            and not m.fault and pred(m.payload["level"]))


def is_goto(m, name):
    return (m.connection.server == "navigation" and m.direction is Direction.REQUEST
            and m.procedure == "gotoTargetByLocationName" and m.payload.get("name") == name)


def is_halt(m, leaf):
    return (str(m.connection) == f"bt->skill/{leaf}" and m.direction is Direction.REQUEST
            and m.procedure == "halt")


def is_reached(m, goal):
    return (m.connection.server == "navigation" and m.direction is Direction.REPLY
            and m.procedure == "getNavigationStatus" and m.payload.get("status") == "reached"
            and m.payload.get("goal") == goal)


def is_skill_success(m, leaf):
    return (str(m.connection) == f"bt->skill/{leaf}" and m.direction is Direction.REPLY
            and m.procedure == "tick" and m.payload.get("status") == "Success")


def is_plug(m):
    return m.connection.server == "battery" and m.procedure == "plug_cable" \
        and m.direction is Direction.REQUEST


CLEAN_ORDER = [
    ("goto destination", lambda m: is_goto(m, "destination")),
    ("battery <= 30 reply", lambda m: is_level_reply(m, lambda v: v <= 30)),
    ("halt GotoDestination", lambda m: is_halt(m, "GotoDestination")),
    ("goto charging_station", lambda m: is_goto(m, "charging_station")),
    # the Fallback checks AtChargingStation first, so arrival is that condition
    # succeeding (the robot is within tolerance before navigation reports reached)
    ("arrival at charging_station", lambda m: is_skill_success(m, "AtChargingStation")),
    ("plug_cable", is_plug),
    ("level = 100 reply", lambda m: is_level_reply(m, lambda v: v == 100)),
    ("goto destination", lambda m: is_goto(m, "destination")),
    ("destination reached", lambda m: is_reached(m, "destination")),
]


def ordered_events(messages, order=CLEAN_ORDER):
    """Index of each event in ``order``, each searched after the previous one.

    Returns the list of indices found so far; it is shorter than ``order`` when
    an event never happens.
    """
    found = []
    pos = 0
    for _, pred in order:
        idx = next((k for k in range(pos, len(messages)) if pred(messages[k])), None)
        if idx is None:
            break
        found.append(idx)
        pos = idx + 1
    return found


ACTIONS = ("GotoDestination", "GotoChargingStation", "WaitForUser")


def action_selection_errors(report):
    """Cycles where the ticked Action set breaks the recharge branching."""
    trace = report.bt_trace
    by_cycle = {}
    for e in trace.entries:
        if e.event == "status_returned" and e.leaf_id is not None:
            by_cycle.setdefault(e.cycle, {})[e.leaf_id] = e.status.value
    errors = []
    for cycle, statuses in sorted(by_cycle.items()):
        active = [a for a in ACTIONS if a in statuses]
        above = statuses.get("BatteryLevelAbove30") == "Success"
        not_charging = statuses.get("BatteryNotRecharging") == "Success"
        if above and not_charging:
            expected = "GotoDestination"
        elif statuses.get("AtChargingStation") == "Success":
            expected = "WaitForUser"
        else:
            expected = "GotoChargingStation"
        if active != [expected]:
            errors.append((cycle, active, expected))
    return errors


def comparable(messages):
    """Messages as sortable JSON lines."""
    return [m.to_json() for m in messages]
