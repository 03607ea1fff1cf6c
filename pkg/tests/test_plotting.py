import re

from btverify import data_path
from btverify.plotting import battery_series, robot_path, trace_svg
from btverify.sim import load_map


def test_empty_trace_has_axes():
    svg = trace_svg([])
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert 'class="threshold"' in svg
    assert "polyline" not in svg and 'class="violation"' not in svg


def test_experiment1_marks_crossing(scenario_runs):
    msgs = scenario_runs["experiment1"].messages
    series = battery_series(msgs)
    first = next((t, v) for t, v in series if v <= 20)
    assert first == (200, 10.0)
    svg = trace_svg(msgs)
    assert svg.count('class="violation"') == 1
    assert "level 10 at tick 200" in svg


def test_clean_path_goes_via_station(scenario_runs):
    grid = load_map(data_path("maps", "house.txt"))
    path = robot_path(scenario_runs["clean"].messages)
    locs = grid.named_locations

    def near(p, name, tol=0.31):
        return abs(p[0] - locs[name].x) <= tol and abs(p[1] - locs[name].y) <= tol

    assert near(path[0], "start", tol=1.0)
    assert near(path[-1], "destination")
    station_idx = next(k for k, p in enumerate(path) if near(p, "charging_station"))
    assert 0 < station_idx < len(path) - 1
    svg = trace_svg(scenario_runs["clean"].messages, grid)
    assert len(re.findall(r'class="path"', svg)) == 1
    assert 'class="violation"' not in svg
