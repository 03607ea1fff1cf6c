import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from btverify import data_path  # noqa: E402
from btverify.scenario import run_scenario  # noqa: E402

SCENARIOS = ("clean", "experiment1", "experiment2")


@pytest.fixture(scope="session")
def data():
    return data_path


@pytest.fixture(scope="session")
def scenario_runs(tmp_path_factory):
    """One deterministic run per shipped scenario, with logs on disk."""
    runs = {}
    for name in SCENARIOS:
        log_dir = tmp_path_factory.mktemp(name)
        runs[name] = run_scenario(data_path("scenarios", f"{name}.toml"), log_dir=log_dir)
    return runs


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance")
        for line in lines:
            terminalreporter.write_line(line)
