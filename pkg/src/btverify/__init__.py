"""Behavior trees over state-chart skills, with runtime monitors on the message bus."""
from importlib import resources
from pathlib import Path

from .behavior_tree import (BehaviorTreeEngine, BTNode, BTParseError, NodeKind, TickStatus,
                            TickTrace, WiringError, parse_bt_xml, run_engine, tick_once)
from .bus import Bus, ConnectionId, Direction, Message
from .monitor import MonitorInstance, Verdict, check_trace, load_monitor
from .statechart import ChartInstance, Event, StateChart, parse_scxml
from .scenario import ScenarioConfig, describe_scenario, load_config, run_scenario

__version__ = "0.1.0"


def data_path(*parts: str) -> Path:
    """Path of a file shipped in the package data directory."""
    return Path(str(resources.files(__package__).joinpath("data", *parts)))


__all__ = [
    "BehaviorTreeEngine", "BTNode", "BTParseError", "NodeKind", "TickStatus", "TickTrace",
    "WiringError", "parse_bt_xml", "run_engine", "tick_once",
    "Bus", "ConnectionId", "Direction", "Message",
    "MonitorInstance", "Verdict", "check_trace", "load_monitor",
    "ChartInstance", "Event", "StateChart", "parse_scxml",
    "ScenarioConfig", "describe_scenario", "load_config", "run_scenario",
    "data_path",
]
