"""Deterministic lockstep world: robot, battery and navigation state."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

from .grid import GridMap, Location
from .planning import plan_path

IDLE = "idle"
NAVIGATING = "navigating"
REACHED = "reached"
ABORTED = "aborted"
PATH_NOT_FOUND = "path_not_found"


@dataclass
class RobotState:
    x: float
    y: float
    theta: float = 0.0
    speed: float = 0.2  # cells per step


@dataclass
class BatteryState:
    level: float = 100.0
    charging: bool = False
    drain_rate: float = 0.2  # percent per step
    charge_rate: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.level <= 100.0:
            raise ValueError(f"battery level {self.level} outside [0, 100]")


@dataclass
class NavigationState:
    status: str = IDLE
    goal: str = ""
    path: list[tuple[int, int]] = field(default_factory=list)
    # continuous points still to visit, front first
    waypoints: list[tuple[float, float]] = field(default_factory=list)


class WorldError(RuntimeError):
    pass


class World:
    """Everything the service endpoints expose, advanced one step at a time.

    ``grid`` is the true map (used for the laser); planning runs on a copy
    inflated by ``inflation`` cells for clearance.
    """

    def __init__(self, grid: GridMap, start: Location, battery: Optional[BatteryState] = None,
                 speed: float = 0.2, inflation: int = 1, station: str = "charging_station",
                 station_tolerance: float = 0.3):
        grid.validate()
        self.grid = grid
        self.plan_grid = grid.inflated(inflation)
        if not self.plan_grid.is_free(*start.cell):
            raise WorldError(f"start pose {start} is not free on the planning map")
        self.robot = RobotState(start.x, start.y, start.theta, speed)
        self.battery = battery or BatteryState()
        self.nav = NavigationState()
        self.station = station
        self.station_tolerance = station_tolerance
        self.tick = 0
        if station not in grid.named_locations:
            raise WorldError(f"map has no location {station!r}")

    # -- queries -------------------------------------------------------------

    def location(self, name: str) -> Location:
        try:
            return self.grid.named_locations[name]
        except KeyError:
            raise WorldError(f"unknown location {name!r}") from None

    def distance_to(self, name: str) -> float:
        loc = self.location(name)
        return math.hypot(self.robot.x - loc.x, self.robot.y - loc.y)

    def at_station(self) -> bool:
        return self.distance_to(self.station) <= self.station_tolerance

    def snapshot(self) -> dict:
        return {
            "tick": self.tick,
            "robot": asdict(self.robot),
            "battery": asdict(self.battery),
            "nav": {"status": self.nav.status, "goal": self.nav.goal,
                    "remaining": len(self.nav.waypoints)},
        }

    def observables(self) -> dict:
        """Flat view used by scenario trigger expressions."""
        return {
            "tick": self.tick,
            "level": self.battery.level,
            "charging": self.battery.charging,
            "x": self.robot.x,
            "y": self.robot.y,
            "nav_status": self.nav.status,
            "nav_goal": self.nav.goal,
            "at_station": self.at_station(),
        }

    # -- commands ------------------------------------------------------------

    def goto(self, name: str) -> str:
        goal = self.location(name)
        here = (int(math.floor(self.robot.x)), int(math.floor(self.robot.y)))
        path = plan_path(self.plan_grid, here, goal.cell)
        self.nav.goal = name
        if path is None:
            self.nav.status = PATH_NOT_FOUND
            self.nav.path = []
            self.nav.waypoints = []
            return self.nav.status
        self.nav.path = path
        points = [(i + 0.5, j + 0.5) for i, j in path]
        points[-1] = (goal.x, goal.y)
        self.nav.waypoints = [p for p in points
                              if math.hypot(p[0] - self.robot.x, p[1] - self.robot.y) > 0.0]
        self.nav.status = NAVIGATING if self.nav.waypoints else REACHED
        return self.nav.status

    def stop(self) -> str:
        if self.nav.status == NAVIGATING:
            self.nav.status = ABORTED
        self.nav.waypoints = []
        return self.nav.status

    def set_battery(self, level: float) -> None:
        if not 0.0 <= level <= 100.0:
            raise WorldError(f"battery level {level} outside [0, 100]")
        self.battery.level = float(level)

    def plug_cable(self) -> None:
        if not self.at_station():
            raise WorldError("cable can only be plugged in at the charging station")
        self.battery.charging = True

    # -- dynamics ------------------------------------------------------------

    def step(self) -> None:
        if self.nav.status == NAVIGATING:
            self._move(self.robot.speed)
        b = self.battery
        if b.charging:
            b.level = min(100.0, b.level + b.charge_rate)
            if b.level >= 100.0:
                b.charging = False  # charger cuts off when full
        else:
            b.level = max(0.0, b.level - b.drain_rate)
        self.tick += 1

    def _move(self, budget: float) -> None:
        r = self.robot
        wps = self.nav.waypoints
        while wps and budget > 0.0:
            tx, ty = wps[0]
            d = math.hypot(tx - r.x, ty - r.y)
            if d > 0.0:
                r.theta = math.atan2(ty - r.y, tx - r.x)
            if d <= budget + 1e-12:
                r.x, r.y = tx, ty
                budget -= d
                wps.pop(0)
            else:
                r.x += (tx - r.x) * budget / d
                r.y += (ty - r.y) * budget / d
                budget = 0.0
        if not wps:
            self.nav.status = REACHED
            goal = self.grid.named_locations.get(self.nav.goal)
            if goal is not None:
                r.theta = goal.theta
