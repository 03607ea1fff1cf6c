"""Service-layer endpoints: thin bus handlers over a :class:`World`."""
from __future__ import annotations

from ..bus import Bus, Message
from .world import World

BATTERY = "battery"
LOCALIZATION = "localization"
NAVIGATION = "navigation"

# privileged clients, kept apart from the skill traffic
INJECTOR = "injector"
OPERATOR = "operator"


class ProcedureError(RuntimeError):
    pass


class _Server:
    procedures: dict[str, str] = {}

    def __init__(self, world: World):
        self.world = world

    def __call__(self, request: Message) -> dict:
        method = self.procedures.get(request.procedure)
        if method is None:
            raise ProcedureError(f"{type(self).__name__} has no procedure {request.procedure!r}")
        return getattr(self, method)(request)


class BatteryServer(_Server):
    procedures = {
        "level": "level",
        "charging_status": "charging_status",
        "set_level": "set_level",
        "plug_cable": "plug_cable",
    }

    def level(self, request):
        return {"level": self.world.battery.level}

    def charging_status(self, request):
        return {"charging": self.world.battery.charging}

    def set_level(self, request):
        if request.connection.client != INJECTOR:
            raise ProcedureError("set_level is only reachable from the fault-injection channel")
        self.world.set_battery(float(request.payload["level"]))
        return {"level": self.world.battery.level}

    def plug_cable(self, request):
        if request.connection.client != OPERATOR:
            raise ProcedureError("plug_cable is an operator action")
        self.world.plug_cable()
        return {"charging": self.world.battery.charging}


class LocalizationServer(_Server):
    procedures = {"getCurrentPosition": "position"}

    def position(self, request):
        r = self.world.robot
        return {"x": r.x, "y": r.y, "theta": r.theta}


class NavigationServer(_Server):
    procedures = {
        "gotoTargetByLocationName": "goto",
        "getNavigationStatus": "status",
        "stopNavigation": "stop",
    }

    def goto(self, request):
        status = self.world.goto(str(request.payload["name"]))
        return {"status": status, "goal": self.world.nav.goal}

    def status(self, request):
        w = self.world
        return {"status": w.nav.status, "goal": w.nav.goal, "x": w.robot.x, "y": w.robot.y}

    def stop(self, request):
        return {"status": self.world.stop()}


def register_services(bus: Bus, world: World) -> None:
    bus.register_endpoint(BATTERY, BatteryServer(world))
    bus.register_endpoint(LOCALIZATION, LocalizationServer(world))
    bus.register_endpoint(NAVIGATION, NavigationServer(world))
