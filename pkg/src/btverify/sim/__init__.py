from .grid import GridMap, Location, MapError, load_map, parse_ascii_map, random_map
from .planning import octile, path_cost, path_steps, plan_path
from .raycast import cast_ray, raycast
from .servers import (BATTERY, INJECTOR, LOCALIZATION, NAVIGATION, OPERATOR, BatteryServer,
                      LocalizationServer, NavigationServer, register_services)
from .world import BatteryState, NavigationState, RobotState, World, WorldError

__all__ = [
    "GridMap", "Location", "MapError", "load_map", "parse_ascii_map", "random_map",
    "octile", "path_cost", "path_steps", "plan_path", "cast_ray", "raycast",
    "BATTERY", "INJECTOR", "LOCALIZATION", "NAVIGATION", "OPERATOR",
    "BatteryServer", "LocalizationServer", "NavigationServer", "register_services",
    "BatteryState", "NavigationState", "RobotState", "World", "WorldError",
]
