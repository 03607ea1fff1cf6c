"""
Grid planning and laser beams
=============================

The simulator works on an occupancy grid. Planning is 8-connected A* that never
cuts obstacle corners; the laser casts beams with an exact grid traversal.
"""

import math

import numpy as np

from btverify import data_path
from btverify.sim import Location, load_map, path_cost, plan_path, random_map, raycast

grid = load_map(data_path("maps", "house.txt"))
print(grid.to_ascii())

# %%
# Plans between named places run on a copy of the map with obstacles grown by
# one cell, which keeps the point robot away from walls.
planning = grid.inflated(1)
locs = grid.named_locations
for a, b in [("start", "destination"), ("start", "charging_station"),
             ("charging_station", "destination")]:
    path = plan_path(planning, locs[a].cell, locs[b].cell)
    print(f"{a} -> {b}: {len(path)} cells, cost {path_cost(path):.2f}")

# %%
# Sixteen beams from the start pose. Beam k points at theta + 2*pi*k/16.
pose = locs["start"]
readings = raycast(grid, pose, 16, 12.0)
for k, r in enumerate(readings):
    angle = math.degrees(pose.theta + 2 * math.pi * k / 16) % 360
    print(f"beam {k:2d} at {angle:5.1f} deg: {r:6.3f} cells")

# %%
# Random maps are handy for testing: density sets the share of obstacles.
rng = np.random.default_rng(0)
small = random_map(rng, 12, 12, 0.25)
print(small.to_ascii())
print("free cells:", int((~small.occupancy).sum()))
j, i = np.argwhere(~small.occupancy)[0]
print(f"beams from the center of free cell ({i}, {j}):",
      raycast(small, Location(i + 0.5, j + 0.5, 0.0), 4, 10.0))
