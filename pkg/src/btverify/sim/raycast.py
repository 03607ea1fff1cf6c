"""Radial laser simulation by grid traversal (Amanatides & Woo DDA)."""
from __future__ import annotations

import math

import numpy as np

from .grid import GridMap


def cast_ray(grid: GridMap, x: float, y: float, angle: float, max_range: float) -> float:
    """Distance from ``(x, y)`` to the first obstacle cell boundary along ``angle``.

    Cells outside the map count as obstacles. Returns ``max_range`` when
    nothing is hit before it.
    """
    occ = grid.occupancy
    h, w = occ.shape
    i, j = int(math.floor(x)), int(math.floor(y))
    if not (0 <= i < w and 0 <= j < h) or occ[j, i]:
        return 0.0
    dx, dy = math.cos(angle), math.sin(angle)
    if abs(dx) < 1e-15:
        dx = 0.0
    if abs(dy) < 1e-15:
        dy = 0.0

    if dx > 0:
        step_i, t_max_x, t_delta_x = 1, (i + 1 - x) / dx, 1.0 / dx
    elif dx < 0:
        step_i, t_max_x, t_delta_x = -1, (x - i) / -dx, -1.0 / dx
    else:
        step_i, t_max_x, t_delta_x = 0, math.inf, math.inf
    if dy > 0:
        step_j, t_max_y, t_delta_y = 1, (j + 1 - y) / dy, 1.0 / dy
    elif dy < 0:
        step_j, t_max_y, t_delta_y = -1, (y - j) / -dy, -1.0 / dy
    else:
        step_j, t_max_y, t_delta_y = 0, math.inf, math.inf

    while True:
        if t_max_x < t_max_y:
            t = t_max_x
            i += step_i
            t_max_x += t_delta_x
        else:
            t = t_max_y
            j += step_j
            t_max_y += t_delta_y
        if t >= max_range:
            return max_range
        if not (0 <= i < w and 0 <= j < h) or occ[j, i]:
            return t


def raycast(grid: GridMap, pose, beam_count: int, max_range: float) -> np.ndarray:
    """Readings for ``beam_count`` beams, beam ``k`` at ``theta + 2*pi*k/beam_count``.

    ``pose`` is a :class:`Location` or an ``(x, y, theta)`` triple.
    """
    x, y, theta = (pose.x, pose.y, pose.theta) if hasattr(pose, "theta") else pose
    return np.array([
        cast_ray(grid, x, y, theta + 2.0 * math.pi * k / beam_count, max_range)
        for k in range(beam_count)
    ])
