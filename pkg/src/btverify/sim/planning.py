"""A* path planning on 8-connected occupancy grids."""
from __future__ import annotations

import heapq
import itertools
import math
from typing import Optional

from .grid import GridMap

SQRT2 = math.sqrt(2.0)

Cell = tuple[int, int]

# diagonal moves may not cut an obstacle corner
_MOVES = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)]


def neighbours(grid: GridMap, cell: Cell):
    i, j = cell
    for di, dj in _MOVES:
        ni, nj = i + di, j + dj
        if not grid.is_free(ni, nj):
            continue
        if di and dj:
            if not (grid.is_free(i + di, j) and grid.is_free(i, j + dj)):
                continue
            yield (ni, nj), SQRT2
        else:
            yield (ni, nj), 1.0


def octile(a: Cell, b: Cell) -> float:
    dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
    return max(dx, dy) + (SQRT2 - 1.0) * min(dx, dy)


def path_steps(path: list[Cell]) -> tuple[int, int]:
    """Number of (orthogonal, diagonal) moves along ``path``."""
    straight = diagonal = 0
    for (i0, j0), (i1, j1) in zip(path, path[1:]):
        if abs(i1 - i0) + abs(j1 - j0) == 2:
            diagonal += 1
        else:
            straight += 1
    return straight, diagonal


def path_cost(path: list[Cell]) -> float:
    straight, diagonal = path_steps(path)
    return straight + SQRT2 * diagonal


def plan_path(grid: GridMap, start: Cell, goal: Cell) -> Optional[list[Cell]]:
    """Cost-optimal cell path from ``start`` to ``goal`` inclusive, or ``None``.

    ``None`` means path not found, including an occupied goal cell.
    """
    start, goal = tuple(start), tuple(goal)
    if not grid.is_free(*start) or not grid.is_free(*goal):
        return None
    if start == goal:
        return [start]
    counter = itertools.count()
    g = {start: 0.0}
    parent: dict[Cell, Cell] = {}
    heap = [(octile(start, goal), next(counter), start)]
    closed = set()
    while heap:
        _, _, cell = heapq.heappop(heap)
        if cell in closed:
            continue
        if cell == goal:
            path = [cell]
            while cell in parent:
                cell = parent[cell]
                path.append(cell)
            return path[::-1]
        closed.add(cell)
        base = g[cell]
        for nxt, step in neighbours(grid, cell):
            if nxt in closed:
                continue
            cost = base + step
            if cost < g.get(nxt, math.inf):
                g[nxt] = cost
                parent[nxt] = cell
                heapq.heappush(heap, (cost + octile(nxt, goal), next(counter), nxt))
    return None
