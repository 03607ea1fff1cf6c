"""Occupancy grid maps.

Cell ``(i, j)`` (column ``i``, row ``j``) covers ``[i, i+1) x [j, j+1)`` in
continuous map coordinates, so a cell's center is ``(i + 0.5, j + 0.5)``.
Rows grow downward; headings are measured from +x towards +y.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class MapError(ValueError):
    pass


@dataclass(frozen=True)
class Location:
    x: float
    y: float
    theta: float = 0.0

    @property
    def cell(self) -> tuple[int, int]:
        return int(math.floor(self.x)), int(math.floor(self.y))


@dataclass
class GridMap:
    occupancy: np.ndarray  # bool, shape (height, width), True = obstacle
    named_locations: dict[str, Location] = field(default_factory=dict)

    def __post_init__(self):
        self.occupancy = np.asarray(self.occupancy, dtype=bool)
        if self.occupancy.ndim != 2:
            raise MapError("occupancy must be 2-D")

    @property
    def height(self) -> int:
        return self.occupancy.shape[0]

    @property
    def width(self) -> int:
        return self.occupancy.shape[1]

    def in_bounds(self, i: int, j: int) -> bool:
        return 0 <= i < self.width and 0 <= j < self.height

    def is_free(self, i: int, j: int) -> bool:
        return self.in_bounds(i, j) and not self.occupancy[j, i]

    def is_free_point(self, x: float, y: float) -> bool:
        return self.is_free(int(math.floor(x)), int(math.floor(y)))

    def validate(self) -> None:
        occ = self.occupancy
        if not (occ[0, :].all() and occ[-1, :].all() and occ[:, 0].all() and occ[:, -1].all()):
            raise MapError("map border must be closed by obstacles")
        for name, loc in self.named_locations.items():
            if not self.is_free(*loc.cell):
                raise MapError(f"location {name!r} at {loc.cell} is not on a free cell")

    def inflated(self, radius: int = 1) -> "GridMap":
        """Grow obstacles by ``radius`` cells (Chebyshev); named cells stay free."""
        if radius <= 0:
            return GridMap(self.occupancy.copy(), dict(self.named_locations))
        occ = self.occupancy
        grown = occ.copy()
        h, w = occ.shape
        for dj in range(-radius, radius + 1):
            for di in range(-radius, radius + 1):
                src = occ[max(0, -dj):h - max(0, dj), max(0, -di):w - max(0, di)]
                grown[max(0, dj):h - max(0, -dj), max(0, di):w - max(0, -di)] |= src
        for loc in self.named_locations.values():
            i, j = loc.cell
            grown[j, i] = occ[j, i]
        return GridMap(grown, dict(self.named_locations))

    def to_ascii(self) -> str:
        rows = [["#" if c else "." for c in row] for row in self.occupancy]
        return "\n".join("".join(r) for r in rows) + "\n"


def parse_ascii_map(text: str, sidecar: dict | None = None) -> GridMap:
    """Build a map from ASCII art.

    ``#`` is an obstacle, ``.`` free, and any letter marks a free cell named
    through ``sidecar["locations"][letter] = {"name": ..., "theta": ...}``.
    Letters missing from the sidecar are named by the letter itself.
    """
    lines = [ln.rstrip("\n") for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise MapError("empty map")
    width = len(lines[0])
    if any(len(ln) != width for ln in lines):
        raise MapError("map rows have different lengths")
    meta = (sidecar or {}).get("locations", {})
    occ = np.zeros((len(lines), width), dtype=bool)
    locations: dict[str, Location] = {}
    for j, line in enumerate(lines):
        for i, ch in enumerate(line):
            if ch == "#":
                occ[j, i] = True
            elif ch == ".":
                continue
            elif ch.isalpha():
                info = meta.get(ch, {})
                name = info.get("name", ch)
                if name in locations:
                    raise MapError(f"location {name!r} appears twice")
                locations[name] = Location(i + 0.5, j + 0.5, float(info.get("theta", 0.0)))
            else:
                raise MapError(f"unknown map character {ch!r} at row {j}, column {i}")
    grid = GridMap(occ, locations)
    grid.validate()
    return grid


def load_map(path) -> GridMap:
    """Load ``<name>.txt`` plus an optional ``<name>.json`` sidecar."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"map file not found: {path}")
    sidecar_path = path.with_suffix(".json")
    sidecar = json.loads(sidecar_path.read_text()) if sidecar_path.exists() else None
    return parse_ascii_map(path.read_text(), sidecar)


def random_map(rng: np.random.Generator, width: int, height: int, density: float) -> GridMap:
    """Random interior obstacles at ``density`` inside a closed border."""
    occ = rng.random((height, width)) < density
    occ[0, :] = occ[-1, :] = True
    occ[:, 0] = occ[:, -1] = True
    return GridMap(occ)
