"""Static SVG summaries of a bus trace: battery level over time and robot path."""
from __future__ import annotations

from typing import Iterable, Optional
from xml.sax.saxutils import escape

from .bus import Direction, Message
from .sim.grid import GridMap

WIDTH = 900
PANEL_H = 360
MARGIN = 50


def battery_series(messages: Iterable[Message]) -> list[tuple[float, float]]:
    """``(t, level)`` for every battery level reply."""
    return [(m.t, float(m.payload["level"])) for m in messages
            if m.connection.server == "battery" and m.direction is Direction.REPLY
            and m.procedure == "level" and not m.fault and "level" in m.payload]


def robot_path(messages: Iterable[Message]) -> list[tuple[float, float]]:
    """Robot positions reported by navigation status and localization replies."""
    points = []
    for m in messages:
        if m.direction is not Direction.REPLY or m.fault:
            continue
        if m.procedure in ("getNavigationStatus", "getCurrentPosition") and "x" in m.payload:
            p = (float(m.payload["x"]), float(m.payload["y"]))
            if not points or points[-1] != p:
                points.append(p)
    return points


def _battery_panel(series, y0: float, limit: float, low: float) -> list[str]:
    out = []
    pw, ph = WIDTH - 2 * MARGIN, PANEL_H - 2 * MARGIN
    left, top = MARGIN, y0 + MARGIN
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="white" stroke="black"/>')
    out.append(f'<text x="{left}" y="{top - 12}" font-size="14">battery level (%) vs tick</text>')
    t_max = max((t for t, _ in series), default=1.0) or 1.0

    def sx(t):
        return left + pw * t / t_max

    def sy(v):
        return top + ph * (1.0 - v / 100.0)

    for v in (0, 20, 30, 50, 100):
        out.append(f'<text x="{left - 8}" y="{sy(v) + 4:.1f}" font-size="10" text-anchor="end">{v}</text>')
    out.append(f'<text x="{left + pw}" y="{top + ph + 16}" font-size="10" text-anchor="end">{t_max:g}</text>')
    for v, colour in ((limit, "red"), (low, "orange")):
        out.append(f'<line class="threshold" x1="{left}" x2="{left + pw}" y1="{sy(v):.1f}" y2="{sy(v):.1f}" '
                   f'stroke="{colour}" stroke-dasharray="4 3"/>')
    if series:
        pts = " ".join(f"{sx(t):.1f},{sy(v):.1f}" for t, v in series)
        out.append(f'<polyline class="battery" points="{pts}" fill="none" stroke="steelblue" stroke-width="1.5"/>')
        crossing = next(((t, v) for t, v in series if v <= limit), None)
        if crossing is not None:
            t, v = crossing
            out.append(f'<circle class="violation" cx="{sx(t):.1f}" cy="{sy(v):.1f}" r="5" fill="red"/>')
            out.append(f'<text x="{sx(t) + 8:.1f}" y="{sy(v) - 8:.1f}" font-size="11" fill="red">'
                       f'level {v:g} at tick {t:g}</text>')
    return out


def _path_panel(path, grid: Optional[GridMap], y0: float) -> list[str]:
    out = []
    pw, ph = WIDTH - 2 * MARGIN, PANEL_H - 2 * MARGIN
    left, top = MARGIN, y0 + MARGIN
    out.append(f'<text x="{left}" y="{top - 12}" font-size="14">robot path</text>')
    if grid is not None:
        w, h = grid.width, grid.height
    else:
        w = max((x for x, _ in path), default=1.0) + 1.0
        h = max((y for _, y in path), default=1.0) + 1.0
    scale = min(pw / w, ph / h)
    out.append(f'<rect x="{left}" y="{top}" width="{w * scale:.1f}" height="{h * scale:.1f}" '
               f'fill="white" stroke="black"/>')
    if grid is not None:
        for j in range(grid.height):
            for i in range(grid.width):
                if grid.occupancy[j, i]:
                    out.append(f'<rect x="{left + i * scale:.1f}" y="{top + j * scale:.1f}" '
                               f'width="{scale:.1f}" height="{scale:.1f}" fill="#444"/>')
        for name, loc in grid.named_locations.items():
            cx, cy = left + loc.x * scale, top + loc.y * scale
            out.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="{scale * 0.4:.1f}" fill="none" stroke="purple"/>')
            out.append(f'<text x="{cx + scale * 0.6:.1f}" y="{cy:.1f}" font-size="10">{escape(name)}</text>')
    if path:
        pts = " ".join(f"{left + x * scale:.1f},{top + y * scale:.1f}" for x, y in path)
        out.append(f'<polyline class="path" points="{pts}" fill="none" stroke="green" stroke-width="2"/>')
    return out


def trace_svg(messages: list[Message], grid: Optional[GridMap] = None,
              limit: float = 20.0, low: float = 30.0) -> str:
    height = 2 * PANEL_H
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
             f'viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">']
    parts += _battery_panel(battery_series(messages), 0, limit, low)
    parts += _path_panel(robot_path(messages), grid, PANEL_H)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
