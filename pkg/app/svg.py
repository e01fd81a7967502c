"""
SVG rendering of unfolding strips, orbit-tile rasters and decorated cycles.

Documents are rendered from the jinja2 templates in app/templates with every
coordinate printed at a fixed precision, so equal inputs give equal bytes.
Colors: periodic blue, saddle red, infeasible light grey; CCW strikes and
semicircles teal, CW orange.
"""
import logging
import math
import os
from typing import Any, Iterable, List, Optional, Tuple, Union

from jinja2 import Environment, FileSystemLoader, StrictUndefined

from app.config import settings
from app.errors import UnsupportedError
from app.models import Corridor, CorridorStatus, DecoratedCycle, DecoratedPath, Point, TileRaster, UnfoldingStrip
from app.tiles import VERDICT_COLORS, VERDICT_ORDER, raster_summary
from app.unfolding import crossing_points

logger = logging.getLogger(__name__)

TEMPLATE_DIR = os.path.join(os.path.dirname(__file__), "templates")

_CYCLE_SCALE = 40.0


def _environment(precision: int) -> Environment:
    env = Environment(loader=FileSystemLoader(TEMPLATE_DIR), autoescape=True,
                      undefined=StrictUndefined, trim_blocks=True, lstrip_blocks=True)

    def num(x: float) -> str:
        text = f"{x:.{precision}f}"
        return text[1:] if text.startswith("-") and float(text) == 0 else text

    env.filters["num"] = num
    return env


def _flip(p: Point) -> Point:
    return (p[0], -p[1])


def _view(points: Iterable[Point], margin: float = 0.05) -> Tuple[List[float], float]:
    pts = list(points)
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    w = max(max(xs) - min(xs), 1e-9)
    h = max(max(ys) - min(ys), 1e-9)
    pad = margin * max(w, h)
    return [min(xs) - pad, min(ys) - pad, w + 2 * pad, h + 2 * pad], max(w, h)


def _render(template: str, precision: Optional[int], **context: Any) -> str:
    env = _environment(settings.svg_precision if precision is None else precision)
    view = context["view"]
    context["view"] = [env.filters["num"](v) for v in view]
    context.setdefault("width", 800)
    context.setdefault("height", max(1, round(800 * view[3] / view[2])))
    return env.get_template(template).render(**context)


def render_strip(strip: UnfoldingStrip, band: Optional[Corridor] = None,
                 decorated: Optional[DecoratedPath] = None, precision: Optional[int] = None) -> str:
    """Copies along the word, crossed edges, the corridor band and its midline, struck vertices"""
    copies = [{"points": [_flip(p) for p in strip.copy_vertices(k)]} for k in range(len(strip.placements))]
    view, size = _view(p for c in copies for p in c["points"])
    crossed = [(_flip(p), _flip(q)) for p, q in strip.crossed_edges]

    corners: List[Point] = []
    path: List[Point] = []
    if band is not None and band.status is not CorridorStatus.EMPTY:
        u, nu = band.direction, band.normal
        hits = crossing_points(strip, u, band.midline_offset)
        s = [h[0] * u[0] + h[1] * u[1] for h in hits]
        s0, s1 = min(s), max(s)
        for t, off in ((s0, band.lower), (s1, band.lower), (s1, band.upper), (s0, band.upper)):
            corners.append(_flip((t * u[0] + off * nu[0], t * u[1] + off * nu[1])))
        path = [_flip(h) for h in hits]

    strikes = []
    if decorated is not None:
        for strike, decoration in zip(decorated.strikes, decorated.decorations):
            point = strip.placements[strike.copy_index].apply(strip.base.vertex(strike.vertex))
            strikes.append({"point": _flip(point), "vertex": strike.vertex, "decoration": decoration.value})

    return _render("strip.svg.j2", precision, title=f"unfolding along {strip.word.text()}", view=view,
                   copies=copies, crossed=crossed, band=corners, path=path, strikes=strikes,
                   stroke=size / 400, font=size / 40, radius=size / 100)


def render_raster(tile: TileRaster, precision: Optional[int] = None) -> str:
    """One rect per cell, theta1 to the right and theta2 up"""
    cols, rows = tile.resolution
    r = tile.region
    w = (r.theta1_max - r.theta1_min) / cols
    h = (r.theta2_max - r.theta2_min) / rows
    cells = []
    for row, line in enumerate(tile.cells):
        for col, verdict in enumerate(line):
            x = r.theta1_min + col * w
            y = -(r.theta2_min + (row + 1) * h)
            cells.append({"x": x, "y": y, "w": w, "h": h, "verdict": verdict.value})
    frame = (r.theta1_min, -r.theta2_max, r.theta1_max - r.theta1_min, r.theta2_max - r.theta2_min)
    size = max(frame[2], frame[3])
    counts = raster_summary(tile)
    legend = []
    for i, verdict in enumerate(VERDICT_ORDER):
        legend.append({"name": verdict.value, "count": counts[verdict.value], "size": size / 30,
                       "x": frame[0] + frame[2] + size / 20, "y": frame[1] + i * size / 15})
    view = [frame[0] - size / 20, frame[1] - size / 20, frame[2] + size * 0.45, frame[3] + size / 10]
    return _render("raster.svg.j2", precision, title=f"orbit tile of {tile.word.text()}", view=view,
                   cells=cells, frame=frame, legend=legend, stroke=size / 500, font=size / 35,
                   colors=[(v.value, VERDICT_COLORS[v]) for v in VERDICT_ORDER])


def _component_anchor(side: str, k: int, n: int) -> Point:
    x = 0.0 if abs(k) == n - 1 else (-0.5 if side == "L" else 0.5)
    return (x * _CYCLE_SCALE, -k * _CYCLE_SCALE / 2)


def render_cycle(cycle: DecoratedCycle, precision: Optional[int] = None) -> str:
    """Horizontal components as segments, one semicircle per transition"""
    n = cycle.n
    comps = []
    for k in range(1 - n, n, 2):
        y = -k * _CYCLE_SCALE / 2
        if abs(k) == n - 1:
            comps.append({"name": f"L_{k}", "x1": -_CYCLE_SCALE, "x2": _CYCLE_SCALE, "y": y, "boundary": True})
            continue
        comps.append({"name": f"L_{k}", "x1": -_CYCLE_SCALE, "x2": -2.0, "y": y, "boundary": False})
        comps.append({"name": f"R_{k}", "x1": 2.0, "x2": _CYCLE_SCALE, "y": y, "boundary": False})
    transitions = []
    m = len(cycle.components)
    for i, (c, d) in enumerate(zip(cycle.components, cycle.decorations)):
        nxt = cycle.components[(i + 1) % m]
        a = _component_anchor(c.side.value, c.k, n)
        b = _component_anchor(nxt.side.value, nxt.k, n)
        radius = max(math.dist(a, b) / 2, 1e-9)
        # y is flipped, so the screen's clockwise sweep is the geometric one
        transitions.append({"start": a, "end": b, "radius": radius, "decoration": d.value,
                            "sweep": 1 if d.value == "cw" else 0})
    extent = _CYCLE_SCALE * (n / 2 + 1)
    view = [-1.5 * _CYCLE_SCALE, -extent, 3.5 * _CYCLE_SCALE, 2 * extent]
    return _render("cycle.svg.j2", precision, title=f"cycle {' '.join(cycle.labels())} on V_{n}", view=view,
                   components=comps, transitions=transitions, stroke=1.0, font=8.0)


SvgInput = Union[TileRaster, UnfoldingStrip, DecoratedCycle]


def emit_svg(obj: SvgInput, precision: Optional[int] = None, **extra: Any) -> str:
    """Standalone SVG document for a raster, a strip or a decorated cycle"""
    if isinstance(obj, TileRaster):
        doc = render_raster(obj, precision)
    elif isinstance(obj, UnfoldingStrip):
        doc = render_strip(obj, extra.get("band"), extra.get("decorated"), precision)
    elif isinstance(obj, DecoratedCycle):
        doc = render_cycle(obj, precision)
    else:
        raise UnsupportedError(f"Cannot render {type(obj).__name__} as SVG")
    logger.debug(f"Rendered {type(obj).__name__} SVG ({len(doc)} bytes)")
    return doc


def write_svg(doc: str, path: str) -> str:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(doc)
    logger.info(f"Wrote SVG to {path}")
    return path
