"""
Unfolding strips, translation closure and corridors.

A corridor is the set of offsets (measured along the left normal of the
closure translation) whose lines cross every crossed edge of the strip.
"""
import logging
import math
from typing import List, Optional, Sequence, Tuple, Union

from app.config import settings
from app.errors import ClassificationError, ClosureError, ShapeMismatchError
from app.geom import reflect_edge
from app.models import (
    Classification, Closure, ClosureKind, Corridor, CorridorStatus, EdgeWord,
    PlanarIsometry, Point, PolygonShape, Side, TightVertex, TriangleShape,
    UnfoldingStrip, Verdict,
)

logger = logging.getLogger(__name__)

Shape = Union[PolygonShape, TriangleShape]


def as_polygon(shape: Shape) -> PolygonShape:
    if isinstance(shape, TriangleShape):
        return shape.to_polygon()
    return shape


def _dot(a: Point, b: Point) -> float:
    return a[0] * b[0] + a[1] * b[1]


def unfold(P: Shape, w: EdgeWord, start: Optional[PlanarIsometry] = None) -> UnfoldingStrip:
    """Strip with len(w)+1 copies; copy k is placements[k](P)"""
    P = as_polygon(P)
    if w.n != P.n:
        raise ShapeMismatchError(f"Word over {w.n} letters used on a {P.n}-gon")
    reflections = {i: reflect_edge(P, i) for i in range(1, P.n + 1)}
    g = start or PlanarIsometry.identity()
    placements = [g]
    crossed = []
    for letter in w.letters:
        p, q = P.edge(letter)
        crossed.append((g.apply(p), g.apply(q)))
        g = g.compose(reflections[letter])
        placements.append(g)
    return UnfoldingStrip(base=P, word=w, placements=placements, crossed_edges=crossed)


def closure(strip: UnfoldingStrip, tol: Optional[float] = None) -> Closure:
    """Final placement, tagged translation iff its orthogonal part is the identity"""
    tol = settings.tol if tol is None else tol
    g = strip.placements[-1]
    if g.orthogonal_is_identity(tol):
        return Closure(kind=ClosureKind.TRANSLATION, isometry=g, translation=g.translation)
    return Closure(kind=ClosureKind.NONTRIVIAL, isometry=g)


def offset_interval(edges: Sequence[Tuple[Point, Point]], direction: Point) -> Tuple[float, float]:
    """Intersection of the normal-offset ranges spanned by each edge"""
    normal = (-direction[1], direction[0])
    lo, hi = -math.inf, math.inf
    for p, q in edges:
        a, b = _dot(normal, p), _dot(normal, q)
        lo = max(lo, min(a, b))
        hi = min(hi, max(a, b))
    return lo, hi


def crossing_points(strip: UnfoldingStrip, direction: Point, offset: float) -> List[Point]:
    """Points where the line at the given offset meets each crossed edge"""
    normal = (-direction[1], direction[0])
    out = []
    for p, q in strip.crossed_edges:
        a, b = _dot(normal, p), _dot(normal, q)
        lam = 0.5 if a == b else (offset - a) / (b - a)
        out.append((p[0] + lam * (q[0] - p[0]), p[1] + lam * (q[1] - p[1])))
    return out


def _progresses(strip: UnfoldingStrip, direction: Point, offset: float, period: float, tol: float) -> bool:
    s = [_dot(direction, x) for x in crossing_points(strip, direction, offset)]
    steps = [s[k + 1] - s[k] for k in range(len(s) - 1)] + [s[0] + period - s[-1]]
    return all(step >= -tol for step in steps)


def _tight_vertices(strip: UnfoldingStrip, direction: Point, lo: float, hi: float, period_shift: Point,
                    tol: float) -> List[TightVertex]:
    normal = (-direction[1], direction[0])
    found: List[TightVertex] = []
    for k, (letter, (p, q)) in enumerate(zip(strip.word.letters, strip.crossed_edges), start=1):
        labels = strip.base.edge_endpoints(letter)
        a, b = _dot(normal, p), _dot(normal, q)
        for label, point, mine, other in ((labels[0], p, a, b), (labels[1], q, b, a)):
            if mine <= other and abs(mine - lo) <= tol:
                side = Side.RIGHT
            elif mine >= other and abs(mine - hi) <= tol:
                side = Side.LEFT
            else:
                continue
            if found and found[-1].side is side and math.dist(found[-1].point, point) <= tol:
                continue
            found.append(TightVertex(copy_index=k, vertex=label, side=side, point=point))
    if len(found) > 1:
        first, last = found[0], found[-1]
        shifted = (first.point[0] + period_shift[0], first.point[1] + period_shift[1])
        if last.side is first.side and math.dist(last.point, shifted) <= tol:
            found.pop()
    return found


def corridor(strip: UnfoldingStrip, tol: Optional[float] = None) -> Corridor:
    """Offset interval of lines parallel to the closure translation"""
    tol = settings.tol if tol is None else tol
    c = closure(strip, tol)
    if c.kind is not ClosureKind.TRANSLATION:
        raise ClosureError("Closure is not a translation",
                           {"kind": c.isometry.kind.value, "angle": c.isometry.angle})
    t = c.translation
    length = math.hypot(*t)
    if length <= tol:
        raise ClosureError("Closure translation has zero length", {"translation": list(t)})
    u = (t[0] / length, t[1] / length)
    lo, hi = offset_interval(strip.crossed_edges, u)
    width = hi - lo
    if width > tol:
        status = CorridorStatus.OPEN
    elif width >= -tol:
        status = CorridorStatus.DEGENERATE
    else:
        status = CorridorStatus.EMPTY
    if status is not CorridorStatus.EMPTY and not _progresses(strip, u, (lo + hi) / 2, length, tol):
        logger.debug(f"Word {strip.word.text()} backtracks along its corridor")
        status = CorridorStatus.EMPTY
    tight = _tight_vertices(strip, u, lo, hi, t, tol) if status is not CorridorStatus.EMPTY else []
    return Corridor(direction=u, lower=lo, upper=hi, status=status, tight_vertices=tight)


def classify_word(P: Shape, w: EdgeWord, tol: Optional[float] = None) -> Classification:
    """periodic, saddle or infeasible"""
    tol = settings.tol if tol is None else tol
    strip = unfold(P, w)
    c = closure(strip, tol)
    if c.kind is not ClosureKind.TRANSLATION:
        return Classification(verdict=Verdict.INFEASIBLE, closure=c.kind, reason="rotation closure")
    try:
        band = corridor(strip, tol)
    except ClosureError as e:
        return Classification(verdict=Verdict.INFEASIBLE, closure=c.kind, reason=e.message)
    verdict = {
        CorridorStatus.OPEN: Verdict.PERIODIC,
        CorridorStatus.DEGENERATE: Verdict.SADDLE,
        CorridorStatus.EMPTY: Verdict.INFEASIBLE,
    }[band.status]
    return Classification(verdict=verdict, closure=c.kind, corridor=band, reason=band.status.value)


def transfer(w: EdgeWord, P: Shape, Q: Shape, tol: Optional[float] = None) -> Classification:
    """Classify on Q a word that is periodic or a saddle on P"""
    P, Q = as_polygon(P), as_polygon(Q)
    if P.n != Q.n:
        raise ShapeMismatchError(f"Cannot transfer from a {P.n}-gon to a {Q.n}-gon",
                                 {"source_n": P.n, "target_n": Q.n})
    source = classify_word(P, w, tol)
    if source.verdict is Verdict.INFEASIBLE:
        raise ClassificationError("Word is neither periodic nor a saddle on the source polygon",
                                  {"word": w.letters, "reason": source.reason})
    return classify_word(Q, w, tol)
