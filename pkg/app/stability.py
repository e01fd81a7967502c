"""
Stability of periodic words and decorated saddle connections.

Winding vectors live on the double of a triangle, a sphere with three
punctures. The loops around the punctures sum to zero in homology, so a
winding vector is a class modulo (1, 1, 1); we return the representative
whose smallest entry is 0.
"""
import logging
import math
from fractions import Fraction
from typing import List, Optional

from app.config import settings
from app.errors import (
    ClassificationError, InvalidWordError, NoRelationError,
    PreconditionError, UnsupportedError,
)
from app.geom import in_tau
from app.models import (
    Corridor, CorridorStatus, Decoration, DecoratedPath, EdgeWord, IntegerRelation, Side,
    StabilityReport, Strike, TightVertex, TriangleShape, UnfoldingStrip, Verdict, WindingVector,
)
from app.unfolding import Shape, as_polygon, classify_word, unfold

logger = logging.getLogger(__name__)

# pair (a, b) pivots counterclockwise about the vertex shared by edges a and b
_CCW_PAIRS = {(1, 2), (2, 3), (3, 1)}


def is_stable(w: EdgeWord) -> bool:
    return in_tau(w)


def saddle_strikes(strip: UnfoldingStrip, band: Corridor) -> List[TightVertex]:
    """Vertices struck by the degenerate corridor line, in copy order"""
    if band.status is not CorridorStatus.DEGENERATE:
        raise ClassificationError(f"Corridor is {band.status.value}, not degenerate",
                                  {"word": strip.word.letters})
    return sorted(band.tight_vertices, key=lambda t: t.copy_index)


def _pair_winding(w: EdgeWord) -> List[int]:
    counts = [0, 0, 0]
    letters = w.letters
    for k in range(0, len(letters), 2):
        a, b = letters[k], letters[k + 1]
        vertex = 6 - a - b
        counts[vertex - 1] += 1 if (a, b) in _CCW_PAIRS else -1
    return counts


def _normalized(counts: List[int]) -> List[int]:
    low = min(counts)
    return [c - low for c in counts]


def winding_vector(w: EdgeWord, decorations: Optional[DecoratedPath] = None) -> WindingVector:
    """Winding numbers around v1, v2, v3 of the word's closed path on the double"""
    if w.n != 3:
        raise UnsupportedError(f"Winding vectors are implemented for triangles only, got n={w.n}",
                               {"n": w.n})
    if len(w) % 2:
        raise InvalidWordError("Odd-length words do not close on the double", {"length": len(w)})
    counts = _pair_winding(w)
    if decorations is not None:
        # pair counts pass every struck vertex on its reference side
        reference = _half_loops(decorations.strikes, [s.reference for s in decorations.strikes])
        added = decoration_contribution(decorations)
        counts = [int(c - r + a) for c, r, a in zip(counts, reference, added)]
    return WindingVector(w=_normalized(counts))


def _half_loops(strikes: List[Strike], decorations: List[Decoration]) -> List[Fraction]:
    out = [Fraction(0)] * 3
    for strike, decoration in zip(strikes, decorations):
        out[strike.vertex - 1] += Fraction(decoration.sign, 2)
    return out


def decoration_contribution(d: DecoratedPath) -> List[Fraction]:
    """Half a loop about each struck vertex per semicircle, positive when counterclockwise"""
    return _half_loops(d.strikes, d.decorations)


def decorate(P: Shape, w: EdgeWord, reference: Shape, tol: Optional[float] = None) -> DecoratedPath:
    """Semicircle directions of a saddle connection, read off a nearby periodic trajectory"""
    tol = settings.tol if tol is None else tol
    here = classify_word(P, w, tol)
    if here.verdict is not Verdict.SADDLE:
        raise ClassificationError(f"Word is {here.verdict.value}, not a saddle connection",
                                  {"word": w.letters, "verdict": here.verdict.value})
    nearby = classify_word(reference, w, tol)
    if nearby.verdict is not Verdict.PERIODIC:
        raise ClassificationError("Reference polygon does not carry the word as a periodic trajectory",
                                  {"word": w.letters, "verdict": nearby.verdict.value})
    ref_strip = unfold(reference, w)
    struck = saddle_strikes(unfold(P, w), here.corridor)
    band = nearby.corridor
    normal, mid = band.normal, band.midline_offset
    ref_polygon = as_polygon(reference)

    strikes: List[Strike] = []
    for tight in struck:
        x = ref_strip.placements[tight.copy_index].apply(ref_polygon.vertex(tight.vertex))
        side = Side.LEFT if normal[0] * x[0] + normal[1] * x[1] > mid else Side.RIGHT
        decoration = Decoration.CCW if side is Side.LEFT else Decoration.CW
        strikes.append(Strike(copy_index=tight.copy_index, vertex=tight.vertex, reference=decoration))
    logger.debug(f"Decorated {w.text()}: {[s.reference.value for s in strikes]}")
    return DecoratedPath(word=w, strikes=strikes, decorations=[s.reference for s in strikes])


def arises_from_stable(d: DecoratedPath) -> bool:
    """True iff the decorated path is null-homologous on the double"""
    return winding_vector(d.word, d).is_zero


def _closing_word(w: EdgeWord) -> EdgeWord:
    if len(w) % 2 == 0:
        return w
    if len(w) > 1 and w.letters[0] == w.letters[-1]:
        raise InvalidWordError("Odd word cannot be traversed twice", {"word": w.letters})
    return w.concat(w)


def integer_relation(w: EdgeWord, P: Optional[TriangleShape] = None,
                     tol: Optional[float] = None) -> IntegerRelation:
    """Integer combination of interior angles that vanishes mod 2 pi wherever w closes up"""
    tol = settings.tol if tol is None else tol
    if is_stable(w):
        raise NoRelationError("Stable words impose no relation on the angles", {"word": w.letters})
    closed = _closing_word(w)
    coefficients = [2 * x for x in winding_vector(closed).w]
    if not any(coefficients):
        raise NoRelationError("Word closes for every triangle", {"word": w.letters})
    if P is not None:
        total = sum(c * a for c, a in zip(coefficients, P.angles()))
        if abs(math.remainder(total, 2 * math.pi)) > tol * max(1, sum(map(abs, coefficients))):
            raise PreconditionError("Word does not close with identity rotation on this triangle",
                                    {"residual": math.remainder(total, 2 * math.pi)})
    return IntegerRelation(coefficients=coefficients)


def perturbation_oracle(T: TriangleShape, w: EdgeWord, step: Optional[float] = None,
                        directions: int = 8, tol: Optional[float] = None) -> bool:
    """Numerical stability: still periodic at every shape step away from T in each direction"""
    step = settings.perturbation_step if step is None else step
    tol = settings.tol if tol is None else tol
    if classify_word(T, w, tol).verdict is not Verdict.PERIODIC:
        raise PreconditionError("Word is not periodic at the base triangle", {"word": w.letters})
    for k in range(directions):
        phi = 2 * math.pi * k / directions
        try:
            Q = TriangleShape(theta1=T.theta1 + step * math.cos(phi), theta2=T.theta2 + step * math.sin(phi))
        except ValueError as e:
            logger.debug(f"Perturbed shape outside the parameter square: {e}")
            return False
        if classify_word(Q, w, tol).verdict is not Verdict.PERIODIC:
            return False
    return True


def stability_report(w: EdgeWord, P: Optional[TriangleShape] = None) -> StabilityReport:
    """Everything the stability subcommand prints"""
    stable = is_stable(w)
    winding = None
    relation = None
    if w.n == 3:
        if len(w) % 2 == 0:
            winding = winding_vector(w).w
        if not stable:
            try:
                relation = integer_relation(w, P).coefficients
            except (NoRelationError, InvalidWordError, PreconditionError) as e:
                logger.debug(f"No relation for {w.text()}: {e.message}")
    return StabilityReport(stable=stable, winding=winding, relation=relation)
