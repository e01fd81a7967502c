"""
Polygon geometry, edge reflections and the word algebra.

Placements follow the unfolding: the copy reached after letters i1..ik is
R_{i1} o ... o R_{ik} applied to the base polygon, every R_i taken in the
base polygon's own frame.
"""
import itertools
import logging
import math
import re
from fractions import Fraction
from typing import Iterator, List, Sequence, Union

from app.errors import InvalidShapeError, LabelRangeError
from app.models import (
    Angle, EdgeWord, PlanarIsometry, PolygonShape, RotationVector, TriangleShape,
)

logger = logging.getLogger(__name__)

_PI_PATTERN = re.compile(r"^\s*(?P<num>[-+]?\d+)?\s*(?:/\s*(?P<den>\d+))?\s*\*?\s*(?P<pi>pi|π)?\s*(?:/\s*(?P<den2>\d+))?\s*$")


def parse_angle(value: Union[str, float, int]) -> Angle:
    """Parse radians or a rational multiple of pi ('1/6 pi', 'pi/6', '1/6')"""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return Angle(radians=float(value))
    text = str(value).strip().lower()
    match = _PI_PATTERN.match(text)
    if not match or (match.group("num") is None and match.group("pi") is None):
        try:
            return Angle(radians=float(text))
        except ValueError:
            raise InvalidShapeError(f"Cannot parse angle '{value}'", {"value": str(value)})
    num = int(match.group("num")) if match.group("num") is not None else 1
    den = int(match.group("den") or 1) * int(match.group("den2") or 1)
    if den == 0:
        raise InvalidShapeError(f"Zero denominator in angle '{value}'", {"value": str(value)})
    frac = Fraction(num, den)
    return Angle(radians=float(frac) * math.pi, pi_multiple=str(frac))


def make_triangle(theta1: Union[str, float], theta2: Union[str, float]) -> TriangleShape:
    """Build a triangle from two angle inputs, keeping exact multiples of pi"""
    a1, a2 = parse_angle(theta1), parse_angle(theta2)
    if not (0 < a1.radians < math.pi / 2 and 0 < a2.radians < math.pi / 2):
        raise InvalidShapeError("Triangle angles must lie in (0, pi/2)",
                                {"theta1": a1.radians, "theta2": a2.radians})
    if a1.radians + a2.radians >= math.pi:
        raise InvalidShapeError("Third angle must be positive")
    return TriangleShape(theta1=a1.radians, theta2=a2.radians,
                         theta1_pi=a1.pi_multiple, theta2_pi=a2.pi_multiple)


def equilateral() -> TriangleShape:
    return TriangleShape.from_pi_multiples(Fraction(1, 3), Fraction(1, 3))


def thirty_sixty_ninety() -> TriangleShape:
    """theta1 = pi/6 at v1, theta2 = pi/3 at v2, right angle at v3"""
    return TriangleShape.from_pi_multiples(Fraction(1, 6), Fraction(1, 3))


def right_isosceles() -> TriangleShape:
    return TriangleShape.from_pi_multiples(Fraction(1, 4), Fraction(1, 4))


def veech_triangle(n: int) -> TriangleShape:
    """Isosceles V_n: base angles pi/(2n) at v1 and v2, apex v3"""
    if n < 2:
        raise InvalidShapeError(f"V_n needs n >= 2, got {n}")
    return TriangleShape.from_pi_multiples(Fraction(1, 2 * n), Fraction(1, 2 * n))


def polygon_from_angles(angles: Sequence[float], lengths: Sequence[float] = None) -> PolygonShape:
    """n-gon with the given interior angles; the last two edge lengths are solved for closure"""
    n = len(angles)
    if n < 3:
        raise InvalidShapeError("Polygon needs at least 3 angles")
    if abs(sum(angles) - (n - 2) * math.pi) > 1e-9:
        raise InvalidShapeError("Interior angles must sum to (n-2) pi", {"sum": sum(angles)})
    lengths = list(lengths) if lengths is not None else [1.0] * (n - 2)
    if len(lengths) != n - 2:
        raise InvalidShapeError("Exactly n-2 edge lengths are required")
    # edge k leaves vertex k+1; its heading turns left by the exterior angle at each vertex
    headings = [0.0]
    for k in range(1, n):
        headings.append(headings[-1] + math.pi - angles[k])
    x = y = 0.0
    pts = [(0.0, 0.0)]
    for k in range(n - 2):
        x += lengths[k] * math.cos(headings[k])
        y += lengths[k] * math.sin(headings[k])
        pts.append((x, y))
    # solve a*u + b*w = -(x, y) for the last two lengths
    u = (math.cos(headings[n - 2]), math.sin(headings[n - 2]))
    w = (math.cos(headings[n - 1]), math.sin(headings[n - 1]))
    det = u[0] * w[1] - u[1] * w[0]
    if abs(det) < 1e-12:
        raise InvalidShapeError("Closing edges are parallel")
    a = (-x * w[1] + y * w[0]) / det
    b = (-u[0] * y + u[1] * x) / det
    if a <= 0 or b <= 0:
        raise InvalidShapeError("Edge lengths do not close the polygon",
                                {"closing_lengths": [a, b]})
    pts.append((x + a * u[0], y + a * u[1]))
    try:
        return PolygonShape(vertices=pts)
    except ValueError as e:
        raise InvalidShapeError(f"Invalid polygon: {e}")


def reflect_edge(P: PolygonShape, i: int) -> PlanarIsometry:
    """Reflection fixing edge i of P pointwise"""
    if not 1 <= i <= P.n:
        raise LabelRangeError(f"Edge label {i} outside 1..{P.n}", {"label": i, "n": P.n})
    p, q = P.edge(i)
    return PlanarIsometry.reflection_across(p, q)


def eval_word(P: PolygonShape, w: EdgeWord) -> PlanarIsometry:
    """Placement of the last unfolding copy of P along w"""
    if w.n != P.n:
        raise LabelRangeError(f"Word over {w.n} letters used on a {P.n}-gon", {"word_n": w.n, "n": P.n})
    reflections = {i: reflect_edge(P, i) for i in range(1, P.n + 1)}
    g = PlanarIsometry.identity()
    for letter in w.letters:
        g = g.compose(reflections[letter])
    return g


def edge_direction_angles(P: PolygonShape) -> List[float]:
    """phi_i: direction angle of edge i, from its first to its second endpoint"""
    out = []
    for i in range(1, P.n + 1):
        p, q = P.edge(i)
        out.append(math.atan2(q[1] - p[1], q[0] - p[0]))
    return out


def rotation_vector(w: EdgeWord) -> RotationVector:
    d = [0] * w.n
    for pos, letter in enumerate(w.letters):
        d[letter - 1] += 1 if pos % 2 == 0 else -1
    return RotationVector(d=d, parity=len(w) % 2)


def in_tau(w: EdgeWord) -> bool:
    """Even length and every d_i zero"""
    rv = rotation_vector(w)
    return rv.parity == 0 and all(x == 0 for x in rv.d)


def expected_rotation(P: PolygonShape, w: EdgeWord) -> float:
    """2 * sum d_i phi_i, the orthogonal part of eval_word for even words"""
    phis = edge_direction_angles(P)
    return 2 * sum(di * phi for di, phi in zip(rotation_vector(w).d, phis))


def enumerate_words(n: int, max_length: int, cyclic: bool = True, min_length: int = 1) -> Iterator[EdgeWord]:
    """All valid words up to max_length, shortest first, lexicographic within a length"""
    for length in range(min_length, max_length + 1):
        for letters in itertools.product(range(1, n + 1), repeat=length):
            if any(letters[k] == letters[k + 1] for k in range(length - 1)):
                continue
            if cyclic and length > 1 and letters[0] == letters[-1]:
                continue
            yield EdgeWord(letters=list(letters), n=n, cyclic=cyclic)
