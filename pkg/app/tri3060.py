"""
Saddle connections on the 30-60-90 triangle.

The unfolding of T = (pi/6, pi/3) is the plane tiled by regular hexagons of
circumradius 1, each cut into twelve copies of T. Hexagon centers are the
v1 copies, hexagon vertices the v2 copies and edge midpoints the v3 copies.
Hexagon centers form the lattice spanned by u1 = (0, sqrt 3) and
u2 = (-3/2, sqrt 3/2); LatticeVector(n, m) is n*u1 + m*u2.

Homology classes of lifted saddle connections are tracked in the reduced
coordinates (s, u, v), on which G acts by

    (s, u, v) -> (s + (1-a-c) u + (1-b-d) v, a u + b v, c u + d v).
"""
import logging
import math
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Tuple

from app.errors import ClosureError, DecorationBoundError, ParityError, PreconditionError, PrimitivityError
from app.geom import reflect_edge, thirty_sixty_ninety
from app.models import (
    CaseDecision, CaseName, CaseTag, CaseVerdict, ClosureKind, CollinearityReport, Decoration, EdgeWord,
    GMatrix, H3Class, H5Class, LatticeVector, PlanarIsometry, Point, PolygonShape,
    TriangleShape, VectorClassification,
)
from app.unfolding import closure, unfold

logger = logging.getLogger(__name__)

SQRT3 = math.sqrt(3)
U1: Point = (0.0, SQRT3)
U2: Point = (-1.5, SQRT3 / 2)

GEN_A = GMatrix(a=1, b=2, c=0, d=1)
GEN_B = GMatrix(a=1, b=0, c=2, d=1)

# parity class of (n, m) -> base vector, carrier in SL2(Z) taking (1, 0) to it, base cases
_PARITY_TABLE: Dict[Tuple[int, int], Tuple[LatticeVector, Tuple[int, int, int, int], List[CaseName]]] = {
    (1, 0): (LatticeVector(n=1, m=0), (1, 0, 0, 1), [CaseName.S1, CaseName.S2]),
    (1, 1): (LatticeVector(n=1, m=1), (1, 0, 1, 1), [CaseName.S3, CaseName.S4]),
    (0, 1): (LatticeVector(n=0, m=1), (0, -1, 1, 0), []),
}


def egcd(a: int, b: int) -> Tuple[int, int, int]:
    if b == 0:
        return (a, 1, 0)
    g, x, y = egcd(b, a % b)
    return (g, y, x - (a // b) * y)


def _mul(m1: Tuple[int, ...], m2: Tuple[int, ...]) -> Tuple[int, int, int, int]:
    a, b, c, d = m1
    e, f, g, h = m2
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def classify_vector(v: LatticeVector) -> VectorClassification:
    """Base case of a primitive lattice vector plus a G element carrying the base vector to it"""
    g0, s, t = egcd(v.n, v.m)
    if abs(g0) != 1:
        raise PrimitivityError(f"Lattice vector ({v.n}, {v.m}) is not primitive", {"gcd": abs(g0)})
    if g0 < 0:
        s, t = -s, -t
    parity = (v.n % 2, v.m % 2)
    base, carrier, cases = _PARITY_TABLE[parity]
    ca, cb, cc, cd = carrier
    carrier_inv = (cd, -cb, -cc, ca)
    # first column v, determinant n*s + m*t = 1
    m = (v.n, -t, v.m, s)
    for k in (0, 1):
        entries = _mul(_mul(m, (1, k, 0, 1)), carrier_inv)
        a, b, c, d = entries
        if a % 2 == 1 and d % 2 == 1 and b % 2 == 0 and c % 2 == 0:
            g = GMatrix(a=a, b=b, c=c, d=d)
            break
    else:
        raise PreconditionError(f"No congruence correction found for ({v.n}, {v.m})")
    logger.debug(f"classify_vector({v.n}, {v.m}) -> parity {parity}, g={g.entries()}")
    return VectorClassification(vector=v, parity=parity, cases=cases, base_vector=base, g=g)


def orbit_census(height: int) -> Dict[str, int]:
    """Primitive vectors with max(|n|, |m|) <= height, counted by parity class"""
    counts = {f"{p[0]}{p[1]}": 0 for p in _PARITY_TABLE}
    for n in range(-height, height + 1):
        for m in range(-height, height + 1):
            if math.gcd(n, m) != 1:
                continue
            result = classify_vector(LatticeVector(n=n, m=m))
            if result.g.apply(result.base_vector) != result.vector:
                raise PreconditionError(f"Carrier does not reach ({n}, {m})")
            counts[f"{result.parity[0]}{result.parity[1]}"] += 1
    return counts


def vector_of_word(w: EdgeWord, tol: Optional[float] = None) -> LatticeVector:
    """Lattice vector of the closure translation of w on the hexagon tiling"""
    strip = unfold(figure_polygon(thirty_sixty_ninety()), w)
    shut = closure(strip, tol)
    if shut.kind is not ClosureKind.TRANSLATION:
        raise ClosureError("Closure is not a translation", {"word": w.letters})
    tx, ty = shut.translation
    m = -tx / 1.5
    n = ty / SQRT3 - m / 2
    if abs(n - round(n)) > 1e-6 or abs(m - round(m)) > 1e-6:
        raise PreconditionError(f"Translation ({tx:.6f}, {ty:.6f}) is not a lattice vector",
                                {"word": w.letters})
    return LatticeVector(n=int(round(n)), m=int(round(m)))


def vector_verdicts(result: VectorClassification, max_n: int = 2) -> Dict[CaseName, CaseVerdict]:
    """Verdict each base case of the vector reaches under its carrier, over decorations with n <= max_n"""
    out: Dict[CaseName, CaseVerdict] = {}
    for case in result.cases:
        reached = {decide_case(tag, result.g).verdict for n in range(1, max_n + 1) for tag in case_tags(case, n)}
        reached.discard(CaseVerdict.NOT_NULL_HOMOLOGOUS)
        out[case] = reached.pop() if reached else CaseVerdict.NOT_NULL_HOMOLOGOUS
    return out


def reduce_h5(h: H5Class) -> H3Class:
    """(p1, p2, p3, c1, c2) -> (p1 + p2 + p3, c1, c2)"""
    return H3Class(s=h.p1 + h.p2 + h.p3, u=h.c1, v=h.c2)


def act(g: GMatrix, h: H3Class) -> H3Class:
    return H3Class(
        s=h.s + (1 - g.a - g.c) * h.u + (1 - g.b - g.d) * h.v,
        u=g.a * h.u + g.b * h.v,
        v=g.c * h.u + g.d * h.v,
    )


def pstar(h: H3Class) -> int:
    return h.s - h.u - h.v


def _check_counts(c: CaseTag) -> None:
    if c.case in (CaseName.S1, CaseName.S4):
        expected = {"v1": c.n, "v3": c.n}
    else:
        expected = {"v1": 0, "v3": 2 * c.n}
    got = {"v1": c.ccw_v1 + c.cw_v1, "v3": c.ccw_v3 + c.cw_v3}
    if got != expected:
        raise DecorationBoundError(
            f"Case {c.case.value} with n={c.n} needs {expected['v1']} strikes at v1 and "
            f"{expected['v3']} at v3",
            {"expected": expected, "got": got},
        )


def case_class(c: CaseTag) -> H3Class:
    """Exact (s, u, v) of a decorated base case; each CW circle adds 3 at v1 and -1 at v3"""
    _check_counts(c)
    if c.case is CaseName.S1:
        return H3Class(s=3 * c.cw_v1 - c.cw_v3, u=c.n, v=0)
    if c.case is CaseName.S2:
        return H3Class(s=c.ccw_v3, u=c.n, v=0)
    if c.case is CaseName.S3:
        return H3Class(s=c.n + c.ccw_v3, u=c.n, v=c.n)
    return H3Class(s=c.n + 3 * c.cw_v1 - c.cw_v3, u=c.n, v=c.n)


def case_x(c: CaseTag) -> Fraction:
    """x of the class n(x, 1, 0) or n(x + 1, 1, 1)"""
    h = case_class(c)
    x = Fraction(h.s, c.n)
    return x if c.case in (CaseName.S1, CaseName.S2) else x - 1


def decide_case(c: CaseTag, g: GMatrix) -> CaseDecision:
    """Null-homology test of g applied to the decorated base case"""
    h = act(g, case_class(c))
    value = pstar(h)
    if value != 0:
        verdict = CaseVerdict.NOT_NULL_HOMOLOGOUS
    elif c.case in (CaseName.S1, CaseName.S4):
        verdict = CaseVerdict.RAY_EXCLUDED
    else:
        verdict = CaseVerdict.ACUTE_ONLY
    return CaseDecision(tag=c, g=g, x=str(case_x(c)), pstar=value, verdict=verdict)


def case_tags(case: CaseName, n: int) -> Iterable[CaseTag]:
    """Every decoration assignment of a base case repeated n times"""
    if case in (CaseName.S1, CaseName.S4):
        for cw_v1 in range(n + 1):
            for cw_v3 in range(n + 1):
                yield CaseTag(case=case, n=n, ccw_v1=n - cw_v1, cw_v1=cw_v1, ccw_v3=n - cw_v3, cw_v3=cw_v3)
    else:
        for cw_v3 in range(2 * n + 1):
            yield CaseTag(case=case, n=n, ccw_v3=2 * n - cw_v3, cw_v3=cw_v3)


def enumerate_case_verdicts(max_n: int, matrices: Optional[List[GMatrix]] = None) -> List[CaseDecision]:
    matrices = matrices or [GMatrix.identity()]
    out = []
    for case in CaseName:
        for n in range(1, max_n + 1):
            for tag in case_tags(case, n):
                for g in matrices:
                    out.append(decide_case(tag, g))
    logger.info(f"Decided {len(out)} decorated cases up to n={max_n}")
    return out


def halfhex_pattern(k: int) -> Tuple[str, str]:
    """Half-hexagons before and after the middle strike for a + b = 2k + 1"""
    if k < 0:
        raise PreconditionError(f"k must be non-negative, got {k}")
    up, down = (k + 1) // 2, k // 2
    return ("B" * up + "A" * down, "B" * down + "A" * up)


# --- collinearity of the strikes X, Y, Z in cases s2 and s3 ---

def figure_polygon(T: TriangleShape) -> PolygonShape:
    """T placed as in the hexagon picture: v1 at the origin, v3 straight below, |e3| = 1"""
    e2 = math.sin(T.theta2) / math.sin(T.third_angle)
    v1 = (0.0, 0.0)
    v2 = (-math.sin(T.theta1), -math.cos(T.theta1))
    v3 = (0.0, -e2)
    return PolygonShape(vertices=[v1, v2, v3], edge_vertices={1: (2, 3), 2: (3, 1), 3: (1, 2)})


def _segment(case: CaseName, parameter: int) -> Tuple[Point, Point]:
    """Start X and displacement of the case's middle-strike segment"""
    if case is CaseName.S2:
        a = parameter
        v = (a * U1[0] + (1 - a) * U2[0], a * U1[1] + (1 - a) * U2[1])
        c, s = math.cos(2 * math.pi / 3), math.sin(2 * math.pi / 3)
        d = (c * v[0] - s * v[1], s * v[0] + c * v[1])
    elif case is CaseName.S3:
        d = (parameter * U1[0] + (2 - parameter) * U2[0], parameter * U1[1] + (2 - parameter) * U2[1])
    else:
        raise PreconditionError(f"Collinearity applies to cases s2 and s3, not {case.value}")
    return (0.0, -SQRT3 / 2), d


def _cross(a: Point, b: Point) -> float:
    return a[0] * b[1] - a[1] * b[0]


def _near(p: Point, q: Point) -> bool:
    return math.dist(p, q) <= 1e-7


class _Tracer:
    """Walks a straight segment through the reflection tiling of a triangle"""

    def __init__(self, F: PolygonShape):
        self.F = F
        self.reflections = {i: reflect_edge(F, i) for i in (1, 2, 3)}
        self.g = PlanarIsometry.identity()
        self.letters: List[int] = []

    def vertices(self) -> Dict[int, Point]:
        return {label: self.g.apply(self.F.vertex(label)) for label in (1, 2, 3)}

    def label_at(self, point: Point) -> int:
        for label, p in self.vertices().items():
            if _near(p, point):
                return label
        raise PreconditionError(f"No vertex of the current copy at {point}")

    def reflect(self, letter: int) -> None:
        self.g = self.g.compose(self.reflections[letter])
        self.letters.append(letter)

    def pivot(self, point: Point, d: Point, sweep: Optional[Decoration]) -> None:
        """Reflect about the vertex at point until the copy's corner contains d"""
        for _ in range(24):
            here = self.label_at(point)
            others = [(label, p) for label, p in self.vertices().items() if label != here]
            (la, pa), (lb, pb) = others
            a = (pa[0] - point[0], pa[1] - point[1])
            b = (pb[0] - point[0], pb[1] - point[1])
            orient = _cross(a, b)
            if _cross(a, d) * orient > 0 and _cross(d, b) * orient > 0:
                return
            bis = (a[0] / math.hypot(*a) + b[0] / math.hypot(*b), a[1] / math.hypot(*a) + b[1] / math.hypot(*b))
            turn_ccw = sweep is Decoration.CCW if sweep is not None else _cross(bis, d) > 0
            ccw_edge_is_a = _cross(bis, a) > 0
            # crossing edge (point, pa) is the edge opposite lb
            letter = lb if ccw_edge_is_a == turn_ccw else la
            self.reflect(letter)
        raise PreconditionError("Pivot did not reach the segment direction")

    def exit(self, start: Point, d: Point) -> Tuple[Point, int, float]:
        best = None
        for letter in (1, 2, 3):
            p, q = (self.g.apply(x) for x in self.F.edge(letter))
            e = (q[0] - p[0], q[1] - p[1])
            den = _cross(d, e)
            if abs(den) < 1e-14:
                continue
            w = (p[0] - start[0], p[1] - start[1])
            t = _cross(w, e) / den
            lam = _cross(w, d) / den
            if t > 1e-9 and -1e-9 <= lam <= 1 + 1e-9 and (best is None or t < best[0]):
                best = (t, letter, lam)
        if best is None:
            raise PreconditionError("Segment leaves the copy through no edge")
        t, letter, lam = best
        return (start[0] + t * d[0], start[1] + t * d[1]), letter, lam


def figure_word(case: CaseName, parameter: int,
                sweep: Decoration = Decoration.CCW) -> Tuple[List[int], Dict[str, Tuple[int, int]]]:
    """Edge word of the segment X -> Y -> Z on the 30-60-90 tiling, with (copy, label) of each strike"""
    X, d = _segment(case, parameter)
    Y = (X[0] + d[0] / 2, X[1] + d[1] / 2)
    Z = (X[0] + d[0], X[1] + d[1])
    tracer = _Tracer(figure_polygon(thirty_sixty_ninety()))
    strikes = {"X": (0, tracer.label_at(X))}
    tracer.pivot(X, d, None)
    point = X
    for _ in range(10000):
        point, letter, lam = tracer.exit(point, d)
        if _near(point, Z):
            strikes["Z"] = (len(tracer.letters), tracer.label_at(Z))
            return tracer.letters, strikes
        if _near(point, Y):
            strikes["Y"] = (len(tracer.letters), tracer.label_at(Y))
            tracer.pivot(Y, d, sweep)
            continue
        if lam < 1e-7 or lam > 1 - 1e-7:
            raise PreconditionError(f"Segment hits an unexpected vertex at {point}")
        tracer.reflect(letter)
    raise PreconditionError("Segment trace did not terminate")


def _offset(T: TriangleShape, word: List[int], strikes: Dict[str, Tuple[int, int]]) -> float:
    F = figure_polygon(T)
    strip = unfold(F, EdgeWord(letters=word, n=3))
    pts = {name: strip.placements[k].apply(F.vertex(label)) for name, (k, label) in strikes.items()}
    X, Y, Z = pts["X"], pts["Y"], pts["Z"]
    xz = (Z[0] - X[0], Z[1] - X[1])
    xy = (Y[0] - X[0], Y[1] - X[1])
    return _cross(xz, xy) / math.hypot(*xz)


def collinearity_probe(case: CaseName, parameter: int, T: TriangleShape, h: float = 1e-4,
                       sweep: Decoration = Decoration.CCW) -> CollinearityReport:
    """Distance of Y from XZ at T, and its response as theta1 decreases with theta2 fixed"""
    if parameter < 1 or parameter % 2 == 0:
        raise ParityError(f"Case {case.value} needs a positive odd parameter, got {parameter}",
                          {"parameter": parameter})
    word, strikes = figure_word(case, parameter, sweep)
    base = _offset(T, word, strikes)
    moved = _offset(TriangleShape(theta1=T.theta1 - h, theta2=T.theta2), word, strikes)
    logger.debug(f"{case.value}({parameter}) word length {len(word)}, offset {moved:.3e}")
    return CollinearityReport(
        case=case, parameter=parameter, sweep=sweep, word=word, y_copy=strikes["Y"][0],
        residual=abs(base), offset=moved, derivative=(moved - base) / h,
    )
