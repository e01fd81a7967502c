import math
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

Point = Tuple[float, float]


class Verdict(str, Enum):
    PERIODIC = "periodic"
    SADDLE = "saddle"
    INFEASIBLE = "infeasible"

class ClosureKind(str, Enum):
    TRANSLATION = "translation"
    NONTRIVIAL = "nontrivial"

class IsometryKind(str, Enum):
    ROTATION = "rotation"
    REFLECTION = "reflection"

class CorridorStatus(str, Enum):
    OPEN = "open"
    DEGENERATE = "degenerate"
    EMPTY = "empty"

class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"

class Decoration(str, Enum):
    CW = "cw"
    CCW = "ccw"

    @property
    def sign(self) -> int:
        return 1 if self is Decoration.CCW else -1

    def flipped(self) -> "Decoration":
        return Decoration.CW if self is Decoration.CCW else Decoration.CCW

class CaseName(str, Enum):
    S1 = "s1"
    S2 = "s2"
    S3 = "s3"
    S4 = "s4"

class CaseVerdict(str, Enum):
    RAY_EXCLUDED = "ray-excluded"
    ACUTE_ONLY = "acute-only"
    NOT_NULL_HOMOLOGOUS = "not-null-homologous"


class ComponentSide(str, Enum):
    L = "L"
    R = "R"


# ---------------------------------------------------------------------------
# geom-core
# ---------------------------------------------------------------------------

class Angle(BaseModel):
    """Angle in radians, with the exact multiple of pi when one was supplied"""
    radians: float = Field(..., description="Angle in radians")
    pi_multiple: Optional[str] = Field(None, description="Exact rational multiple of pi, e.g. '1/6'")

    class Config:
        frozen = True

    @property
    def fraction(self) -> Optional[Fraction]:
        return Fraction(self.pi_multiple) if self.pi_multiple is not None else None


class PlanarIsometry(BaseModel):
    """Orthogonal part plus translation; x -> M x + t"""
    kind: IsometryKind = Field(IsometryKind.ROTATION, description="Rotation or reflection")
    angle: float = Field(0.0, description="Rotation angle, or axis angle of the reflection")
    translation: Point = Field((0.0, 0.0), description="Planar displacement t")

    class Config:
        frozen = True

    @classmethod
    def identity(cls) -> "PlanarIsometry":
        return cls()

    @classmethod
    def reflection_across(cls, p: Point, q: Point) -> "PlanarIsometry":
        """Reflection fixing the line through p and q pointwise"""
        phi = math.atan2(q[1] - p[1], q[0] - p[0])
        linear = cls(kind=IsometryKind.REFLECTION, angle=phi)
        mx, my = linear.apply_linear(p)
        return cls(kind=IsometryKind.REFLECTION, angle=linear.angle,
                   translation=(p[0] - mx, p[1] - my))

    def apply_linear(self, p: Point) -> Point:
        if self.kind is IsometryKind.ROTATION:
            c, s = math.cos(self.angle), math.sin(self.angle)
            return (c * p[0] - s * p[1], s * p[0] + c * p[1])
        c, s = math.cos(2 * self.angle), math.sin(2 * self.angle)
        return (c * p[0] + s * p[1], s * p[0] - c * p[1])

    def apply(self, p: Point) -> Point:
        x, y = self.apply_linear(p)
        return (x + self.translation[0], y + self.translation[1])

    def matrix(self) -> np.ndarray:
        """Orthogonal part as a 2x2 array"""
        if self.kind is IsometryKind.ROTATION:
            c, s = math.cos(self.angle), math.sin(self.angle)
            return np.array([[c, -s], [s, c]])
        c, s = math.cos(2 * self.angle), math.sin(2 * self.angle)
        return np.array([[c, s], [s, -c]])

    def compose(self, other: "PlanarIsometry") -> "PlanarIsometry":
        """self o other (other acts first)"""
        rot, ref = IsometryKind.ROTATION, IsometryKind.REFLECTION
        a, b = self.angle, other.angle
        if self.kind is rot and other.kind is rot:
            kind, angle = rot, math.remainder(a + b, 2 * math.pi)
        elif self.kind is rot:
            kind, angle = ref, math.remainder(b + a / 2, math.pi)
        elif other.kind is rot:
            kind, angle = ref, math.remainder(a - b / 2, math.pi)
        else:
            kind, angle = rot, math.remainder(2 * a - 2 * b, 2 * math.pi)
        tx, ty = self.apply(other.translation)
        return PlanarIsometry(kind=kind, angle=angle, translation=(tx, ty))

    def inverse(self) -> "PlanarIsometry":
        if self.kind is IsometryKind.ROTATION:
            linear = PlanarIsometry(angle=-self.angle)
        else:
            linear = PlanarIsometry(kind=IsometryKind.REFLECTION, angle=self.angle)
        tx, ty = linear.apply_linear(self.translation)
        return PlanarIsometry(kind=linear.kind, angle=linear.angle, translation=(-tx, -ty))

    def orthogonal_is_identity(self, tol: float) -> bool:
        return self.kind is IsometryKind.ROTATION and abs(math.remainder(self.angle, 2 * math.pi)) <= tol

    def is_identity(self, tol: float) -> bool:
        return self.orthogonal_is_identity(tol) and math.hypot(*self.translation) <= tol


class PolygonShape(BaseModel):
    """Labeled polygon; vertices counterclockwise, labels 1..n"""
    vertices: List[Point] = Field(..., description="Vertex coordinates in label order")
    edge_vertices: Optional[Dict[int, Tuple[int, int]]] = Field(
        None, description="Edge label -> endpoint vertex labels; default edge i joins i and i+1")

    class Config:
        frozen = True

    @field_validator("vertices")
    @classmethod
    def check_vertices(cls, v: List[Point]) -> List[Point]:
        if len(v) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        for k in range(len(v)):
            p, q = v[k], v[(k + 1) % len(v)]
            if math.hypot(q[0] - p[0], q[1] - p[1]) == 0:
                raise ValueError(f"consecutive vertices {k + 1} and {(k + 1) % len(v) + 1} coincide")
        area = sum(v[k][0] * v[(k + 1) % len(v)][1] - v[(k + 1) % len(v)][0] * v[k][1]
                   for k in range(len(v)))
        if area <= 0:
            raise ValueError("vertices must be in counterclockwise order")
        if not _is_simple(v):
            raise ValueError("polygon is self-intersecting")
        return v

    @model_validator(mode="after")
    def check_edges(self) -> "PolygonShape":
        if self.edge_vertices is not None:
            n = len(self.vertices)
            if sorted(self.edge_vertices) != list(range(1, n + 1)):
                raise ValueError("edge_vertices must label every edge 1..n")
            for i, (a, b) in self.edge_vertices.items():
                if not (1 <= a <= n and 1 <= b <= n) or (a - b) % n not in (1, n - 1):
                    raise ValueError(f"edge {i} does not join adjacent vertices")
        return self

    @property
    def n(self) -> int:
        return len(self.vertices)

    def vertex(self, label: int) -> Point:
        return self.vertices[label - 1]

    def edge_endpoints(self, i: int) -> Tuple[int, int]:
        """Vertex labels of edge i"""
        if self.edge_vertices is not None:
            return self.edge_vertices[i]
        return (i, i % self.n + 1)

    def edge(self, i: int) -> Tuple[Point, Point]:
        a, b = self.edge_endpoints(i)
        return (self.vertex(a), self.vertex(b))

    def shared_vertex(self, i: int, j: int) -> Optional[int]:
        """Vertex label where edges i and j meet, if they are adjacent"""
        common = set(self.edge_endpoints(i)) & set(self.edge_endpoints(j))
        return common.pop() if len(common) == 1 else None

    def interior_angle(self, label: int) -> float:
        k = label - 1
        p = self.vertices[k]
        a = self.vertices[k - 1]
        b = self.vertices[(k + 1) % self.n]
        ang = math.atan2(a[1] - p[1], a[0] - p[0]) - math.atan2(b[1] - p[1], b[0] - p[0])
        return ang % (2 * math.pi)


def _is_simple(v: List[Point]) -> bool:
    n = len(v)

    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    for i in range(n):
        p1, p2 = v[i], v[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or j == (i + 1) % n:
                continue
            q1, q2 = v[j], v[(j + 1) % n]
            d1, d2 = orient(p1, p2, q1), orient(p1, p2, q2)
            d3, d4 = orient(q1, q2, p1), orient(q1, q2, p2)
            if d1 * d2 < 0 and d3 * d4 < 0:
                return False
    return True


class TriangleShape(BaseModel):
    """Triangle up to similarity; theta1, theta2 are the angles at v1, v2"""
    theta1: float = Field(..., gt=0, lt=math.pi / 2, description="Angle at v1 in radians")
    theta2: float = Field(..., gt=0, lt=math.pi / 2, description="Angle at v2 in radians")
    theta1_pi: Optional[str] = Field(None, description="Exact multiple of pi for theta1")
    theta2_pi: Optional[str] = Field(None, description="Exact multiple of pi for theta2")

    class Config:
        frozen = True

    @model_validator(mode="after")
    def check_angle_sum(self) -> "TriangleShape":
        if self.theta1 + self.theta2 >= math.pi:
            raise ValueError("third angle must be positive")
        return self

    @classmethod
    def from_pi_multiples(cls, p1: Fraction, p2: Fraction) -> "TriangleShape":
        p1, p2 = Fraction(p1), Fraction(p2)
        return cls(theta1=float(p1) * math.pi, theta2=float(p2) * math.pi,
                   theta1_pi=str(p1), theta2_pi=str(p2))

    @property
    def third_angle(self) -> float:
        return math.pi - self.theta1 - self.theta2

    @property
    def third_angle_pi(self) -> Optional[Fraction]:
        if self.theta1_pi is None or self.theta2_pi is None:
            return None
        return 1 - Fraction(self.theta1_pi) - Fraction(self.theta2_pi)

    def angles(self) -> List[float]:
        """Interior angles at v1, v2, v3"""
        return [self.theta1, self.theta2, self.third_angle]

    def is_right(self, tol: float) -> bool:
        return abs(self.third_angle - math.pi / 2) <= tol

    def is_acute(self, tol: float) -> bool:
        return self.third_angle < math.pi / 2 - tol

    def vertices(self) -> List[Point]:
        """v1, v2, v3 with v2 at the origin and v3 at (1, 0)"""
        r = math.sin(self.third_angle) / math.sin(self.theta1)
        v1 = (r * math.cos(self.theta2), r * math.sin(self.theta2))
        return [v1, (0.0, 0.0), (1.0, 0.0)]

    def to_polygon(self) -> PolygonShape:
        """Edge i is opposite vertex i"""
        return PolygonShape(vertices=self.vertices(),
                            edge_vertices={1: (2, 3), 2: (3, 1), 3: (1, 2)})


class EdgeWord(BaseModel):
    """Sequence of edge labels; the first letter is the first reflection"""
    letters: List[int] = Field(default_factory=list, description="Edge labels, 1-based")
    n: int = Field(3, ge=3, description="Number of polygon edges")
    cyclic: bool = Field(False, description="Word is read cyclically")

    class Config:
        frozen = True

    @model_validator(mode="after")
    def check_letters(self) -> "EdgeWord":
        for k, letter in enumerate(self.letters):
            if not 1 <= letter <= self.n:
                raise ValueError(f"letter {letter} at position {k + 1} is outside 1..{self.n}")
            if k > 0 and self.letters[k - 1] == letter:
                raise ValueError(f"letter {letter} repeats at position {k + 1}")
        if self.cyclic and len(self.letters) > 1 and self.letters[0] == self.letters[-1]:
            raise ValueError("cyclic word must not start and end with the same letter")
        return self

    @classmethod
    def parse(cls, text: str, n: int = 3, cyclic: bool = False) -> "EdgeWord":
        letters = [int(tok) for tok in text.replace(" ", "").split(",") if tok]
        return cls(letters=letters, n=n, cyclic=cyclic)

    def __len__(self) -> int:
        return len(self.letters)

    def concat(self, other: "EdgeWord") -> "EdgeWord":
        return EdgeWord(letters=self.letters + other.letters, n=self.n)

    def rotate(self, k: int) -> "EdgeWord":
        if not self.letters:
            return self
        k %= len(self.letters)
        return EdgeWord(letters=self.letters[k:] + self.letters[:k], n=self.n, cyclic=self.cyclic)

    def text(self) -> str:
        return ",".join(str(x) for x in self.letters)


class RotationVector(BaseModel):
    """Odd-position minus even-position letter counts"""
    d: List[int] = Field(..., description="d_i for edge labels 1..n")
    parity: int = Field(..., ge=0, le=1, description="Word length mod 2")

    class Config:
        frozen = True


# ---------------------------------------------------------------------------
# unfolding
# ---------------------------------------------------------------------------

class UnfoldingStrip(BaseModel):
    """Copies of the base polygon along a word"""
    base: PolygonShape
    word: EdgeWord
    placements: List[PlanarIsometry] = Field(..., description="placements[k] places copy k")
    crossed_edges: List[Tuple[Point, Point]] = Field(..., description="Edge shared by copies k and k+1")

    class Config:
        frozen = True

    def copy_vertices(self, k: int) -> List[Point]:
        g = self.placements[k]
        return [g.apply(p) for p in self.base.vertices]


class Closure(BaseModel):
    """Final placement of a strip, tagged by its orthogonal part"""
    kind: ClosureKind
    isometry: PlanarIsometry
    translation: Optional[Point] = Field(None, description="Displacement when kind is translation")


class TightVertex(BaseModel):
    """Vertex copy touching a corridor bound"""
    copy_index: int = Field(..., ge=0)
    vertex: int = Field(..., ge=1, description="Vertex label in the base polygon")
    side: Side
    point: Point

    class Config:
        frozen = True


class Corridor(BaseModel):
    """Band of parallel lines crossing every edge of a strip in order"""
    direction: Point = Field(..., description="Unit vector along the closure translation")
    lower: float = Field(..., description="Lowest admissible offset along the left normal")
    upper: float = Field(..., description="Highest admissible offset along the left normal")
    status: CorridorStatus
    tight_vertices: List[TightVertex] = Field(default_factory=list)

    class Config:
        frozen = True

    @property
    def normal(self) -> Point:
        return (-self.direction[1], self.direction[0])

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midline_offset(self) -> float:
        return (self.lower + self.upper) / 2


class Classification(BaseModel):
    """Verdict of a word on a polygon"""
    verdict: Verdict
    closure: ClosureKind
    corridor: Optional[Corridor] = None
    reason: str = ""

    @property
    def corridor_width(self) -> Optional[float]:
        return self.corridor.width if self.corridor is not None else None


# ---------------------------------------------------------------------------
# stability
# ---------------------------------------------------------------------------

class WindingVector(BaseModel):
    """Winding numbers around the punctures v1..vn, normalized to minimum 0"""
    w: List[int]

    class Config:
        frozen = True

    @property
    def is_zero(self) -> bool:
        return all(x == 0 for x in self.w)


class Strike(BaseModel):
    """Vertex hit by a saddle connection"""
    copy_index: int = Field(..., ge=0)
    vertex: int = Field(..., ge=1)
    reference: Decoration = Field(..., description="Side on which the nearby periodic trajectory passed")

    class Config:
        frozen = True


class DecoratedPath(BaseModel):
    """Saddle connection with a semicircle around each strike"""
    word: EdgeWord
    strikes: List[Strike] = Field(default_factory=list)
    decorations: List[Decoration] = Field(default_factory=list)

    class Config:
        frozen = True

    @model_validator(mode="after")
    def check_lengths(self) -> "DecoratedPath":
        if len(self.decorations) != len(self.strikes):
            raise ValueError("one decoration per strike is required")
        return self

    def with_decorations(self, decorations: List[Decoration]) -> "DecoratedPath":
        return DecoratedPath(word=self.word, strikes=self.strikes, decorations=list(decorations))

    def flipped(self) -> "DecoratedPath":
        return self.with_decorations([d.flipped() for d in self.decorations])


class IntegerRelation(BaseModel):
    """sum_v c_v * alpha_v = 0 mod 2 pi"""
    coefficients: List[int] = Field(..., description="c_v for vertex labels 1..n")

    class Config:
        frozen = True


class StabilityReport(BaseModel):
    stable: bool
    winding: Optional[List[int]] = None
    relation: Optional[List[int]] = None


# ---------------------------------------------------------------------------
# tri3060
# ---------------------------------------------------------------------------

class LatticeVector(BaseModel):
    """Coordinates in the basis u1=(0, sqrt 3), u2=(-3/2, sqrt 3/2)"""
    n: int
    m: int

    class Config:
        frozen = True

    def embedded(self) -> Point:
        return (-1.5 * self.m, math.sqrt(3) * (self.n + self.m / 2))


class GMatrix(BaseModel):
    """Element of the level-2 congruence subgroup of SL2(Z)"""
    a: int
    b: int
    c: int
    d: int

    class Config:
        frozen = True

    @model_validator(mode="after")
    def check_membership(self) -> "GMatrix":
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError("determinant must be 1")
        if self.a % 2 != 1 or self.d % 2 != 1 or self.b % 2 != 0 or self.c % 2 != 0:
            raise ValueError("matrix is not congruent to the identity mod 2")
        return self

    @classmethod
    def identity(cls) -> "GMatrix":
        return cls(a=1, b=0, c=0, d=1)

    def __matmul__(self, other: "GMatrix") -> "GMatrix":
        return GMatrix(a=self.a * other.a + self.b * other.c, b=self.a * other.b + self.b * other.d,
                       c=self.c * other.a + self.d * other.c, d=self.c * other.b + self.d * other.d)

    def inverse(self) -> "GMatrix":
        return GMatrix(a=self.d, b=-self.b, c=-self.c, d=self.a)

    def apply(self, v: LatticeVector) -> LatticeVector:
        return LatticeVector(n=self.a * v.n + self.b * v.m, m=self.c * v.n + self.d * v.m)

    def entries(self) -> List[int]:
        return [self.a, self.b, self.c, self.d]


class H5Class(BaseModel):
    """Coordinates (p1, p2, p3, c1, c2) after eliminating p4"""
    p1: int
    p2: int
    p3: int
    c1: int
    c2: int

    class Config:
        frozen = True


class H3Class(BaseModel):
    """Reduced coordinates (s, u, v) with s = p1 + p2 + p3"""
    s: int
    u: int
    v: int

    class Config:
        frozen = True

    def as_tuple(self) -> Tuple[int, int, int]:
        return (self.s, self.u, self.v)


class CaseTag(BaseModel):
    """A base saddle path repeated n times with its semicircle counts"""
    case: CaseName
    n: int = Field(1, ge=1, description="Repetitions")
    ccw_v1: int = Field(0, ge=0)
    cw_v1: int = Field(0, ge=0)
    ccw_v3: int = Field(0, ge=0)
    cw_v3: int = Field(0, ge=0)

    class Config:
        frozen = True


class VectorClassification(BaseModel):
    vector: LatticeVector
    parity: Tuple[int, int]
    cases: List[CaseName] = Field(..., description="Base cases in this parity class; empty for v2-only")
    base_vector: LatticeVector
    g: GMatrix


class CaseDecision(BaseModel):
    tag: CaseTag
    g: GMatrix
    x: str = Field(..., description="Exact x as a fraction string")
    pstar: int
    verdict: CaseVerdict


class CollinearityReport(BaseModel):
    """Position of the middle strike Y relative to the line XZ"""
    case: CaseName
    parameter: int
    sweep: Decoration
    word: List[int]
    y_copy: int
    residual: float = Field(..., description="|offset| at the given triangle")
    offset: float = Field(..., description="Signed offset at theta1 - h; positive means left of X->Z")
    derivative: float = Field(..., description="Finite-difference derivative per radian of decrease")


# ---------------------------------------------------------------------------
# veech
# ---------------------------------------------------------------------------

class Component(BaseModel):
    """Horizontal saddle connection component L_k or R_k"""
    side: ComponentSide
    k: int

    class Config:
        frozen = True

    @field_validator("k")
    @classmethod
    def check_odd(cls, k: int) -> int:
        if k % 2 == 0:
            raise ValueError("component index must be odd")
        return k

    def label(self) -> str:
        return f"{self.side.value}_{self.k}"


class DecoratedCycle(BaseModel):
    """Closed sequence of components; decorations[i] joins components[i] to components[i+1]"""
    n: int
    components: List[Component]
    decorations: List[Decoration]

    class Config:
        frozen = True

    @model_validator(mode="after")
    def check_lengths(self) -> "DecoratedCycle":
        if len(self.components) != len(self.decorations):
            raise ValueError("one decoration per transition is required")
        return self

    def labels(self) -> List[str]:
        return [c.label() for c in self.components]


class GammaBetaClass(BaseModel):
    """Class in the gamma/beta basis of the horizontal cylinders"""
    gamma: Dict[int, int] = Field(default_factory=dict)
    beta1: int = 0
    beta_neg1: int = 0

    class Config:
        frozen = True

    def coefficient(self, k: int) -> int:
        return self.gamma.get(k, 0)


class GeneratorReport(BaseModel):
    n: int
    deviations: Dict[str, float]
    max_deviation: float
    passed: bool


class CycleReport(BaseModel):
    labels: List[str]
    decorations: List[Decoration]
    residue: int = Field(..., description="S mod 2n, up to an odd unit")
    obstructed: bool
    homology: GammaBetaClass
    mirror: str = Field(..., description="'self' when the mirror is a rotation of the cycle, else 'pair'")


class VeechScanReport(BaseModel):
    n: int
    max_components: int
    surviving: List[CycleReport]
    obstructed: List[CycleReport]


# ---------------------------------------------------------------------------
# tiles
# ---------------------------------------------------------------------------

class Region(BaseModel):
    """Rectangle in the (theta1, theta2) parameter square"""
    theta1_min: float
    theta1_max: float
    theta2_min: float
    theta2_max: float

    class Config:
        frozen = True

    @classmethod
    def square(cls, lo: float, hi: float) -> "Region":
        return cls(theta1_min=lo, theta1_max=hi, theta2_min=lo, theta2_max=hi)


class TileRaster(BaseModel):
    """Cell-center verdicts; cells[row][col] with rows along theta2"""
    word: EdgeWord
    region: Region
    resolution: Tuple[int, int] = Field(..., description="(columns along theta1, rows along theta2)")
    cells: List[List[Verdict]]

    def center(self, row: int, col: int) -> Point:
        cols, rows = self.resolution
        r = self.region
        t1 = r.theta1_min + (col + 0.5) * (r.theta1_max - r.theta1_min) / cols
        t2 = r.theta2_min + (row + 0.5) * (r.theta2_max - r.theta2_min) / rows
        return (t1, t2)

    def counts(self) -> Dict[str, int]:
        out = {v.value: 0 for v in Verdict}
        for row in self.cells:
            for cell in row:
                out[cell.value] += 1
        return out


class RayProbe(BaseModel):
    """Geometric samples along a ray in parameter space"""
    origin: TriangleShape
    direction: float = Field(..., description="Direction angle in the (theta1, theta2) plane")
    epsilon: float = Field(0.0, description="Rotation applied to the direction")
    delta: float = Field(..., gt=0)
    samples: int = Field(..., ge=2)

    def distances(self) -> List[float]:
        return [self.delta * 2.0 ** (-i) for i in range(self.samples)]


class RayProbeResult(BaseModel):
    probe: RayProbe
    distances: List[float]
    verdicts: List[Verdict]
    all_excluded: bool
    hits: List[float] = Field(default_factory=list, description="Distances where the word is periodic")


# ---------------------------------------------------------------------------
# cli
# ---------------------------------------------------------------------------

class RunConfig(BaseModel):
    """Resolved command-line invocation"""
    subcommand: str
    input: Optional[str] = Field(None, description="Input path or inline JSON")
    output: Optional[str] = None
    tol: float = Field(..., gt=0)
    workers: int = Field(..., ge=1)
    seed: int = 0
    options: Dict[str, Any] = Field(default_factory=dict)


class ErrorResponse(BaseModel):
    """Error response model"""
    error: str
    message: str
    details: Optional[Dict[str, Any]] = None
