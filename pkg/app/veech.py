"""
Horizontal saddle connections on the unfolding U(V_n) of the Veech triangle, n = 2^m.

Components of the horizontal saddle connections are L_k and R_k for odd k with
|k| <= n-1; the two boundary components L_{n-1} and L_{1-n} are shared by both
sides and are stored as L. A decorated cycle walks from component to component
around semicircles, and its homology class projects onto alpha_1 and alpha_-1.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from app.config import settings
from app.errors import DeferredCaseError, LabelRangeError, PreconditionError
from app.models import (
    Component, ComponentSide, CycleReport, DecoratedCycle, Decoration, GammaBetaClass,
    GeneratorReport, VeechScanReport,
)

logger = logging.getLogger(__name__)

# (side, k) pairs and (side, k, decoration) steps keep the search free of model overhead
Raw = Tuple[str, int]
Step = Tuple[str, int, str]


def check_n(n: int) -> None:
    if n < 4 or n & (n - 1):
        raise PreconditionError(f"n must be a power of two >= 4, got {n}", {"n": n})


def canonical(c: Component, n: int) -> Component:
    if c.k % 2 == 0 or abs(c.k) > n - 1:
        raise LabelRangeError(f"Component {c.label()} is not valid for n={n}", {"k": c.k, "n": n})
    if abs(c.k) == n - 1 and c.side is ComponentSide.R:
        return Component(side=ComponentSide.L, k=c.k)
    return c


def parse_component(text: str) -> Component:
    """'L_3', 'R-1' or 'L3'"""
    t = text.strip().replace("_", "")
    if not t or t[0].upper() not in ("L", "R"):
        raise LabelRangeError(f"Cannot parse component '{text}'", {"value": text})
    try:
        k = int(t[1:])
    except ValueError:
        raise LabelRangeError(f"Cannot parse component '{text}'", {"value": text})
    if k % 2 == 0:
        raise LabelRangeError(f"Component index must be odd, got {k}", {"value": text})
    return Component(side=ComponentSide(t[0].upper()), k=k)


def _canon_raw(side: str, k: int, n: int) -> Raw:
    return ("L", k) if abs(k) == n - 1 else (side, k)


def _step(side: str, k: int, direction: str, n: int) -> Raw:
    cw = direction == Decoration.CW.value
    if k == n - 1:
        return _canon_raw("L" if cw else "R", n - 3, n)
    if k == 1 - n:
        return _canon_raw("R" if cw else "L", 3 - n, n)
    if side == "L":
        return _canon_raw("R", k + 2 if cw else k - 2, n)
    return _canon_raw("L", k - 2 if cw else k + 2, n)


def transition(c: Component, direction: Decoration, n: int) -> Component:
    """Component reached from c around a semicircle in the given direction"""
    check_n(n)
    c = canonical(c, n)
    side, k = _step(c.side.value, c.k, direction.value, n)
    return Component(side=ComponentSide(side), k=k)


def components(n: int) -> List[Component]:
    """Every canonical component of U(V_n)"""
    out = []
    for k in range(1 - n, n, 2):
        out.append(Component(side=ComponentSide.L, k=k))
        if abs(k) != n - 1:
            out.append(Component(side=ComponentSide.R, k=k))
    return out


def is_valid_cycle(cycle: DecoratedCycle) -> bool:
    n = cycle.n
    m = len(cycle.components)
    for i, (c, d) in enumerate(zip(cycle.components, cycle.decorations)):
        if transition(c, d, n) != canonical(cycle.components[(i + 1) % m], n):
            return False
    return True


def mirror(cycle: DecoratedCycle) -> DecoratedCycle:
    """L <-> R swap with every semicircle reversed"""
    swapped = []
    for c in cycle.components:
        side = ComponentSide.R if c.side is ComponentSide.L else ComponentSide.L
        swapped.append(canonical(Component(side=side, k=c.k), cycle.n))
    return DecoratedCycle(n=cycle.n, components=swapped, decorations=[d.flipped() for d in cycle.decorations])


# --- raw cycle helpers ---

def _flip(d: str) -> str:
    return Decoration.CW.value if d == Decoration.CCW.value else Decoration.CCW.value


def _mirror_raw(steps: Sequence[Step], n: int) -> Tuple[Step, ...]:
    return tuple(_canon_raw("R" if s == "L" else "L", k, n) + (_flip(d),) for s, k, d in steps)


def _reverse_mirror_raw(steps: Sequence[Step], n: int) -> Tuple[Step, ...]:
    comps = [(s, k) for s, k, _ in steps]
    decs = [d for _, _, d in steps]
    m = len(steps)
    # the reversed walk leaves comps[i+1] for comps[i] around the mirrored semicircle decs[i]
    out = []
    for i in range(m - 1, -1, -1):
        s, k = comps[(i + 1) % m]
        out.append(_canon_raw("R" if s == "L" else "L", k, n) + (_flip(decs[i]),))
    return tuple(out)


def _rotations(steps: Sequence[Step]) -> Iterable[Tuple[Step, ...]]:
    steps = tuple(steps)
    for i in range(len(steps)):
        yield steps[i:] + steps[:i]


def _canonical_rotation(steps: Sequence[Step]) -> Tuple[Step, ...]:
    return min(_rotations(steps))


def _self_mirrored_raw(steps: Sequence[Step], n: int) -> bool:
    return _reverse_mirror_raw(steps, n) in set(_rotations(steps))


def _search(n: int, max_components: int, prefix: Tuple[Step, ...], require: Set[Raw],
            forbid: Set[Raw]) -> List[Tuple[Step, ...]]:
    """Depth-first completion of a partial cycle that starts at L_{n-1}"""
    start: Raw = ("L", n - 1)
    boundary = {("L", n - 1), ("L", 1 - n)}
    found: List[Tuple[Step, ...]] = []

    def close(path: List[Raw], decs: List[str]) -> None:
        steps = tuple(c + (d,) for c, d in zip(path, decs))
        if require <= set(path) and _self_mirrored_raw(steps, n):
            found.append(steps)

    def advance(path: List[Raw], decs: List[str], hits: int) -> None:
        """path has one more component than decs; try both semicircles out of its last one"""
        for d in (Decoration.CW.value, Decoration.CCW.value):
            decs.append(d)
            extend(path, decs, hits)
            decs.pop()

    def extend(path: List[Raw], decs: List[str], hits: int) -> None:
        nxt = _step(*path[-1], decs[-1], n)
        if nxt == start and hits == 2:
            close(path, decs)
            return
        if len(path) >= max_components or nxt in forbid:
            return
        hits += 1 if nxt in boundary else 0
        if hits > 2:
            return
        path.append(nxt)
        advance(path, decs, hits)
        path.pop()

    path = [(s, k) for s, k, _ in prefix] or [start]
    decs = [d for _, _, d in prefix]
    hits = sum(1 for c in path if c in boundary)
    if hits > 2 or len(path) > max_components or any(c in forbid for c in path):
        return found
    if decs:
        extend(path, decs, hits)
    else:
        advance(path, decs, hits)
    return found


def _search_job(args: Tuple[int, int, Tuple[Step, ...], Set[Raw], Set[Raw]]) -> List[Tuple[Step, ...]]:
    return _search(*args)


def _prefixes(n: int, depth: int) -> List[Tuple[Step, ...]]:
    out: List[Tuple[Step, ...]] = [()]
    for _ in range(depth):
        grown = []
        for p in out:
            here = _step(*p[-1][:2], p[-1][2], n) if p else ("L", n - 1)
            for d in (Decoration.CW.value, Decoration.CCW.value):
                grown.append(p + (here + (d,),))
        out = grown
    return out


def _to_cycle(steps: Sequence[Step], n: int) -> DecoratedCycle:
    return DecoratedCycle(
        n=n,
        components=[Component(side=ComponentSide(s), k=k) for s, k, _ in steps],
        decorations=[Decoration(d) for _, _, d in steps],
    )


def _to_raw(cycle: DecoratedCycle) -> Tuple[Step, ...]:
    return tuple((c.side.value, c.k, d.value) for c, d in zip(cycle.components, cycle.decorations))


def same_cycle(a: DecoratedCycle, b: DecoratedCycle) -> bool:
    """Equal up to rotation"""
    return a.n == b.n and _canonical_rotation(_to_raw(a)) == _canonical_rotation(_to_raw(b))


def reverse_mirror(cycle: DecoratedCycle) -> DecoratedCycle:
    """The cycle traversed backwards under the L <-> R swap, every semicircle reversed"""
    return _to_cycle(_reverse_mirror_raw(_to_raw(cycle), cycle.n), cycle.n)


def is_self_mirrored(cycle: DecoratedCycle) -> bool:
    """True iff reverse_mirror carries the cycle to a rotation of itself"""
    return _self_mirrored_raw(_to_raw(cycle), cycle.n)


def enumerate_cycles(n: int, max_components: int, require: Optional[Iterable[Component]] = None,
                     forbid: Optional[Iterable[Component]] = None,
                     workers: Optional[int] = None) -> List[Tuple[DecoratedCycle, str]]:
    """
    Closed decorated cycles through L_{n-1} that meet the boundary components exactly twice
    and are carried to themselves by the reversed mirror.

    Cycles are returned once per rotation class, and a mirror pair is returned once with
    flag 'pair'; cycles equal to their own mirror carry 'self'.
    """
    check_n(n)
    workers = settings.workers if workers is None else workers
    req = {(c.side.value, c.k) for c in (canonical(c, n) for c in (require or []))}
    forb = {(c.side.value, c.k) for c in (canonical(c, n) for c in (forbid or []))}
    if ("L", n - 1) in forb:
        return []

    if workers > 1 and max_components > 4:
        jobs = [(n, max_components, p, req, forb) for p in _prefixes(n, 3)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = [c for chunk in pool.map(_search_job, jobs) for c in chunk]
    else:
        raw = _search(n, max_components, (), req, forb)

    seen: Dict[Tuple[Step, ...], str] = {}
    for steps in raw:
        own = _canonical_rotation(steps)
        other = _canonical_rotation(_mirror_raw(steps, n))
        key = min(own, other)
        seen[key] = "self" if own == other else "pair"
    out = [(_to_cycle(key, n), flag) for key, flag in sorted(seen.items(), key=lambda kv: (len(kv[0]), kv[0]))]
    logger.info(f"Enumerated {len(out)} cycle classes on V_{n} with at most {max_components} components")
    return out


# --- homology ---

def multiplicities(cycle: DecoratedCycle) -> Dict[int, int]:
    """m_k: occurrences of L_k; R_k occurs equally often in a mirror-symmetric cycle"""
    m: Dict[int, int] = {}
    for c in cycle.components:
        if c.side is not ComponentSide.L:
            continue
        m[c.k] = m.get(c.k, 0) + 1
    return m


def homology_of_cycle(cycle: DecoratedCycle) -> GammaBetaClass:
    """sum_{k>=3} m_k g_{k-1} + m_1 (g_0 - b_1 - b_-1) + sum_{k<=-1} m_k g_{k+1}"""
    gamma: Dict[int, int] = {}
    beta = 0
    for k, count in multiplicities(cycle).items():
        if k == 1:
            gamma[0] = gamma.get(0, 0) + count
            beta -= count
            continue
        target = k - 1 if k >= 3 else k + 1
        gamma[target] = gamma.get(target, 0) + count
    gamma = {k: v for k, v in sorted(gamma.items()) if v}
    return GammaBetaClass(gamma=gamma, beta1=beta, beta_neg1=beta)


def pstar_projection(h: GammaBetaClass, n: int) -> Tuple[int, int]:
    """(p*_1, p*_-1) of a gamma/beta class"""
    p1 = 2 * n * h.beta1
    pm1 = 2 * n * h.beta_neg1
    for i, coeff in h.gamma.items():
        if i < 0:
            a, b = i + n, -(i + n)
        elif i == 0:
            a, b = n, n
        else:
            a, b = i - n, -(i - n)
        p1 += coeff * a
        pm1 += coeff * b
    return p1, pm1


def congruence_S(cycle: DecoratedCycle) -> int:
    """S mod 2n, up to an odd unit; nonzero means the cycle cannot come from a stable trajectory"""
    n = cycle.n
    total = 0
    for k, count in multiplicities(cycle).items():
        if k >= 3:
            total += count * (n - k + 1)
        elif k <= -3:
            total += count * (n - k - 1)
    return total % (2 * n)


def residue_from_projection(h: GammaBetaClass, n: int) -> int:
    """-(p*_1 - p*_-1)/2 mod 2n; agrees with congruence_S when the group element is the identity"""
    p1, pm1 = pstar_projection(h, n)
    return (-(p1 - pm1) // 2) % (2 * n)


def max_S(x: int, n: int) -> int:
    """Largest S over cycles on V_n with x components, m_{n-1} = 2 and every other m_k at most 1"""
    check_n(n)
    if x < 2 or x % 2:
        raise PreconditionError(f"Component budget must be even and >= 2, got {x}", {"x": x})
    if x > n:
        raise PreconditionError(f"Component budget {x} exceeds n={n}", {"x": x, "n": n})
    return 2 + (x // 2 - 1) * (x // 2)


def min_strikes(n: int) -> int:
    check_n(n)
    if n == 4:
        raise DeferredCaseError("V_4 is settled by the S_j family, not by the strike bound", {"n": n})
    return 2 * math.isqrt(2 * n)


def s0_check(k: int, n: int, decoration: Decoration = Decoration.CCW) -> int:
    """(p*_1 + p*_-1) of k copies of the base saddle connection, all semicircles one way"""
    if k < 1:
        raise PreconditionError(f"Repetitions must be >= 1, got {k}", {"k": k})
    return decoration.sign * 2 * k * n


# --- the S_j family on V_4 ---

def sj_path(j: int, negative: bool = False) -> List[Component]:
    """L_3 (L_1 R_-1)^j L_-3 (L_-1 R_1)^j, or its mirror"""
    if j < 0:
        raise PreconditionError(f"j must be non-negative, got {j}", {"j": j})
    a, b = ("R", "L") if negative else ("L", "R")
    raw = [("L", 3)] + [(a, 1), (b, -1)] * j + [("L", -3)] + [(a, -1), (b, 1)] * j
    return [Component(side=ComponentSide(s), k=k) for s, k in raw]


def _decorate_path(comps: List[Component], n: int) -> List[Decoration]:
    decs = []
    for i, c in enumerate(comps):
        target = canonical(comps[(i + 1) % len(comps)], n)
        for d in (Decoration.CW, Decoration.CCW):
            if transition(c, d, n) == target:
                decs.append(d)
                break
        else:
            raise PreconditionError(f"No semicircle joins {c.label()} to {target.label()}")
    return decs


def sj_cycle(j: int, negative: bool = False) -> DecoratedCycle:
    if j < 1:
        raise PreconditionError("S_0 = L_3 L_-3 admits no transition; S_j needs j >= 1", {"j": j})
    comps = sj_path(j, negative)
    return DecoratedCycle(n=4, components=comps, decorations=_decorate_path(comps, 4))


def sj_enumerate(j_max: int) -> List[DecoratedCycle]:
    """S_1, -S_1, ..., S_{j_max}, -S_{j_max}"""
    out = []
    for j in range(1, j_max + 1):
        out.extend([sj_cycle(j), sj_cycle(j, negative=True)])
    return out


def no_lower_boundary_cycle(j: int) -> DecoratedCycle:
    """L_3 (L_1 R_-1)^j L_1 L_3 (R_1 L_-1)^j R_1 on V_4"""
    if j < 0:
        raise PreconditionError(f"j must be non-negative, got {j}", {"j": j})
    raw = [("L", 3)] + [("L", 1), ("R", -1)] * j + [("L", 1), ("L", 3)] + [("R", 1), ("L", -1)] * j + [("R", 1)]
    comps = [Component(side=ComponentSide(s), k=k) for s, k in raw]
    return DecoratedCycle(n=4, components=comps, decorations=_decorate_path(comps, 4))


# --- affine generators ---

# extended precision; (tau_o tau_e)^(n/2+1) amplifies rounding by roughly cot(pi/n)^4
_PI = np.longdouble("3.14159265358979323846264338327950288")


def _rotation(angle: np.longdouble) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]], dtype=np.longdouble)


def _shear(t: np.longdouble, upper: bool = True) -> np.ndarray:
    if upper:
        return np.array([[1, t], [0, 1]], dtype=np.longdouble)
    return np.array([[1, 0], [t, 1]], dtype=np.longdouble)


def generator_identities(n: int) -> GeneratorReport:
    """Numerical check of the relations among D tau_e, D tau_o and c_n"""
    if n % 4:
        raise PreconditionError(f"Generator relations need 4 | n, got {n}", {"n": n})
    mp = np.linalg.matrix_power
    theta = _PI / n
    cot = 1 / np.tan(theta)
    c, c_inv = _rotation(theta), _rotation(-theta)
    tau_e, tau_e_inv = _shear(2 * cot), _shear(-2 * cot)
    tau_o, tau_o_inv = c @ tau_e @ c_inv, c @ tau_e_inv @ c_inv
    lower = _shear(2 * cot, upper=False)
    quarter, quarter_inv = mp(c, n // 2), mp(c_inv, n // 2)

    deviations = {
        "c_n^2": float(np.abs(c @ c - mp(tau_o @ tau_e, n // 2 + 1)).max()),
        "alpha": float(np.abs(lower - quarter_inv @ tau_e_inv @ quarter).max()),
        "alpha_prime": float(np.abs(c @ lower @ c_inv - quarter_inv @ tau_o_inv @ quarter).max()),
    }
    worst = max(deviations.values())
    if worst >= 1e-10:
        logger.error(f"Failed to verify generator relations for n={n}: max deviation {worst:.3e}")
    return GeneratorReport(n=n, deviations=deviations, max_deviation=worst, passed=worst < 1e-10)


# --- scan ---

def cycle_report(cycle: DecoratedCycle, flag: str) -> CycleReport:
    residue = congruence_S(cycle)
    return CycleReport(labels=cycle.labels(), decorations=cycle.decorations, residue=residue,
                       obstructed=residue != 0, homology=homology_of_cycle(cycle), mirror=flag)


def scan(n: int, max_components: int, require: Optional[Iterable[Component]] = None,
         forbid: Optional[Iterable[Component]] = None, workers: Optional[int] = None) -> VeechScanReport:
    """Enumerate admissible cycles and split them by the congruence obstruction"""
    reports = [cycle_report(c, flag) for c, flag in enumerate_cycles(n, max_components, require, forbid, workers)]
    surviving = [r for r in reports if not r.obstructed]
    obstructed = [r for r in reports if r.obstructed]
    logger.info(f"V_{n} scan: {len(surviving)} surviving, {len(obstructed)} obstructed")
    return VeechScanReport(n=n, max_components=max_components, surviving=surviving, obstructed=obstructed)
