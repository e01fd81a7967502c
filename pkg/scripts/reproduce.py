#!/usr/bin/env python3
"""
Reproduction Script
Runs the desk-scale checks end to end and prints one line per check.

    python scripts/reproduce.py            # everything except V_16
    python scripts/reproduce.py --full     # include the V_16 scan
"""

import argparse
import math
import os
import sys
import time

from dotenv import load_dotenv

# Add the app directory to the path
sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

load_dotenv()

import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from app.config import settings  # noqa: E402
from app.geom import enumerate_words, thirty_sixty_ninety  # noqa: E402
from app.models import (  # noqa: E402
    CaseName, CaseVerdict, EdgeWord, GMatrix, H3Class, RayProbe, Region, TriangleShape, Verdict,
)
from app.stability import is_stable, perturbation_oracle  # noqa: E402
from app.svg import emit_svg, write_svg  # noqa: E402
from app.tiles import ray_probe, raster, save_png  # noqa: E402
from app.tri3060 import GEN_A, GEN_B, act, collinearity_probe, enumerate_case_verdicts, pstar  # noqa: E402
from app.unfolding import classify_word  # noqa: E402
from app.veech import (  # noqa: E402
    congruence_S, enumerate_cycles, generator_identities, no_lower_boundary_cycle, parse_component,
    same_cycle, scan, sj_cycle, sj_enumerate,
)

FAGNANO = EdgeWord(letters=[1, 2, 3, 1, 2, 3])


def random_triangles(rng, count):
    triangles = []
    while len(triangles) < count:
        t1, t2 = rng.uniform(0.05, math.pi / 2 - 0.05, size=2)
        if t1 + t2 < math.pi - 0.05:
            triangles.append(TriangleShape(theta1=float(t1), theta2=float(t2)))
    return triangles


def check_stability_oracle(rng):
    """Stability criterion against the perturbation oracle on short words"""
    triangles = random_triangles(rng, 50)
    agree = total = 0
    for w in enumerate_words(3, 8, cyclic=True, min_length=2):
        for T in triangles:
            if classify_word(T, w).verdict is Verdict.PERIODIC:
                total += 1
                agree += int(perturbation_oracle(T, w) == is_stable(w))
                break
    print(f"   {agree}/{total} periodic words agree")
    return agree == total


def check_generic_periodic_are_stable(rng):
    """Periodic words on generic triangles are stable"""
    exceptions = []
    for T in random_triangles(rng, 20):
        for w in enumerate_words(3, 8, cyclic=True, min_length=2):
            if classify_word(T, w).verdict is Verdict.PERIODIC and not is_stable(w):
                exceptions.append((T.theta1, T.theta2, w.text()))
    print(f"   {len(exceptions)} exceptions")
    return not exceptions


def check_fagnano_tile():
    """Fagnano tile is the acute region"""
    tile = raster(FAGNANO, Region.square(0.3, 1.2), (64, 64))
    save_png(tile, os.path.join(settings.output_dir, "fagnano_tile.png"))
    disagreements = 0
    for row in range(64):
        for col in range(64):
            t1, t2 = tile.center(row, col)
            if (tile.cells[row][col] is Verdict.PERIODIC) != (t1 + t2 > math.pi / 2):
                disagreements += 1
    print(f"   {disagreements} cells disagree with theta1 + theta2 > pi/2")
    return disagreements <= 64


def check_projection_row(rng):
    """pstar after the action is the composed row"""
    gens = [GEN_A, GEN_B, GEN_A.inverse(), GEN_B.inverse()]
    for _ in range(1000):
        g = GMatrix.identity()
        for k in rng.integers(0, 4, size=int(rng.integers(0, 10))):
            g = g @ gens[k]
        s, u, v = (int(x) for x in rng.integers(-100, 101, size=3))
        row = s + (1 - 2 * g.a - 2 * g.c) * u + (1 - 2 * g.b - 2 * g.d) * v
        if pstar(act(g, H3Class(s=s, u=u, v=v))) != row:
            print(f"   mismatch at g={g.entries()}, h={(s, u, v)}")
            return False
    return True


def check_case_verdicts():
    """Null-homologous decorated cases force x = 1"""
    decisions = enumerate_case_verdicts(3)
    frame = pd.DataFrame([{"case": d.tag.case.value, "verdict": d.verdict.value, "x": d.x} for d in decisions])
    print(frame.groupby(["case", "verdict"]).size().to_string())
    survivors = [d for d in decisions if d.verdict is not CaseVerdict.NOT_NULL_HOMOLOGOUS]
    mixed_v1 = all(d.tag.ccw_v1 and d.tag.cw_v1 for d in survivors
                   if d.tag.case in (CaseName.S1, CaseName.S4))
    return all(d.x == "1" for d in survivors) and mixed_v1


def check_collinearity(rng):
    """X, Y and Z are collinear on right triangles and Y leaves the line under perturbation"""
    worst = 0.0
    signs_ok = True
    for t1 in rng.uniform(0.1, math.pi / 2 - 0.1, size=20):
        T = TriangleShape(theta1=float(t1), theta2=math.pi / 2 - float(t1))
        for case in (CaseName.S2, CaseName.S3):
            for parameter in (3, 5, 7, 9):
                report = collinearity_probe(case, parameter, T)
                worst = max(worst, report.residual)
                signs_ok &= report.offset < 0 and abs(report.derivative) > 1e-6
    print(f"   max residual {worst:.2e}")
    return worst < 1e-9 and signs_ok


def check_veech_scan(n):
    """No short cycle on V_n survives the congruence"""
    budget = 2 * math.isqrt(2 * n) - 1
    start = time.perf_counter()
    report = scan(n, budget)
    print(f"   V_{n}: {len(report.obstructed)} obstructed, {len(report.surviving)} surviving "
          f"in {time.perf_counter() - start:.1f}s")
    return not report.surviving


def check_v4_family():
    """Constrained enumeration on V_4 is the S_j family"""
    found = enumerate_cycles(4, 18, require=[parse_component("L_-3")])
    family = sj_enumerate(4)
    matches = len(found) == 4 and all(any(same_cycle(c, s) for s in family) for c, _ in found)
    residues = [congruence_S(no_lower_boundary_cycle(j)) for j in range(4)]
    write_svg(emit_svg(sj_cycle(1)), os.path.join(settings.output_dir, "s1.svg"))
    print(f"   S_1 = {' '.join(sj_cycle(1).labels())}, no-L_-3 residues {residues}")
    return matches and congruence_S(sj_cycle(1)) == 0 and all(r % 8 == 4 for r in residues)


def check_generators():
    """Affine generator identities"""
    ok = True
    for n in (4, 8, 16, 32):
        report = generator_identities(n)
        print(f"   n={n}: max deviation {report.max_deviation:.1e}")
        ok &= report.passed and report.max_deviation < 1e-10
    return ok


def check_ray_probes():
    """Fagnano near the 30-60-90 triangle"""
    origin = thirty_sixty_ninety()
    down = ray_probe(RayProbe(origin=origin, direction=7 * math.pi / 4, delta=0.002048, samples=12), FAGNANO)
    up = ray_probe(RayProbe(origin=origin, direction=math.pi / 2, delta=0.002048, samples=12), FAGNANO)
    return down.all_excluded and not up.all_excluded


def main():
    """Run all checks"""
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--full", action="store_true", help="Include the V_16 scan")
    parser.add_argument("--seed", type=int, default=settings.seed)
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)
    os.makedirs(settings.output_dir, exist_ok=True)

    print("🚀 Reproduction Suite")
    print("=" * 40)

    checks = [
        ("stability oracle", lambda: check_stability_oracle(rng)),
        ("generic periodic words", lambda: check_generic_periodic_are_stable(rng)),
        ("Fagnano tile", check_fagnano_tile),
        ("projection row", lambda: check_projection_row(rng)),
        ("case verdicts", check_case_verdicts),
        ("collinearity", lambda: check_collinearity(rng)),
        ("V_8 scan", lambda: check_veech_scan(8)),
        ("V_4 family", check_v4_family),
        ("generator identities", check_generators),
        ("ray probes", check_ray_probes),
    ]
    if args.full:
        checks.insert(7, ("V_16 scan", lambda: check_veech_scan(16)))

    failed = []
    for i, (name, check) in enumerate(checks, 1):
        print(f"\n{i}. {name}...")
        try:
            ok = check()
        except Exception as e:
            print(f"❌ {name} raised: {e}")
            failed.append(name)
            continue
        print(f"✅ {name}" if ok else f"❌ {name}")
        if not ok:
            failed.append(name)

    if failed:
        print(f"\n⚠️  {len(failed)} check(s) failed: {', '.join(failed)}")
        sys.exit(1)
    print("\n🎉 All checks passed!")


if __name__ == "__main__":
    main()
