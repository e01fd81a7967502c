"""
Command-line entry point.

Every subcommand prints one JSON document (sorted keys) to --output or stdout.
Domain errors go to stderr as an ErrorResponse with exit status 1; usage
errors exit with status 2.
"""
import argparse
import json
import logging
import math
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from app import stability, tiles, tri3060, unfolding, veech
from app.config import settings
from app.errors import BilliardError, InputError, InvalidShapeError, InvalidWordError
from app.geom import make_triangle, parse_angle, polygon_from_angles, thirty_sixty_ninety
from app.models import (
    CaseName, CaseTag, CorridorStatus, DecoratedCycle, Decoration, EdgeWord, ErrorResponse, GMatrix,
    LatticeVector, RayProbe, Region, RunConfig, TriangleShape, Verdict,
)
from app.svg import emit_svg, write_svg

logger = logging.getLogger(__name__)


# --- input resolution ---

def load_input(raw: Optional[str]) -> Dict[str, Any]:
    """Inline JSON object or a path to one"""
    if not raw:
        return {}
    text = raw.strip()
    if not text.startswith("{"):
        try:
            with open(raw, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            raise InputError(f"Cannot read input file {raw}: {e}", {"input": raw})
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"Input is not valid JSON: {e}")
    if not isinstance(data, dict):
        raise InputError("Input JSON must be an object")
    return data


def resolve_shape(cfg: RunConfig, data: Dict[str, Any], key: str = "triangle") -> Optional[unfolding.Shape]:
    tri = cfg.options.get(key) or (data.get(key) if key == "triangle" else None)
    if tri is not None:
        if not isinstance(tri, (list, tuple)) or len(tri) != 2:
            raise InvalidShapeError("A triangle takes two angles, theta1 and theta2", {key: str(tri)})
        return make_triangle(tri[0], tri[1])
    if key == "triangle" and "angles" in data:
        angles = data["angles"]
        if not isinstance(angles, list) or len(angles) < 3:
            raise InvalidShapeError("\"angles\" must be a list of at least three angles", {"angles": str(angles)})
        if "n" in data and _n_of(None, data) != len(angles):
            raise InvalidShapeError(f"n={data['n']} but {len(angles)} angles were given")
        if len(angles) == 3:
            shape = make_triangle(angles[0], angles[1])
            third = parse_angle(angles[2]).radians
            if abs(third - shape.third_angle) > 1e-9:
                raise InvalidShapeError("Triangle angles must sum to pi", {"angles": angles})
            return shape
        return polygon_from_angles([parse_angle(a).radians for a in angles])
    return None


def resolve_word(cfg: RunConfig, data: Dict[str, Any], n: int) -> EdgeWord:
    raw = cfg.options.get("word")
    if not raw and "word" in data:
        raw = data["word"]
        if not isinstance(raw, (list, str)) or (isinstance(raw, list) and not all(_is_int(x) for x in raw)):
            raise InvalidWordError("\"word\" must be a list of edge labels", {"word": str(raw)})
    try:
        if isinstance(raw, list):
            return EdgeWord(letters=raw, n=n)
        if raw:
            return EdgeWord.parse(raw, n=n)
    except ValidationError as e:
        raise InvalidWordError(f"Invalid word: {e.errors()[0]['msg']}", {"word": str(raw)})
    except ValueError as e:
        raise InvalidWordError(f"Invalid word: {e}", {"word": str(raw)})
    raise InputError("A word is required (--word or \"word\" in the input)")


def _is_int(x: Any) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _n_of(shape: Optional[unfolding.Shape], data: Dict[str, Any]) -> int:
    if shape is not None:
        return unfolding.as_polygon(shape).n
    n = data.get("n", 3)
    if not _is_int(n) or n < 3:
        raise InputError("\"n\" must be an integer >= 3", {"n": str(n)})
    return n


# --- subcommands ---

def cmd_stability(cfg: RunConfig, data: Dict[str, Any]) -> Dict[str, Any]:
    shape = resolve_shape(cfg, data)
    w = resolve_word(cfg, data, _n_of(shape, data))
    triangle = shape if isinstance(shape, TriangleShape) else None
    out = stability.stability_report(w, triangle).model_dump(mode="json")
    if shape is not None:
        verdict = unfolding.classify_word(shape, w, cfg.tol).verdict
        out["verdict"] = verdict.value
        if triangle is not None and verdict is Verdict.PERIODIC:
            out["numerically_stable"] = stability.perturbation_oracle(triangle, w, tol=cfg.tol)
    samples = cfg.options.get("samples") or 0
    if samples:
        rng = np.random.default_rng(cfg.seed)
        hits = 0
        for t1, t2 in rng.uniform(0, math.pi / 2, size=(samples, 2)):
            if tiles.verdict_at(float(t1), float(t2), w, cfg.tol) is Verdict.PERIODIC:
                hits += 1
        out["sampled"] = {"periodic": hits, "total": samples, "seed": cfg.seed}
    return out


def cmd_unfold(cfg: RunConfig, data: Dict[str, Any]) -> Dict[str, Any]:
    shape = resolve_shape(cfg, data)
    if shape is None:
        raise InputError("unfold needs a shape (--triangle or \"triangle\"/\"angles\" in the input)")
    w = resolve_word(cfg, data, _n_of(shape, data))
    strip = unfolding.unfold(shape, w)
    result = unfolding.classify_word(shape, w, cfg.tol)
    band = result.corridor
    out: Dict[str, Any] = {
        "word": w.letters,
        "class": result.verdict.value,
        "corridor_width": band.width if band is not None and band.status is CorridorStatus.OPEN else 0.0,
        "tight_vertices": [t.model_dump(mode="json") for t in band.tight_vertices] if band is not None else [],
        "closure": result.closure.value,
        "reason": result.reason,
    }
    if band is not None:
        out["corridor"] = band.model_dump(mode="json")
    decorated = None
    reference = resolve_shape(cfg, data, key="reference")
    if reference is not None and result.verdict is Verdict.SADDLE:
        decorated = stability.decorate(shape, w, reference, cfg.tol)
        out["decorations"] = [d.value for d in decorated.decorations]
        out["strikes"] = [s.model_dump(mode="json") for s in decorated.strikes]
        if isinstance(shape, TriangleShape) and len(w) % 2 == 0:
            out["arises_from_stable"] = stability.arises_from_stable(decorated)
    if cfg.options.get("svg"):
        write_svg(emit_svg(strip, band=result.corridor, decorated=decorated), cfg.options["svg"])
    return out


def _region(values: Optional[Sequence[float]]) -> Region:
    if not values:
        return Region.square(0.3, 1.2)
    if len(values) == 2:
        return Region.square(values[0], values[1])
    if len(values) == 4:
        return Region(theta1_min=values[0], theta1_max=values[1], theta2_min=values[2], theta2_max=values[3])
    raise InputError("--region takes 2 values (square) or 4 (theta1 min max, theta2 min max)")


def cmd_tile(cfg: RunConfig, data: Dict[str, Any]) -> Dict[str, Any]:
    w = resolve_word(cfg, data, 3)
    res = cfg.options.get("resolution") or [64, 64]
    if len(res) == 1:
        res = [res[0], res[0]]
    tile = tiles.raster(w, _region(cfg.options.get("region")), (res[0], res[1]), cfg.tol, cfg.workers,
                        refine=bool(cfg.options.get("refine")))
    if cfg.options.get("svg"):
        write_svg(emit_svg(tile), cfg.options["svg"])
    if cfg.options.get("png"):
        tiles.save_png(tile, cfg.options["png"])
    return {"word": w.letters, "region": tile.region.model_dump(), "resolution": list(tile.resolution),
            "counts": tiles.raster_summary(tile)}


def cmd_probe(cfg: RunConfig, data: Dict[str, Any]) -> Dict[str, Any]:
    shape = resolve_shape(cfg, data)
    if not isinstance(shape, TriangleShape):
        raise InputError("probe needs a triangle origin")
    w = resolve_word(cfg, data, 3)
    probe = RayProbe(
        origin=shape,
        direction=parse_angle(cfg.options.get("direction") or "7/4 pi").radians,
        epsilon=parse_angle(cfg.options.get("epsilon") or 0.0).radians,
        delta=cfg.options.get("delta") or settings.ray_delta,
        samples=cfg.options.get("samples") or settings.ray_samples,
    )
    result = tiles.ray_probe(probe, w, cfg.tol)
    return {
        "all_excluded": result.all_excluded,
        "hits": result.hits,
        "distances": result.distances,
        "verdicts": [v.value for v in result.verdicts],
    }


def _classify_lattice(v: LatticeVector) -> Dict[str, Any]:
    result = tri3060.classify_vector(v)
    verdicts = tri3060.vector_verdicts(result)
    return {
        "vector": [v.n, v.m],
        "parity": list(result.parity),
        "base_vector": [result.base_vector.n, result.base_vector.m],
        "case": [c.value for c in result.cases],
        "g": result.g.entries(),
        "verdict": {c.value: verdict.value for c, verdict in verdicts.items()},
    }


def cmd_classify3060(cfg: RunConfig, data: Dict[str, Any]) -> Dict[str, Any]:
    opts = cfg.options
    vector = opts.get("vector") or data.get("vector")
    if vector is not None:
        if not isinstance(vector, list) or len(vector) != 2 or not all(_is_int(x) for x in vector):
            raise InputError("A lattice vector is two integers N M", {"vector": str(vector)})
        return _classify_lattice(LatticeVector(n=vector[0], m=vector[1]))
    if opts.get("census"):
        return {"height": opts["census"], "parity_classes": tri3060.orbit_census(opts["census"])}
    if opts.get("collinear"):
        shape = resolve_shape(cfg, data) or thirty_sixty_ninety()
        if not isinstance(shape, TriangleShape):
            raise InputError("collinearity probe needs a triangle")
        sweep = Decoration(opts.get("sweep") or "ccw")
        report = tri3060.collinearity_probe(CaseName(opts["collinear"]), opts.get("parameter") or 3, shape,
                                            sweep=sweep)
        return report.model_dump(mode="json")
    if opts.get("case"):
        tag = CaseTag(case=CaseName(opts["case"]), n=opts.get("repeat") or 1,
                      ccw_v1=opts.get("ccw_v1") or 0, cw_v1=opts.get("cw_v1") or 0,
                      ccw_v3=opts.get("ccw_v3") or 0, cw_v3=opts.get("cw_v3") or 0)
        g = GMatrix(**dict(zip("abcd", opts["g"]))) if opts.get("g") else GMatrix.identity()
        decision = tri3060.decide_case(tag, g)
        return {
            "case": tag.case.value,
            "g": g.entries(),
            "verdict": decision.verdict.value,
            "x": decision.x,
            "pstar": decision.pstar,
            "tag": tag.model_dump(mode="json"),
        }
    if opts.get("word") or "word" in data:
        w = resolve_word(cfg, data, 3)
        return {"word": w.letters, **_classify_lattice(tri3060.vector_of_word(w, cfg.tol))}
    raise InputError("classify3060 needs one of --vector, --word, --census, --case or --collinear")


def cmd_veechscan(cfg: RunConfig, data: Dict[str, Any]) -> Dict[str, Any]:
    opts = cfg.options
    n = opts.get("n") or 8
    report = veech.scan(
        n, opts.get("max_components") or 2 * math.isqrt(2 * n) - 1,
        require=[veech.parse_component(c) for c in opts.get("require") or []],
        forbid=[veech.parse_component(c) for c in opts.get("forbid") or []],
        workers=cfg.workers,
    )
    if opts.get("svg"):
        chosen = (report.surviving or report.obstructed)[:1]
        if chosen:
            cycle = DecoratedCycle(
                n=n, components=[veech.parse_component(x) for x in chosen[0].labels],
                decorations=chosen[0].decorations)
            write_svg(emit_svg(cycle), opts["svg"])
    return report.model_dump(mode="json")


def cmd_sj(cfg: RunConfig, data: Dict[str, Any]) -> Dict[str, Any]:
    opts = cfg.options
    j_max = opts.get("j_max") if opts.get("j_max") is not None else 2
    cycles = []
    for c in veech.sj_enumerate(j_max):
        report = veech.cycle_report(c, "pair")
        cycles.append({"labels": report.labels, "decorations": [d.value for d in report.decorations],
                       "residue": report.residue, "homology": report.homology.model_dump(mode="json")})
    out: Dict[str, Any] = {"j_max": j_max, "cycles": cycles,
                           "s0": [c.label() for c in veech.sj_path(0)]}
    if opts.get("check") and j_max >= 1:
        found = veech.enumerate_cycles(4, 2 + 4 * j_max, require=[veech.parse_component("L_-3")],
                                       workers=cfg.workers)
        expected = veech.sj_enumerate(j_max)
        out["matches_enumeration"] = len(found) == j_max and all(
            any(veech.same_cycle(c, e) or veech.same_cycle(veech.mirror(c), e) for e in expected)
            for c, _ in found)
    if opts.get("svg") and j_max >= 1:
        write_svg(emit_svg(veech.sj_cycle(1)), opts["svg"])
    return out


COMMANDS: Dict[str, Callable[[RunConfig, Dict[str, Any]], Dict[str, Any]]] = {
    "stability": cmd_stability,
    "unfold": cmd_unfold,
    "tile": cmd_tile,
    "probe": cmd_probe,
    "classify3060": cmd_classify3060,
    "veechscan": cmd_veechscan,
    "sj": cmd_sj,
}


# --- argument parsing ---

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="Input JSON file or inline JSON object")
    common.add_argument("--output", help="Write JSON here instead of stdout")
    common.add_argument("--tol", type=float, help="Numerical tolerance (default BILLIARD_TOL)")
    common.add_argument("--workers", type=int, help="Worker processes")
    common.add_argument("--seed", type=int, help="Seed for randomized checks")

    parser = argparse.ArgumentParser(prog="billiard", description="Stability of periodic billiard trajectories")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("stability", parents=[common], help="Stability, winding vector and angle relation of a word")
    p.add_argument("--word")
    p.add_argument("--triangle", nargs=2, metavar=("THETA1", "THETA2"))
    p.add_argument("--samples", type=int, help="Random triangles to classify the word on")

    p = sub.add_parser("unfold", parents=[common], help="Unfold a word and classify it")
    p.add_argument("--word")
    p.add_argument("--triangle", nargs=2, metavar=("THETA1", "THETA2"))
    p.add_argument("--reference", nargs=2, metavar=("THETA1", "THETA2"),
                   help="Nearby triangle on which the saddle word is periodic, for decorations")
    p.add_argument("--svg", help="Write the unfolding SVG here")

    p = sub.add_parser("tile", parents=[common], help="Rasterize an orbit tile")
    p.add_argument("--word")
    p.add_argument("--region", nargs="+", type=float)
    p.add_argument("--resolution", nargs="+", type=int)
    p.add_argument("--refine", action="store_true")
    p.add_argument("--svg")
    p.add_argument("--png")

    p = sub.add_parser("probe", parents=[common], help="Classify a word along a ray in parameter space")
    p.add_argument("--word")
    p.add_argument("--triangle", nargs=2, metavar=("THETA1", "THETA2"))
    p.add_argument("--direction", help="Ray angle, e.g. '7/4 pi'")
    p.add_argument("--epsilon", help="Rotation of the ray angle")
    p.add_argument("--delta", type=float)
    p.add_argument("--samples", type=int)

    p = sub.add_parser("classify3060", parents=[common], help="Saddle connections on the 30-60-90 triangle")
    p.add_argument("--vector", nargs=2, type=int, metavar=("N", "M"))
    p.add_argument("--word", help="Word whose closure translation gives the lattice vector")
    p.add_argument("--census", type=int, metavar="HEIGHT")
    p.add_argument("--case", choices=[c.value for c in CaseName])
    p.add_argument("--repeat", type=int)
    p.add_argument("--ccw-v1", dest="ccw_v1", type=int)
    p.add_argument("--cw-v1", dest="cw_v1", type=int)
    p.add_argument("--ccw-v3", dest="ccw_v3", type=int)
    p.add_argument("--cw-v3", dest="cw_v3", type=int)
    p.add_argument("--g", nargs=4, type=int, metavar=("A", "B", "C", "D"))
    p.add_argument("--collinear", choices=[CaseName.S2.value, CaseName.S3.value])
    p.add_argument("--parameter", type=int)
    p.add_argument("--sweep", choices=[d.value for d in Decoration])
    p.add_argument("--triangle", nargs=2, metavar=("THETA1", "THETA2"))

    p = sub.add_parser("veechscan", parents=[common], help="Congruence scan of decorated cycles on V_n")
    p.add_argument("--n", type=int)
    p.add_argument("--max-components", dest="max_components", type=int)
    p.add_argument("--require", action="append", metavar="COMPONENT")
    p.add_argument("--forbid", action="append", metavar="COMPONENT")
    p.add_argument("--svg")

    p = sub.add_parser("sj", parents=[common], help="The S_j family on V_4")
    p.add_argument("--j-max", dest="j_max", type=int)
    p.add_argument("--check", action="store_true", help="Compare with the constrained enumeration")
    p.add_argument("--svg")
    return parser


def to_config(args: argparse.Namespace) -> RunConfig:
    common = {"subcommand", "input", "output", "tol", "workers", "seed"}
    return RunConfig(
        subcommand=args.subcommand,
        input=args.input,
        output=args.output,
        tol=args.tol if args.tol is not None else settings.tol,
        workers=args.workers if args.workers is not None else settings.workers,
        seed=args.seed if args.seed is not None else settings.seed,
        options={k: v for k, v in vars(args).items() if k not in common},
    )


def _emit_error(response: ErrorResponse) -> None:
    sys.stderr.write(json.dumps(response.model_dump(mode="json"), sort_keys=True) + "\n")


def dispatch(cfg: RunConfig) -> int:
    """Run one subcommand; 0 on success, 1 on a domain error"""
    try:
        payload = COMMANDS[cfg.subcommand](cfg, load_input(cfg.input))
        text = json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
        if cfg.output:
            with open(cfg.output, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except BilliardError as e:
        logger.error(f"Failed to run {cfg.subcommand}: {e.message}")
        _emit_error(e.to_response())
        return 1
    except ValidationError as e:
        logger.error(f"Failed to run {cfg.subcommand}: {e}")
        _emit_error(InputError(str(e.errors()[0].get("msg", e)), {"errors": len(e.errors())}).to_response())
        return 1
    except OSError as e:
        logger.error(f"Failed to write output of {cfg.subcommand}: {e}")
        _emit_error(InputError(f"Cannot write {e.filename}: {e.strerror}",
                               {"path": str(e.filename)}).to_response())
        return 1
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = to_config(args)
    except ValidationError as e:
        _emit_error(InputError(str(e.errors()[0].get("msg", e))).to_response())
        return 1
    return dispatch(cfg)
