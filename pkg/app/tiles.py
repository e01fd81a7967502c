"""
Orbit tiles over the (theta1, theta2) parameter square, and ray probes near a shape.
"""
import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
from matplotlib.colors import ListedColormap  # noqa: E402
from matplotlib.patches import Patch  # noqa: E402

from app.config import settings  # noqa: E402
from app.errors import InvalidWordError, PreconditionError, RegionError  # noqa: E402
from app.models import EdgeWord, RayProbe, RayProbeResult, Region, TileRaster, TriangleShape, Verdict  # noqa: E402
from app.unfolding import classify_word  # noqa: E402

logger = logging.getLogger(__name__)

VERDICT_ORDER = [Verdict.PERIODIC, Verdict.SADDLE, Verdict.INFEASIBLE]
VERDICT_COLORS = {
    Verdict.PERIODIC: "#2b8cbe",
    Verdict.SADDLE: "#f03b20",
    Verdict.INFEASIBLE: "#f0f0f0",
}

_Job = Tuple[float, float, Tuple[int, ...], int, float]


def verdict_at(theta1: float, theta2: float, w: EdgeWord, tol: Optional[float] = None) -> Verdict:
    """Verdict of w on the triangle (theta1, theta2); points outside the square are infeasible"""
    tol = settings.tol if tol is None else tol
    if not (0 < theta1 < math.pi / 2 and 0 < theta2 < math.pi / 2) or theta1 + theta2 >= math.pi:
        return Verdict.INFEASIBLE
    return classify_word(TriangleShape(theta1=theta1, theta2=theta2), w, tol).verdict


def _cell_job(job: _Job) -> Verdict:
    theta1, theta2, letters, n, tol = job
    return verdict_at(theta1, theta2, EdgeWord(letters=list(letters), n=n), tol)


def _check_region(region: Region) -> None:
    if region.theta1_max <= region.theta1_min or region.theta2_max <= region.theta2_min:
        raise RegionError("Region has zero or negative extent", region.model_dump())
    corners = (region.theta1_min, region.theta1_max, region.theta2_min, region.theta2_max)
    if min(corners) < 0 or max(corners) > math.pi / 2:
        raise RegionError("Region leaves the parameter square (0, pi/2)^2", region.model_dump())


def _evaluate(points: Sequence[Tuple[float, float]], w: EdgeWord, tol: float, workers: int) -> List[Verdict]:
    jobs = [(t1, t2, tuple(w.letters), w.n, tol) for t1, t2 in points]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_cell_job, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [_cell_job(job) for job in jobs]


def _refine(tile: TileRaster, tol: float, workers: int) -> List[List[Verdict]]:
    """Re-decide cells that disagree with a 4-neighbour by majority over their quarter-centers"""
    cols, rows = tile.resolution
    cells = tile.cells
    r = tile.region
    dx = (r.theta1_max - r.theta1_min) / cols / 4
    dy = (r.theta2_max - r.theta2_min) / rows / 4
    border = []
    for row in range(rows):
        for col in range(cols):
            near = [(row + a, col + b) for a, b in ((1, 0), (-1, 0), (0, 1), (0, -1))]
            if any(0 <= i < rows and 0 <= j < cols and cells[i][j] is not cells[row][col] for i, j in near):
                border.append((row, col))
    points = []
    for row, col in border:
        t1, t2 = tile.center(row, col)
        points.extend([(t1 - dx, t2 - dy), (t1 + dx, t2 - dy), (t1 - dx, t2 + dy), (t1 + dx, t2 + dy)])
    verdicts = _evaluate(points, tile.word, tol, workers)
    refined = [list(row) for row in cells]
    for idx, (row, col) in enumerate(border):
        votes = Counter(verdicts[4 * idx:4 * idx + 4]).most_common()
        if len(votes) == 1 or votes[0][1] > votes[1][1]:
            refined[row][col] = votes[0][0]
    logger.debug(f"Refined {len(border)} border cells")
    return refined


def raster(w: EdgeWord, region: Region, resolution: Tuple[int, int], tol: Optional[float] = None,
           workers: Optional[int] = None, refine: bool = False) -> TileRaster:
    """Cell-center verdicts of w over region; resolution is (columns, rows)"""
    tol = settings.tol if tol is None else tol
    workers = settings.workers if workers is None else workers
    if not w.letters:
        raise InvalidWordError("Cannot rasterize the empty word")
    _check_region(region)
    cols, rows = resolution
    if cols < 1 or rows < 1:
        raise RegionError(f"Resolution must be positive, got {cols}x{rows}", {"resolution": [cols, rows]})

    blank = TileRaster(word=w, region=region, resolution=(cols, rows), cells=[])
    points = [blank.center(row, col) for row in range(rows) for col in range(cols)]
    try:
        flat = _evaluate(points, w, tol, workers)
    except Exception as e:
        logger.error(f"Failed to rasterize {w.text()}: {e}")
        raise
    cells = [flat[row * cols:(row + 1) * cols] for row in range(rows)]
    tile = TileRaster(word=w, region=region, resolution=(cols, rows), cells=cells)
    if refine:
        tile = TileRaster(word=w, region=region, resolution=(cols, rows), cells=_refine(tile, tol, workers))
    logger.info(f"Raster of {w.text()} at {cols}x{rows} done: {tile.counts()}")
    return tile


def raster_frame(tile: TileRaster) -> pd.DataFrame:
    """One row per cell: row, col, theta1, theta2, verdict"""
    records = []
    for row, line in enumerate(tile.cells):
        for col, verdict in enumerate(line):
            t1, t2 = tile.center(row, col)
            records.append({"row": row, "col": col, "theta1": t1, "theta2": t2, "verdict": verdict.value})
    return pd.DataFrame.from_records(records, columns=["row", "col", "theta1", "theta2", "verdict"])


def raster_summary(tile: TileRaster) -> Dict[str, int]:
    counts = raster_frame(tile)["verdict"].value_counts()
    counts = counts.reindex([v.value for v in VERDICT_ORDER], fill_value=0)
    return {k: int(v) for k, v in counts.items()}


def save_png(tile: TileRaster, path: str) -> str:
    codes = np.array([[VERDICT_ORDER.index(v) for v in row] for row in tile.cells])
    cmap = ListedColormap([VERDICT_COLORS[v] for v in VERDICT_ORDER])
    r = tile.region
    fig, ax = plt.subplots(figsize=(6, 6))
    try:
        ax.imshow(codes, origin="lower", cmap=cmap, vmin=0, vmax=len(VERDICT_ORDER) - 1,
                  extent=(r.theta1_min, r.theta1_max, r.theta2_min, r.theta2_max), interpolation="nearest")
        ax.set_xlabel("theta1")
        ax.set_ylabel("theta2")
        ax.set_title(f"orbit tile of {tile.word.text()}")
        ax.legend(handles=[Patch(color=VERDICT_COLORS[v], label=v.value) for v in VERDICT_ORDER],
                  loc="upper right")
        fig.savefig(path, dpi=100)
    finally:
        plt.close(fig)
    logger.info(f"Saved raster PNG to {path}")
    return path


def ray_probe(probe: RayProbe, w: EdgeWord, tol: Optional[float] = None) -> RayProbeResult:
    """Verdicts at distances delta * 2^-i along the ray; the word must be a saddle at the origin"""
    tol = settings.tol if tol is None else tol
    origin = probe.origin
    base = classify_word(origin, w, tol).verdict
    if base is not Verdict.SADDLE:
        raise PreconditionError(f"Word is {base.value} at the probe origin, not a saddle",
                                {"word": w.letters, "verdict": base.value})
    phi = probe.direction + probe.epsilon
    distances = probe.distances()
    verdicts = [verdict_at(origin.theta1 + t * math.cos(phi), origin.theta2 + t * math.sin(phi), w, tol)
                for t in distances]
    hits = [t for t, v in zip(distances, verdicts) if v is Verdict.PERIODIC]
    logger.debug(f"Ray probe at angle {phi:.4f}: {len(hits)} of {len(distances)} samples periodic")
    return RayProbeResult(probe=probe, distances=distances, verdicts=verdicts, all_excluded=not hits, hits=hits)
