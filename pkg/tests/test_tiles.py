import math

import pytest

from app.errors import InvalidWordError, PreconditionError, RegionError
from app.geom import equilateral, thirty_sixty_ninety
from app.models import EdgeWord, RayProbe, Region, Verdict
from app.tiles import ray_probe, raster, raster_frame, raster_summary, save_png, verdict_at

FAGNANO = EdgeWord(letters=[1, 2, 3, 1, 2, 3])
REGION = Region.square(0.3, 1.2)


@pytest.fixture(scope="module")
def fagnano_tile():
    return raster(FAGNANO, REGION, (16, 16), workers=1)


class TestVerdictAt:
    def test_outside_square(self):
        """Test that points outside the parameter square are infeasible"""
        assert verdict_at(-0.1, 0.5, FAGNANO) == Verdict.INFEASIBLE
        assert verdict_at(0.5, math.pi / 2, FAGNANO) == Verdict.INFEASIBLE

    def test_inside(self):
        """Test an acute and an obtuse point"""
        assert verdict_at(1.0, 1.0, FAGNANO) == Verdict.PERIODIC
        assert verdict_at(0.4, 0.4, FAGNANO) == Verdict.INFEASIBLE


class TestRaster:
    def test_fagnano_tile_is_the_acute_region(self, fagnano_tile):
        """Test that Fagnano is periodic above the anti-diagonal and not below"""
        margin = 0.9 / 16
        for row in range(16):
            for col in range(16):
                t1, t2 = fagnano_tile.center(row, col)
                if t1 + t2 > math.pi / 2 + margin:
                    assert fagnano_tile.cells[row][col] == Verdict.PERIODIC
                elif t1 + t2 < math.pi / 2 - margin:
                    assert fagnano_tile.cells[row][col] != Verdict.PERIODIC

    def test_deterministic(self, fagnano_tile):
        """Test that rasters are reproducible"""
        assert raster(FAGNANO, REGION, (16, 16), workers=1).cells == fagnano_tile.cells

    def test_summary(self, fagnano_tile):
        """Test the verdict counts"""
        summary = raster_summary(fagnano_tile)

        assert list(summary) == ["periodic", "saddle", "infeasible"]
        assert sum(summary.values()) == 256
        assert summary == fagnano_tile.counts()

    def test_frame(self, fagnano_tile):
        """Test the tabular view of a raster"""
        frame = raster_frame(fagnano_tile)

        assert len(frame) == 256
        assert list(frame.columns) == ["row", "col", "theta1", "theta2", "verdict"]

    def test_refine_keeps_interior(self, fagnano_tile):
        """Test that refinement only touches cells on the tile boundary"""
        refined = raster(FAGNANO, REGION, (16, 16), workers=1, refine=True)
        margin = 2 * 0.9 / 16
        for row in range(16):
            for col in range(16):
                t1, t2 = fagnano_tile.center(row, col)
                if abs(t1 + t2 - math.pi / 2) > margin:
                    assert refined.cells[row][col] == fagnano_tile.cells[row][col]

    def test_empty_word(self):
        """Test that the empty word has no tile"""
        with pytest.raises(InvalidWordError):
            raster(EdgeWord(), REGION, (4, 4))

    def test_degenerate_region(self):
        """Test that regions need positive extent inside the square"""
        with pytest.raises(RegionError):
            raster(FAGNANO, Region.square(0.5, 0.5), (4, 4))
        with pytest.raises(RegionError):
            raster(FAGNANO, Region.square(0.5, 2.0), (4, 4))
        with pytest.raises(RegionError):
            raster(FAGNANO, REGION, (0, 4))

    @pytest.mark.slow
    def test_refinement_is_consistent(self):
        """Test that a 32 cell agrees with its four 64 sub-cells whenever they agree"""
        coarse = raster(FAGNANO, REGION, (32, 32), workers=1)
        fine = raster(FAGNANO, REGION, (64, 64), workers=1)
        uniform = 0

        for row in range(32):
            for col in range(32):
                subcells = {fine.cells[2 * row + i][2 * col + j] for i in (0, 1) for j in (0, 1)}
                if len(subcells) == 1:
                    uniform += 1
                    assert coarse.cells[row][col] in subcells
                    assert coarse.center(row, col) == pytest.approx(
                        fine.center(2 * row, 2 * col), abs=0.9 / 64)

        assert uniform > 32 * 32 - 2 * 64

    def test_save_png(self, fagnano_tile, tmp_path):
        """Test writing the raster image"""
        path = save_png(fagnano_tile, str(tmp_path / "tile.png"))

        with open(path, "rb") as fh:
            assert fh.read(8) == b"\x89PNG\r\n\x1a\n"


class TestRayProbe:
    def test_along_right_triangles(self):
        """Test that Fagnano stays a saddle along the right-triangle line"""
        probe = RayProbe(origin=thirty_sixty_ninety(), direction=7 * math.pi / 4, delta=0.002048, samples=12)
        result = ray_probe(probe, FAGNANO)

        assert result.all_excluded
        assert result.hits == []
        assert len(result.distances) == 12
        assert result.distances[-1] == pytest.approx(0.002048 / 2 ** 11)

    def test_into_acute_triangles(self):
        """Test that Fagnano is periodic on every sample toward acute triangles"""
        probe = RayProbe(origin=thirty_sixty_ninety(), direction=math.pi / 2, delta=0.002048, samples=12)
        result = ray_probe(probe, FAGNANO)

        assert not result.all_excluded
        assert result.hits == result.distances

    def test_origin_must_be_saddle(self):
        """Test that probes start from a saddle connection"""
        probe = RayProbe(origin=equilateral(), direction=0.0, delta=0.01, samples=4)
        with pytest.raises(PreconditionError):
            ray_probe(probe, FAGNANO)
