import math
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings, strategies as st

from app.errors import ClosureError, DecorationBoundError, ParityError, PreconditionError, PrimitivityError
from app.geom import thirty_sixty_ninety
from app.models import (
    CaseName, CaseTag, CaseVerdict, Decoration, EdgeWord, GMatrix, H3Class, H5Class, LatticeVector, TriangleShape,
)
from app.tri3060 import (
    GEN_A, GEN_B, act, case_class, case_x, case_tags, classify_vector, decide_case, egcd,
    enumerate_case_verdicts, figure_polygon, figure_word, collinearity_probe, halfhex_pattern,
    orbit_census, pstar, reduce_h5, vector_of_word, vector_verdicts,
)
from app.unfolding import unfold

IDENTITY = GMatrix.identity()


class TestClassifyVector:
    def test_egcd(self):
        """Test the Bezout coefficients"""
        g, s, t = egcd(3, 2)

        assert g == 1
        assert 3 * s + 2 * t == 1

    @pytest.mark.parametrize("n, m, entries, parity, cases", [
        (1, 2, [1, 0, 2, 1], (1, 0), [CaseName.S1, CaseName.S2]),
        (3, 2, [3, 4, 2, 3], (1, 0), [CaseName.S1, CaseName.S2]),
        (1, 0, [1, 0, 0, 1], (1, 0), [CaseName.S1, CaseName.S2]),
        (1, 1, [1, 0, 0, 1], (1, 1), [CaseName.S3, CaseName.S4]),
        (0, 1, [1, 0, 0, 1], (0, 1), []),
    ])
    def test_known_vectors(self, n, m, entries, parity, cases):
        """Test base cases and carriers of small vectors"""
        result = classify_vector(LatticeVector(n=n, m=m))

        assert result.g.entries() == entries
        assert result.parity == parity
        assert result.cases == cases

    def test_not_primitive(self):
        """Test that non-primitive vectors are rejected"""
        with pytest.raises(PrimitivityError):
            classify_vector(LatticeVector(n=2, m=4))
        with pytest.raises(PrimitivityError):
            classify_vector(LatticeVector(n=0, m=0))

    @settings(max_examples=200, deadline=None)
    @given(n=st.integers(-60, 60), m=st.integers(-60, 60))
    def test_carrier_reaches_vector(self, n, m):
        """Test that g carries the base vector to every primitive vector"""
        assume(math.gcd(n, m) == 1)
        result = classify_vector(LatticeVector(n=n, m=m))

        assert result.g.apply(result.base_vector) == LatticeVector(n=n, m=m)

    def test_vector_of_fagnano(self):
        """Test the lattice vector of the Fagnano closure"""
        assert vector_of_word(EdgeWord(letters=[1, 2, 3, 1, 2, 3])) == LatticeVector(n=0, m=-1)

    def test_vector_of_word_matches_translation(self):
        """Test that the embedded lattice vector is the closure translation"""
        w = EdgeWord(letters=[1, 2, 3, 1, 2, 3, 1, 2, 3, 1, 2, 3])
        v = vector_of_word(w)
        strip = unfold(figure_polygon(thirty_sixty_ninety()), w)

        assert v == LatticeVector(n=0, m=-2)
        assert v.embedded() == pytest.approx(strip.placements[-1].translation)

    def test_vector_of_rotation_word(self):
        """Test that a rotation closure has no lattice vector"""
        with pytest.raises(ClosureError):
            vector_of_word(EdgeWord(letters=[1, 2]))

    @pytest.mark.parametrize("n, m, verdicts", [
        (1, 0, {CaseName.S1: CaseVerdict.RAY_EXCLUDED, CaseName.S2: CaseVerdict.ACUTE_ONLY}),
        (1, 1, {CaseName.S3: CaseVerdict.ACUTE_ONLY, CaseName.S4: CaseVerdict.RAY_EXCLUDED}),
        (3, 2, {CaseName.S1: CaseVerdict.NOT_NULL_HOMOLOGOUS, CaseName.S2: CaseVerdict.NOT_NULL_HOMOLOGOUS}),
        (0, 1, {}),
    ])
    def test_vector_verdicts(self, n, m, verdicts):
        """Test the verdict each base case reaches under the carrier"""
        assert vector_verdicts(classify_vector(LatticeVector(n=n, m=m))) == verdicts

    def test_orbit_census(self):
        """Test the parity census of the smallest box"""
        assert orbit_census(1) == {"10": 2, "11": 4, "01": 2}

    def test_orbit_census_covers_box(self):
        """Test that every primitive vector lands in some class"""
        counts = orbit_census(5)
        primitive = sum(1 for n in range(-5, 6) for m in range(-5, 6) if math.gcd(n, m) == 1)

        assert sum(counts.values()) == primitive


class TestHomologyAction:
    def test_reduce_h5(self):
        """Test collapsing the five coordinates"""
        assert reduce_h5(H5Class(p1=1, p2=2, p3=3, c1=4, c2=5)).as_tuple() == (6, 4, 5)

    def test_act(self):
        """Test the action of a generator"""
        assert act(GEN_A, H3Class(s=0, u=0, v=1)).as_tuple() == (-2, 2, 1)

    def test_pstar(self):
        """Test the projection"""
        assert pstar(H3Class(s=1, u=1, v=0)) == 0
        assert pstar(H3Class(s=3, u=1, v=1)) == 1

    def test_act_is_an_action(self):
        """Test that acting by a product is acting twice"""
        h = H3Class(s=3, u=2, v=-1)

        assert act(GEN_A @ GEN_B, h) == act(GEN_A, act(GEN_B, h))

    @settings(max_examples=200, deadline=None)
    @given(steps=st.lists(st.sampled_from(["A", "B", "a", "b"]), max_size=8),
           s=st.integers(-50, 50), u=st.integers(-50, 50), v=st.integers(-50, 50))
    def test_projection_of_action(self, steps, s, u, v):
        """Test that pstar after g is the row (1, 1-2a-2c, 1-2b-2d)"""
        gens = {"A": GEN_A, "B": GEN_B, "a": GEN_A.inverse(), "b": GEN_B.inverse()}
        g = IDENTITY
        for name in steps:
            g = g @ gens[name]

        assert pstar(act(g, H3Class(s=s, u=u, v=v))) == s + (1 - 2 * g.a - 2 * g.c) * u + (1 - 2 * g.b - 2 * g.d) * v

    def test_identity_acts_trivially(self):
        """Test that the identity fixes every class"""
        h = H3Class(s=5, u=-3, v=7)

        assert act(IDENTITY, h) == h


class TestBaseCases:
    def test_case_classes(self):
        """Test the classes of decorated base cases"""
        assert case_class(CaseTag(case=CaseName.S1, n=1, ccw_v1=1, ccw_v3=1)).as_tuple() == (0, 1, 0)
        assert case_class(CaseTag(case=CaseName.S2, n=1, ccw_v3=2)).as_tuple() == (2, 1, 0)
        assert case_class(CaseTag(case=CaseName.S3, n=1, ccw_v3=1, cw_v3=1)).as_tuple() == (2, 1, 1)
        assert case_class(CaseTag(case=CaseName.S4, n=1, ccw_v1=1, ccw_v3=1)).as_tuple() == (1, 1, 1)

    def test_decoration_bounds(self):
        """Test that strike counts must match the case"""
        with pytest.raises(DecorationBoundError):
            case_class(CaseTag(case=CaseName.S1, n=1, ccw_v1=2, ccw_v3=1))
        with pytest.raises(DecorationBoundError):
            case_class(CaseTag(case=CaseName.S2, n=1, ccw_v1=1, ccw_v3=2))

    def test_ray_excluded(self):
        """Test a decorated s1 case that is null-homologous"""
        tag = CaseTag(case=CaseName.S1, n=2, ccw_v1=1, cw_v1=1, ccw_v3=1, cw_v3=1)
        decision = decide_case(tag, IDENTITY)

        assert case_class(tag).as_tuple() == (2, 2, 0)
        assert decision.x == "1"
        assert decision.pstar == 0
        assert decision.verdict == CaseVerdict.RAY_EXCLUDED

    def test_acute_only(self):
        """Test a decorated s2 case that is null-homologous"""
        decision = decide_case(CaseTag(case=CaseName.S2, n=1, ccw_v3=1, cw_v3=1), IDENTITY)

        assert decision.verdict == CaseVerdict.ACUTE_ONLY

    def test_not_null_homologous(self):
        """Test a decorated case with nonzero projection"""
        decision = decide_case(CaseTag(case=CaseName.S4, n=1, ccw_v1=1, ccw_v3=1), IDENTITY)

        assert decision.pstar == -1
        assert decision.verdict == CaseVerdict.NOT_NULL_HOMOLOGOUS

    def test_case_x(self):
        """Test the exact x of a repeated case"""
        assert case_x(CaseTag(case=CaseName.S2, n=2, ccw_v3=3, cw_v3=1)) == Fraction(3, 2)

    def test_case_tags_count(self):
        """Test how many decorations a base case admits"""
        assert len(list(case_tags(CaseName.S1, 2))) == 9
        assert len(list(case_tags(CaseName.S2, 2))) == 5

    def test_null_homologous_needs_x_one(self):
        """Test that only x = 1 survives, for several group elements"""
        matrices = [IDENTITY, GEN_A, GEN_B, GEN_A.inverse(), GEN_B.inverse(), GEN_A @ GEN_B]
        decisions = enumerate_case_verdicts(4, matrices)
        verdicts = {d.verdict for d in decisions}

        assert CaseVerdict.RAY_EXCLUDED in verdicts
        assert CaseVerdict.ACUTE_ONLY in verdicts
        for d in decisions:
            if d.verdict is not CaseVerdict.NOT_NULL_HOMOLOGOUS:
                assert d.x == "1"

    def test_halfhex_pattern(self):
        """Test the half-hexagon sequences around the middle strike"""
        assert halfhex_pattern(0) == ("", "")
        assert halfhex_pattern(1) == ("B", "A")
        assert halfhex_pattern(3) == ("BBA", "BAA")
        with pytest.raises(PreconditionError):
            halfhex_pattern(-1)


class TestCollinearity:
    def test_figure_polygon(self):
        """Test the hexagon placement of the 30-60-90 triangle"""
        v1, v2, v3 = figure_polygon(thirty_sixty_ninety()).vertices

        assert v1 == (0.0, 0.0)
        assert v2 == pytest.approx((-0.5, -math.sqrt(3) / 2))
        assert v3 == pytest.approx((0.0, -math.sqrt(3) / 2))

    @pytest.mark.parametrize("case, parameter", [
        (CaseName.S2, 3), (CaseName.S2, 5), (CaseName.S3, 3), (CaseName.S3, 5),
    ])
    def test_strikes_on_right_triangle(self, case, parameter):
        """Test that X, Y and Z are collinear on the 30-60-90 triangle"""
        word, strikes = figure_word(case, parameter)

        assert set(strikes) == {"X", "Y", "Z"}
        assert all(label == 3 for _, label in strikes.values())
        assert 0 < strikes["Y"][0] < strikes["Z"][0] == len(word)
        report = collinearity_probe(case, parameter, thirty_sixty_ninety())
        assert report.residual < 1e-9

    @pytest.mark.parametrize("case, parameter", [(CaseName.S2, 3), (CaseName.S3, 3)])
    def test_collinear_on_other_right_triangles(self, case, parameter):
        """Test that collinearity holds on every right triangle"""
        T = TriangleShape(theta1=0.4, theta2=math.pi / 2 - 0.4)

        assert collinearity_probe(case, parameter, T).residual < 1e-9

    @pytest.mark.parametrize("case, parameter", [
        (CaseName.S2, 3), (CaseName.S2, 5), (CaseName.S3, 3), (CaseName.S3, 5),
    ])
    def test_sweep_decides_side(self, case, parameter):
        """Test that Y leaves the line XZ on the side set by the pivot direction"""
        ccw = collinearity_probe(case, parameter, thirty_sixty_ninety(), sweep=Decoration.CCW)
        cw = collinearity_probe(case, parameter, thirty_sixty_ninety(), sweep=Decoration.CW)

        assert ccw.offset < 0 < cw.offset
        assert abs(ccw.derivative) > 1e-6

    def test_even_parameter(self):
        """Test that the parameter must be odd"""
        with pytest.raises(ParityError):
            collinearity_probe(CaseName.S2, 2, thirty_sixty_ninety())

    def test_other_cases_rejected(self):
        """Test that collinearity is defined for s2 and s3 only"""
        with pytest.raises(PreconditionError):
            collinearity_probe(CaseName.S1, 3, thirty_sixty_ninety())
