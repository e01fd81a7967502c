import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.errors import (
    ClassificationError, InvalidWordError, NoRelationError, PreconditionError, UnsupportedError,
)
from app.geom import enumerate_words, equilateral, eval_word, right_isosceles, thirty_sixty_ninety
from app.models import DecoratedPath, Decoration, EdgeWord, Strike, TriangleShape, Verdict
from app.stability import (
    arises_from_stable, decorate, decoration_contribution, integer_relation, is_stable, perturbation_oracle,
    saddle_strikes, stability_report, winding_vector,
)
from app.unfolding import classify_word, corridor, unfold

FAGNANO = EdgeWord(letters=[1, 2, 3, 1, 2, 3])
WRAP = EdgeWord(letters=[1, 2, 1, 2])
PERPENDICULAR = EdgeWord(letters=[1, 2, 3, 2, 1, 3])
# acute neighbour of the 30-60-90 triangle
NEARBY = TriangleShape(theta1=math.pi / 6, theta2=math.pi / 3 + 0.01)


def even_words():
    def build(first, offsets):
        letters = [first]
        for off in offsets:
            letters.append((letters[-1] + off - 1) % 3 + 1)
        return EdgeWord(letters=letters)

    return st.integers(1, 6).flatmap(
        lambda k: st.builds(build, st.integers(1, 3), st.lists(st.integers(1, 2), min_size=2 * k - 1,
                                                               max_size=2 * k - 1)))


triangles = st.tuples(st.floats(0.1, 1.45), st.floats(0.1, 1.45)).filter(
    lambda t: t[0] + t[1] < math.pi - 0.1).map(lambda t: TriangleShape(theta1=t[0], theta2=t[1]))


class TestStableWords:
    def test_is_stable(self):
        """Test the stable set on classic words"""
        assert is_stable(FAGNANO)
        assert not is_stable(WRAP)
        assert not is_stable(EdgeWord(letters=[1, 2, 3]))
        assert not is_stable(PERPENDICULAR)

    def test_perturbation_oracle_agrees(self):
        """Test that the stable Fagnano orbit survives small shape changes"""
        assert perturbation_oracle(equilateral(), FAGNANO)

    def test_perturbation_oracle_unstable(self):
        """Test that the perpendicular orbit dies off the right triangles"""
        assert not perturbation_oracle(right_isosceles(), PERPENDICULAR)

    def test_perturbation_oracle_needs_periodic(self):
        """Test that the oracle starts from a periodic word"""
        with pytest.raises(PreconditionError):
            perturbation_oracle(thirty_sixty_ninety(), FAGNANO)


class TestWindingVector:
    def test_fagnano_winds_evenly(self):
        """Test that Fagnano winds once around every vertex"""
        assert winding_vector(FAGNANO).w == [0, 0, 0]
        assert winding_vector(FAGNANO).is_zero

    def test_wrap_winds_around_v3(self):
        """Test the word wrapping around the third vertex"""
        assert winding_vector(WRAP).w == [0, 0, 2]

    def test_odd_word_rejected(self):
        """Test that odd words have no winding vector"""
        with pytest.raises(InvalidWordError):
            winding_vector(EdgeWord(letters=[1, 2, 3]))

    def test_polygon_words_unsupported(self):
        """Test that winding vectors are for triangles"""
        with pytest.raises(UnsupportedError):
            winding_vector(EdgeWord(letters=[1, 2, 3, 4], n=4))

    @settings(max_examples=60, deadline=None)
    @given(T=triangles, w=even_words())
    def test_winding_predicts_rotation(self, T, w):
        """Test that twice the winding-weighted angle sum is the closing rotation"""
        total = sum(2 * k * a for k, a in zip(winding_vector(w).w, T.angles()))
        g = eval_word(T.to_polygon(), w)

        assert abs(math.remainder(g.angle - total, 2 * math.pi)) < 1e-9


class TestIntegerRelation:
    def test_wrap_relation(self):
        """Test that wrapping around v3 forces a right angle"""
        assert integer_relation(WRAP).coefficients == [0, 0, 4]
        assert integer_relation(WRAP, thirty_sixty_ninety()).coefficients == [0, 0, 4]

    def test_longer_wrap(self):
        """Test three turns around v3"""
        assert integer_relation(EdgeWord(letters=[1, 2, 1, 2, 1, 2])).coefficients == [0, 0, 6]

    def test_perpendicular_relation(self):
        """Test the relation of the perpendicular orbit"""
        assert integer_relation(PERPENDICULAR, right_isosceles()).coefficients == [0, 0, 4]

    def test_relation_must_hold(self):
        """Test that a triangle violating the relation is rejected"""
        with pytest.raises(PreconditionError):
            integer_relation(WRAP, equilateral())

    def test_stable_word_has_no_relation(self):
        """Test that stable words impose nothing"""
        with pytest.raises(NoRelationError):
            integer_relation(FAGNANO)

    def test_odd_word_doubling(self):
        """Test that an odd word whose double is stable imposes nothing"""
        with pytest.raises(NoRelationError):
            integer_relation(EdgeWord(letters=[1, 2, 3]))

    def test_report(self):
        """Test the stability report fields"""
        report = stability_report(WRAP, thirty_sixty_ninety())

        assert not report.stable
        assert report.winding == [0, 0, 2]
        assert report.relation == [0, 0, 4]

        report = stability_report(FAGNANO)
        assert report.stable
        assert report.relation is None


class TestDecorations:
    def test_saddle_strikes(self):
        """Test reading the struck vertices off a degenerate corridor"""
        strip = unfold(thirty_sixty_ninety(), FAGNANO)
        struck = saddle_strikes(strip, corridor(strip))

        assert struck
        assert [t.copy_index for t in struck] == sorted(t.copy_index for t in struck)

    def test_saddle_strikes_need_degenerate(self):
        """Test that an open corridor strikes nothing"""
        strip = unfold(equilateral(), FAGNANO)
        with pytest.raises(ClassificationError):
            saddle_strikes(strip, corridor(strip))

    def test_decorate_fagnano_saddle(self):
        """Test that the reference decorations come from a stable orbit"""
        decorated = decorate(thirty_sixty_ninety(), FAGNANO, NEARBY)

        assert decorated.strikes
        assert all(s.vertex == 3 for s in decorated.strikes)
        assert decorated.decorations == [s.reference for s in decorated.strikes]
        assert arises_from_stable(decorated)

    def test_flipping_one_strike(self):
        """Test that one reversed semicircle breaks null-homology"""
        decorated = decorate(thirty_sixty_ninety(), FAGNANO, NEARBY)
        flipped = [decorated.decorations[0].flipped()] + decorated.decorations[1:]

        assert not arises_from_stable(decorated.with_decorations(flipped))

    def test_flip_negates_decoration_contribution(self):
        """Test that flipping every semicircle negates the decoration contribution"""
        decorated = decorate(thirty_sixty_ninety(), FAGNANO, NEARBY)
        contribution = decoration_contribution(decorated)

        assert decoration_contribution(decorated.flipped()) == [-c for c in contribution]

    def test_decoration_contribution_values(self):
        """Test half a loop per semicircle about its struck vertex"""
        strikes = [Strike(copy_index=1, vertex=3, reference=Decoration.CCW),
                   Strike(copy_index=2, vertex=1, reference=Decoration.CCW)]
        d = DecoratedPath(word=FAGNANO, strikes=strikes, decorations=[Decoration.CCW, Decoration.CW])

        assert decoration_contribution(d) == [Fraction(-1, 2), 0, Fraction(1, 2)]
        assert decoration_contribution(d.flipped()) == [Fraction(1, 2), 0, Fraction(-1, 2)]

    @settings(max_examples=20, deadline=None)
    @given(data=st.data())
    def test_flip_moves_winding_by_twice_the_contribution(self, data):
        """Test that a full flip changes the winding by twice the decoration contribution"""
        decorated = decorate(thirty_sixty_ninety(), FAGNANO, NEARBY)
        choice = data.draw(st.lists(st.sampled_from(list(Decoration)), min_size=len(decorated.strikes),
                                    max_size=len(decorated.strikes)))
        d = decorated.with_decorations(choice)
        before, after = winding_vector(FAGNANO, d).w, winding_vector(FAGNANO, d.flipped()).w
        shifted = [b - a - 2 * c for b, a, c in zip(before, after, decoration_contribution(d))]

        assert len(set(shifted)) == 1

    def test_decorations_are_directions(self):
        """Test that every decoration is cw or ccw"""
        decorated = decorate(thirty_sixty_ninety(), FAGNANO, NEARBY)

        assert set(decorated.decorations) <= {Decoration.CW, Decoration.CCW}

    def test_decorate_needs_saddle(self):
        """Test that decorations need a saddle connection"""
        with pytest.raises(ClassificationError):
            decorate(equilateral(), FAGNANO, NEARBY)

    def test_decorate_needs_periodic_reference(self):
        """Test that the reference triangle must carry the word"""
        with pytest.raises(ClassificationError):
            decorate(thirty_sixty_ninety(), FAGNANO, TriangleShape(theta1=0.3, theta2=0.3))


def random_triangles(rng, count):
    found = []
    while len(found) < count:
        t1, t2 = rng.uniform(0.05, math.pi / 2 - 0.05, size=2)
        if t1 + t2 < math.pi - 0.05:
            found.append(TriangleShape(theta1=float(t1), theta2=float(t2)))
    return found


@pytest.fixture(scope="module")
def sampled():
    """First sampled triangle carrying each short word, then twenty more generic triangles"""
    rng = np.random.default_rng(0)
    shapes = random_triangles(rng, 50)
    carried = []
    for w in enumerate_words(3, 8, cyclic=True, min_length=2):
        for T in shapes:
            if classify_word(T, w).verdict is Verdict.PERIODIC:
                carried.append((T, w))
                break
    return carried, random_triangles(rng, 20)


class TestStabilityProperties:
    def test_stable_iff_zero_winding(self):
        """Test that every even word up to length 10 is stable exactly when its winding vanishes"""
        checked = 0
        for w in enumerate_words(3, 10, cyclic=True, min_length=2):
            if len(w) % 2 == 0:
                assert is_stable(w) == winding_vector(w).is_zero, w.text()
                checked += 1

        assert checked == 1374

    @pytest.mark.slow
    def test_oracle_agrees_with_criterion(self, sampled):
        """Test the perturbation oracle against is_stable on the first triangle carrying each word"""
        carried, _ = sampled

        assert carried
        for T, w in carried:
            assert perturbation_oracle(T, w) == is_stable(w), w.text()

    @pytest.mark.slow
    def test_generic_periodic_words_are_stable(self, sampled):
        """Test that words periodic on generic triangles are stable"""
        _, generic = sampled
        for T in generic:
            for w in enumerate_words(3, 8, cyclic=True, min_length=2):
                if classify_word(T, w).verdict is Verdict.PERIODIC:
                    assert is_stable(w), (T.theta1, T.theta2, w.text())

    @pytest.mark.slow
    def test_periodic_survives_tiny_steps(self, sampled):
        """Test that a stable periodic word stays periodic a micro-radian away"""
        carried, _ = sampled
        for T, w in carried:
            if is_stable(w) and classify_word(T, w).corridor.width > 1e-3:
                assert perturbation_oracle(T, w, step=1e-6), w.text()
