import math
import random
from fractions import Fraction
from io import StringIO

import pytest

from cutstack import (
    DirectionSubspace,
    Rectangle,
    Shape,
    boundary_containment_holds,
    boundary_ratio,
    cube_points,
    eccentricity_stats,
    folner_ratio,
    inner_boundary,
    is_separated,
    minkowski_sum,
    slab_points,
)
from cutstack.lattice import add, point_set, sub


def brute_boundary(R, S):
    """The defining condition, translate by translate, over anchors in R."""
    R_pts = set(R)
    out = set()
    for v in R_pts:
        window = [add(v, s) for s in S]
        if any(w not in R_pts for w in window):
            out |= {w for w in window if w in R_pts}
    return out


def random_shape(rng, dim, max_coord=6, max_size=8, with_origin=False):
    size = rng.randint(1, max_size)
    pts = {tuple(rng.randint(-max_coord, max_coord) for _ in range(dim)) for _ in range(size)}
    if with_origin:
        pts.add((0,) * dim)
    return Shape(pts, dim=dim)


class TestInnerBoundary:
    def test_singleton_window_never_straddles(self):
        R = Rectangle((0, 0), (2, 2))
        assert len(inner_boundary(R, Shape([(0, 0)]))) == 0

    def test_domino_right_column(self):
        R = Rectangle((0, 0), (2, 2))
        S = Shape([(0, 0), (1, 0)])
        expected = {(2, 0), (2, 1), (2, 2)}
        assert inner_boundary(R, S).points == expected
        assert brute_boundary(R, S) == expected

    @pytest.mark.parametrize("n", range(1, 21))
    def test_interval_pair_boundary_is_one_point(self, n):
        R = Rectangle((0,), (n,))
        S = Shape([(0,), (1,)])
        bound = inner_boundary(R, S)
        assert bound.points == brute_boundary(R, S)
        assert len(bound) == 1

    def test_matches_brute_force_on_random_pairs(self):
        rng = random.Random(7)
        for _ in range(100):
            dim = rng.choice([1, 2])
            R = random_shape(rng, dim)
            S = random_shape(rng, dim, max_coord=2, max_size=4)
            assert inner_boundary(R, S).points == brute_boundary(R, S)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            inner_boundary(Rectangle((0,), (3,)), Shape([(0, 0)]))


class TestFolnerRatio:
    def test_interval_shift(self):
        assert folner_ratio(Rectangle((0,), (9,)), (1,)) == Fraction(2, 10)

    def test_zero_shift(self):
        rng = random.Random(3)
        for _ in range(20):
            R = random_shape(rng, 2)
            assert folner_ratio(R, (0, 0)) == 0

    def test_unit_square_shift(self):
        assert folner_ratio(Rectangle((0, 0), (1, 1)), (1, 0)) == 1

    def test_rectangle_formula_matches_sets(self):
        rng = random.Random(5)
        for _ in range(30):
            R = Rectangle((0, 0), (rng.randint(0, 5), rng.randint(0, 5)))
            n = (rng.randint(-3, 3), rng.randint(-3, 3))
            assert folner_ratio(R, n) == folner_ratio(R.to_shape(), n)


class TestBoundaryRatio:
    def test_corner_cross_fixture(self):
        # Regression fixture; the value is re-derived by the brute path above.
        R = Rectangle((0, 0), (99, 99))
        S = Shape([(0, 0), (1, 0), (0, 1)])
        ratio = boundary_ratio(R, S)
        assert ratio == Fraction(199, 10000)
        assert ratio < Fraction(3, 100) * 2

    def test_singleton_zero(self):
        assert boundary_ratio(Rectangle((0, 0), (5, 5)), Shape([(0, 0)])) == 0

    def test_small_interval_large_window(self):
        assert boundary_ratio(Rectangle((0,), (1,)), Rectangle((0,), (3,))) == 1

    def test_containment_property_random(self):
        rng = random.Random(11)
        for _ in range(100):
            dim = rng.choice([1, 2])
            R = random_shape(rng, dim)
            S = random_shape(rng, dim, max_coord=2, max_size=4, with_origin=True)
            assert boundary_containment_holds(R, S)

    def test_cube_ratio_eventually_monotone_and_small(self):
        S = Shape([(0, 0), (1, 0), (0, 1)])
        ratios = [
            boundary_ratio(Rectangle((0, 0), (k, k)), S)
            for k in range(10, 201, 10)
        ]
        assert all(a >= b for a, b in zip(ratios, ratios[1:]))
        assert ratios[-1] < Fraction(1, 50)
        S1 = Shape([(0,), (1,), (2,)])
        ratios1 = [boundary_ratio(Rectangle((0,), (k,)), S1) for k in range(4, 201)]
        assert all(a >= b for a, b in zip(ratios1, ratios1[1:]))


class TestSeparation:
    def test_interval_gap_two(self):
        R = Rectangle((0,), (1,))
        J = Shape([(0,), (2,)])
        assert is_separated(R, J)
        assert minkowski_sum(R, J) == Rectangle((0,), (3,)).to_shape()

    def test_interval_overlap(self):
        assert not is_separated(Rectangle((0,), (1,)), Shape([(0,), (1,)]))

    def test_square_corners(self):
        R = Rectangle((0, 0), (1, 1))
        J = Shape([(0, 0), (2, 0), (0, 2), (2, 2)])
        assert is_separated(R, J)
        assert len(minkowski_sum(R, J)) == 16

    def test_separated_iff_cardinality_multiplies(self):
        rng = random.Random(13)
        for _ in range(100):
            dim = rng.choice([1, 2])
            R = random_shape(rng, dim, max_coord=3, max_size=5)
            J = random_shape(rng, dim, max_coord=5, max_size=4)
            sep = is_separated(R, J)
            assert sep == (len(minkowski_sum(R, J)) == len(R) * len(J))


class TestSlabPoints:
    def test_axis_aligned_box(self):
        V = DirectionSubspace([(1, 0)])
        W = slab_points(V, 3, 2)
        assert W == Shape([(x, y) for x in range(4) for y in (-1, 0, 1)])
        assert len(W) == 12

    def test_diagonal_thin_slab(self):
        V = DirectionSubspace([(1, 1)])
        W = slab_points(V, Fraction(283, 100), 1)
        assert W.points == {(0, 0), (1, 1), (2, 2)}

    def test_origin_always_inside(self):
        rng = random.Random(17)
        for _ in range(25):
            d = rng.choice([2, 3])
            n = rng.randint(1, d - 1)
            vecs = []
            while len(vecs) < n:
                v = tuple(rng.randint(-2, 2) for _ in range(d))
                try:
                    DirectionSubspace(vecs + [v])
                except ValueError:
                    continue
                vecs.append(v)
            V = DirectionSubspace(vecs)
            t = Fraction(rng.randint(1, 40), 10)
            m = Fraction(rng.randint(10, 30), 10)
            assert (0,) * d in slab_points(V, t, m)

    def test_monotone_in_t_and_m(self):
        rng = random.Random(19)
        for _ in range(20):
            V = DirectionSubspace([(rng.randint(1, 3), rng.randint(0, 3))])
            t = Fraction(rng.randint(5, 30), 10)
            m = Fraction(rng.randint(5, 20), 10)
            bigger = slab_points(V, t + 1, m + Fraction(1, 2)).points
            assert slab_points(V, t, m).points <= bigger

    def test_agrees_with_float_membership_off_boundary(self):
        rng = random.Random(23)
        checked = 0
        for _ in range(10):
            vx, vy = rng.randint(1, 3), rng.randint(-2, 3)
            if vx == 0 and vy == 0:
                continue
            V = DirectionSubspace([(vx, vy)])
            t = Fraction(rng.randint(8, 40), 10)
            m = Fraction(rng.randint(8, 25), 10)
            exact = slab_points(V, t, m).points
            tf, mf = float(t), float(m)
            for x in range(-8, 9):
                for y in range(-8, 9):
                    (a,), (b,) = V.float_coordinates((x, y))
                    margins = [a, tf - a, mf / 2 - abs(b)]
                    if min(abs(v) for v in margins) < 1e-9:
                        continue
                    inside = a >= 0 and a <= tf and abs(b) <= mf / 2
                    assert inside == ((x, y) in exact)
                    checked += 1
        assert checked > 1000

    def test_rejects_full_dimension_and_bad_params(self):
        with pytest.raises(ValueError):
            slab_points(DirectionSubspace([(1, 0), (0, 1)]), 1, 1)
        V = DirectionSubspace([(1, 0)])
        with pytest.raises(ValueError):
            slab_points(V, 0, 1)
        with pytest.raises(ValueError):
            slab_points(V, 1, -1)
        with pytest.raises(ValueError):
            DirectionSubspace([(1, 1), (2, 2)])


class TestCubePoints:
    def test_examples(self):
        assert len(cube_points(2, 2)) == 9
        assert cube_points(Fraction(1, 2), 1).to_shape().points == {(0,)}
        assert len(cube_points(3, 3)) == 64


class TestEccentricity:
    def test_dyadic_squares(self):
        rects = [Rectangle.from_extents((2**j, 2**j)) for j in range(1, 9)]
        report = eccentricity_stats(rects, threshold=1.0)
        for j, st in enumerate(report.stages, start=1):
            w = 2**j - 1
            assert (st.short_side, st.long_side) == (w, w)
            assert st.ratio == pytest.approx(math.log(w) / w if w else 0.0)
        ratios = [st.ratio for st in report.stages]
        assert ratios[1:] == sorted(ratios[1:], reverse=True)
        assert report.subexponential

    def test_doubly_exponential_long_side(self):
        rects = [
            Rectangle((0, 0), (2 ** (2**j), j))
            for j in range(1, 7)
        ]
        report = eccentricity_stats(rects, threshold=1.0)
        assert not report.subexponential
        ratios = [st.ratio for st in report.stages]
        for j, r in enumerate(ratios, start=1):
            assert r == pytest.approx(2**j * math.log(2) / j)
        assert ratios == sorted(ratios)
        assert report.max_ratio > 7

    def test_single_square(self):
        report = eccentricity_stats([Rectangle((0, 0), (4, 4))], threshold=1.0)
        assert report.stages[0].ratio == pytest.approx(math.log(4) / 4)

    def test_degenerate_side_is_infinite(self):
        report = eccentricity_stats([Rectangle((0, 0), (5, 0))], threshold=100.0)
        assert math.isinf(report.max_ratio)
        assert not report.subexponential

    def test_csv_roundtrip(self):
        rects = [Rectangle.from_extents((2**j, 2**j)) for j in range(1, 4)]
        buf = StringIO()
        eccentricity_stats(rects, 1.0).to_csv(buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "stage,s,ell,ratio"
        assert len(lines) == 4


class TestSerialization:
    def test_shape_json_roundtrip(self):
        s = Shape([(0, 1), (-2, 3)])
        assert Shape.from_json(s.to_json()) == s
        assert s.to_json() == [[-2, 3], [0, 1]]

    def test_rectangle_json_roundtrip(self):
        r = Rectangle((-1, 0), (2, 5))
        assert Rectangle.from_json(r.to_json()) == r
        assert r.to_json() == {"lo": [-1, 0], "hi": [2, 5]}


class TestShapeBasics:
    def test_iteration_sorted_and_dim_checked(self):
        s = Shape([(3,), (1,), (2,)])
        assert list(s) == [(1,), (2,), (3,)]
        with pytest.raises(ValueError):
            Shape([(1, 2), (3,)])
        with pytest.raises(ValueError):
            Shape([])

    def test_rectangle_cardinality_and_sides(self):
        r = Rectangle((1, -1), (3, 2))
        assert r.sides == (2, 3)
        assert r.extents == (3, 4)
        assert len(r) == 12
        assert len(list(r)) == 12
        assert (2, 0) in r and (4, 0) not in r

    def test_translate(self):
        assert Rectangle((0,), (2,)).translate((5,)) == Rectangle((5,), (7,))
        assert Shape([(0, 0)]).translate((1, 2)).points == {(1, 2)}
