import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pdoubling.geometry import (
    Ball,
    Box,
    CrossPolytope,
    DimensionMismatch,
    GeometryError,
    Sum,
    UnsupportedExactVolume,
    UnsupportedKind,
    contains,
    exact,
    inscribed_box,
    minkowski_sum,
    scale,
    volume,
    volume_estimate,
    volume_ratio,
)

radii = st.fractions(min_value=Fraction(1, 8), max_value=8, max_denominator=16)


def test_closed_form_volumes():
    assert volume(Ball(2, 1)) == pytest.approx(math.pi, rel=1e-14)
    assert volume(Ball(3, 2)) == pytest.approx(4 / 3 * math.pi * 8, rel=1e-14)
    assert volume(Box((1, 2, 3))) == 48
    assert volume(CrossPolytope(3, 1)) == pytest.approx(8 / 6)
    assert Box((1, 2)).exact_volume() == 8
    assert CrossPolytope(2, 3).exact_volume() == 18


def test_sum_volume_steiner_2d():
    # square of side 2 plus unit disc: 4 + perimeter 8 + pi
    s = minkowski_sum(Box((1, 1)), Ball(2, 1))
    assert volume(s) == pytest.approx(4 + 8 + math.pi, rel=1e-12)


def test_sum_volume_steiner_3d_against_monte_carlo():
    s = minkowski_sum(Box((1, 2, 0.5)), Ball(3, 0.75))
    est, upper = volume_estimate(s, 200_000, seed=4)
    assert abs(volume(s) - est) / volume(s) < 0.02
    assert upper >= est


def test_homothetic_sums_collapse():
    assert minkowski_sum(Ball(2, 1), Ball(2, 2)) == Ball(2, 3)
    assert minkowski_sum(Box((1, 2)), Box((3, 1))) == Box((4, 3))
    assert minkowski_sum(CrossPolytope(3, 1), CrossPolytope(3, 2)) == CrossPolytope(3, 3)


def test_unsupported_sum():
    with pytest.raises(UnsupportedExactVolume):
        volume(minkowski_sum(Ball(2, 1), CrossPolytope(2, 1)))
    with pytest.raises(UnsupportedKind):
        minkowski_sum(minkowski_sum(Box((1, 1)), Ball(2, 1)), CrossPolytope(2, 1))


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        minkowski_sum(Ball(2, 1), Ball(3, 1))


@pytest.mark.parametrize("bad", [lambda: Ball(2, 0), lambda: Ball(2, -1), lambda: Box((1, 0)), lambda: Box(())])
def test_degenerate_bodies_rejected(bad):
    with pytest.raises(GeometryError):
        bad()


def test_boundary_membership():
    B = Box((1, 1))
    assert contains(B, (1, 0.5))
    assert not contains(B, (1, 0.5), strict=True)
    assert contains(Ball(2, 5), (3, 4))
    assert not contains(Ball(2, 5), (3, 4), strict=True)
    assert contains(CrossPolytope(2, 1), (0.5, 0.5))
    assert not contains(CrossPolytope(2, 1), (0.5, 0.5), strict=True)


def test_sum_membership_exact_on_boundary():
    s = minkowski_sum(Box((1, 1)), Ball(2, 1))
    assert contains(s, (2, 0))
    assert not contains(s, (2, 0), strict=True)
    # 1.6 and 1.8 are not dyadic: the stored doubles sit just outside the rounded corner
    assert not contains(s, (1.6, 1.8))
    assert contains(s, (1.6, 1.7999))
    assert contains(s, (2, 1))
    assert not contains(s, (2, 1), strict=True)


def test_floats_are_exact_dyadics():
    assert exact(0.1) == Fraction(0.1)
    assert exact("1/3") == Fraction(1, 3)


def test_inscribed_box():
    ib = inscribed_box(Ball(2, 1))
    w = float(ib.half_widths[0])
    assert w <= 1 / math.sqrt(2) and w > 1 / math.sqrt(2) - 1e-15
    assert contains(Ball(2, 1), (w, w))
    assert inscribed_box(CrossPolytope(3, 3)) == Box((1, 1, 1))


@settings(max_examples=60, deadline=None)
@given(r=radii, lam=radii, n=st.integers(1, 4))
def test_scale_homogeneity(r, lam, n):
    for body in (Ball(n, r), Box((r,) * n), CrossPolytope(n, r)):
        assert volume(scale(body, lam)) == pytest.approx(float(lam) ** n * volume(body), rel=1e-12)
    assert scale(Box((r,) * n), lam).exact_volume() == lam**n * Box((r,) * n).exact_volume()
    assert inscribed_box(scale(Ball(n, r), lam)) == scale(inscribed_box(Ball(n, r)), lam)


@settings(max_examples=60, deadline=None)
@given(a=radii, b=radii, n=st.integers(1, 3))
def test_volume_ratio_exact(a, b, n):
    assert volume_ratio(Box((a,) * n), Box((b,) * n)) == (a / b) ** n
    assert volume_ratio(Ball(n, a), Ball(n, b)) == (a / b) ** n


@settings(max_examples=40, deadline=None)
@given(
    pts=st.lists(st.tuples(st.floats(-3, 3), st.floats(-3, 3)), min_size=1, max_size=30),
    r=radii,
)
def test_symmetry_and_vectorised_membership(pts, r):
    for body in (Ball(2, r), Box((r, r / 2)), CrossPolytope(2, r), minkowski_sum(Box((r, r)), Ball(2, r))):
        arr = np.array(pts)
        many = body.contains_many(arr)
        assert list(many) == [body.contains(p) for p in pts]
        assert list(many) == list(body.contains_many(-arr))
        assert all(not s or c for s, c in zip(body.contains_many(arr, strict=True), many))


def test_sum_literal_roundtrip():
    from pdoubling.literals import parse_body

    s = minkowski_sum(Box((1, 2)), Ball(2, 1))
    assert isinstance(s, Sum)
    assert parse_body(s.literal(), 2) == s
