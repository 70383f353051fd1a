import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pdoubling.bounds import BoundEntry
from pdoubling.covering import (
    BadParameters,
    NotComparable,
    audit_coverage,
    best_upper,
    chain_bound,
    rogers_bound,
    rogers_theta,
    subset_bound,
    tiling_cover,
)
from pdoubling.geometry import Ball, Box, CrossPolytope, minkowski_sum, scale
from pdoubling.lattices import ResourceCapExceeded


def test_one_dim_grid():
    cert = tiling_cover(Box((1,)), Box((3,)))
    assert sorted(cert.translates()[:, 0].tolist()) == [-3, -2, -1, 0, 1, 2, 3]
    assert cert.exact == Fraction(7, 3)


def test_square_grid():
    cert = tiling_cover(Box((1, 1)), Box((2, 2)))
    assert cert.size == 25 and cert.exact == Fraction(25, 4)


def test_ball_cover_size_and_audit():
    U, V = Ball(2, 1), Ball(2, 2)
    cert = tiling_cover(U, V)
    K = minkowski_sum(V, scale(U, Fraction(1, 2)))
    # volumetric floor |K| / |cell| with cell the inscribed square of the half ball
    assert cert.size >= K.volume() / 2 ** 2 * 2
    assert audit_coverage(cert, 20_000, seed=1) == (20_000, 0)


def test_shifted_grid_still_covers():
    cert = tiling_cover(Box((1,)), Box((3,)), offset=(Fraction(3, 10),))
    assert cert.size == 8
    assert audit_coverage(cert, 5_000)[1] == 0


def test_export_cap():
    cert = tiling_cover(Box((1,) * 3), Box((200,) * 3))
    assert cert.size == 401**3
    with pytest.raises(ResourceCapExceeded):
        cert.translates()


def test_rogers_values():
    assert rogers_theta(1) == 1
    assert rogers_theta(2) == pytest.approx(2 * math.log(2) + 2 * math.log(math.log(2)) + 10)
    assert rogers_bound(Ball(2, 1), Ball(2, 4)).value == pytest.approx(66.5829, abs=1e-3)
    for r in (1, 2, 7):
        assert rogers_bound(Box((1,)), Box((r,))).value == pytest.approx(2 * (1 + 1 / r), abs=1e-12)


def test_subset_and_chain():
    assert subset_bound(Ball(2, 2), Ball(2, 1)).exact == Fraction(4)
    with pytest.raises(NotComparable):
        subset_bound(Ball(2, 1), Ball(2, 2))
    base = tiling_cover(Box((1,)), Box((2,))).entry()
    e = chain_bound(base, 2, 8)
    assert e.value == pytest.approx(2.5**3)
    with pytest.raises(BadParameters):
        chain_bound(base, 1, 4)


def test_best_upper_prefers_smallest():
    U, V = Box((1, 1)), Box((5, 5))
    best = best_upper(U, V)
    assert best.method == "tiling-cover" and best.value == pytest.approx(2.2**2)
    assert best_upper(Ball(2, 1), Ball(2, 1)).value == 1


def test_identity_constant():
    for U in (Ball(3, 1), Box((1, 2)), CrossPolytope(2, 1)):
        assert best_upper(U, U).value == 1


@settings(max_examples=30, deadline=None)
@given(r=st.integers(1, 12), n=st.integers(1, 3))
def test_cube_closed_form(r, n):
    cert = tiling_cover(Box((1,) * n), Box((r,) * n))
    assert cert.exact == (2 + Fraction(1, r)) ** n


@settings(max_examples=15, deadline=None)
@given(
    r=st.fractions(min_value=1, max_value=4, max_denominator=4),
    lam=st.sampled_from([Fraction(1, 2), Fraction(3), Fraction(5, 4)]),
    kind=st.sampled_from(["box", "ball", "cross"]),
)
def test_scale_invariance_of_certificates(r, lam, kind):
    U = {"box": Box((1, 1)), "ball": Ball(2, 1), "cross": CrossPolytope(2, 1)}[kind]
    V = scale(U, r)
    a = tiling_cover(U, V)
    b = tiling_cover(scale(U, lam), scale(V, lam))
    assert a.size == b.size
    assert abs(a.bound_value - b.bound_value) <= 1e-12 * a.bound_value


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 1000), r=st.sampled_from([1, 2, 3]))
def test_coverage_audit_random(seed, r):
    for U in (Ball(2, 1), CrossPolytope(2, 1), Box((1, 2))):
        cert = tiling_cover(U, scale(U, r))
        assert audit_coverage(cert, 2_000, seed=seed)[1] == 0


def test_entry_serialisation():
    e = tiling_cover(Box((1,)), Box((5,))).entry()
    assert isinstance(e, BoundEntry)
    d = e.to_json()
    assert d["exact"] == "11/5" and d["certified"] and d["method"] == "tiling-cover"
