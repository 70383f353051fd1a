import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pdoubling.geometry import Ball, Box, CrossPolytope, scale
from pdoubling.lattices import (
    DimensionTooLarge,
    Lattice,
    NotAPacking,
    catalog_entry,
    catalog_for_dim,
    check_packing,
    count_points,
    enumerate_points,
    lattice_lower_bound,
    normalize_to_packing,
    packing_density,
)


def brute_count(lattice, body, strict, reach=None):
    """Coefficient-box scan (columns of M are generators), independent of the enumeration code."""
    M = lattice.matrix
    R = body.circumradius()
    # coefficients of points within R are bounded by R * ||M^-1||
    bound = reach or int(math.ceil(R * np.linalg.norm(np.linalg.inv(M), 2))) + 1
    n = lattice.dim
    total = 0
    for c in itertools.product(range(-bound, bound + 1), repeat=n):
        if body.contains(lattice.point(c), strict=strict):
            total += 1
    return total


def test_catalog_invariants():
    a2 = catalog_entry("A2").lattice
    assert a2.shortest_norm2() == 1
    assert a2.determinant == pytest.approx(math.sqrt(3) / 2, rel=1e-15)
    d4 = catalog_entry("D4").lattice
    assert d4.exact_determinant == 2 and d4.shortest_norm2() == 2
    e8 = catalog_entry("E8").lattice
    assert e8.exact_determinant == 1 and e8.shortest_norm2() == 2
    assert [e.name for e in catalog_for_dim(2)] == ["Zn", "A2"]
    assert "E8" in [e.name for e in catalog_for_dim(8)]


def test_e8_kissing_number():
    e8 = catalog_entry("E8").lattice
    assert count_points(e8, Ball(8, math.sqrt(2))) - 1 == 240


def test_hexagonal_counts_against_brute_force():
    a2 = catalog_entry("A2").lattice
    disc = Ball(2, 2)
    assert count_points(a2, disc, strict_interior=True) == 13
    assert count_points(a2, disc, strict_interior=True) == brute_count(a2, disc, True)
    # the second generator is rounded up, so (0, +-2h) with 2h > sqrt(3) still lies inside
    assert count_points(a2, disc) == brute_count(a2, disc, False) == 15


def test_integer_box_counts():
    Z2 = catalog_entry("Zn", 2).lattice
    assert count_points(Z2, Box((3, 3)), strict_interior=True) == 25
    assert count_points(Z2, Box((3, 3))) == 49


def test_dimension_cap():
    with pytest.raises(DimensionTooLarge):
        count_points(Lattice(tuple(tuple(int(i == j) for j in range(9)) for i in range(9))), Box((1,) * 9))


def test_lower_bound_values():
    Z1 = catalog_entry("Zn", 1).lattice
    for r in range(1, 21):
        e = lattice_lower_bound(Z1, Box((1,)), Box((r,)))
        assert e.exact == 2 - Fraction(1, r)
        assert e.certified and e.direction == "lower"
    Z2 = catalog_entry("Zn", 2).lattice
    assert lattice_lower_bound(Z2, Box((1, 1)), Box((2, 2))).exact == Fraction(9, 4)


def test_non_packing_rejected():
    half = Lattice(((Fraction(1, 2),),))
    with pytest.raises(NotAPacking):
        lattice_lower_bound(half, Box((1,)), Box((3,)))


def test_packing_density_and_normalisation():
    U = Ball(2, 1)
    lat = normalize_to_packing(catalog_entry("A2"), U)
    assert check_packing(lat, U)
    assert packing_density(lat, scale(U, Fraction(1, 2))) == pytest.approx(math.pi / math.sqrt(12), rel=1e-12)
    Zc = normalize_to_packing(catalog_entry("Zn", 3), CrossPolytope(3, 1))
    assert check_packing(Zc, CrossPolytope(3, 1))
    assert Zc.shortest_norm2() == 1


@settings(max_examples=25, deadline=None)
@given(
    a=st.integers(1, 4),
    b=st.integers(-3, 3),
    d=st.integers(1, 4),
    r=st.fractions(min_value=Fraction(1, 2), max_value=4, max_denominator=8),
    strict=st.booleans(),
)
def test_enumeration_matches_coefficient_scan(a, b, d, r, strict):
    lat = Lattice(((Fraction(a, 2), Fraction(0)), (Fraction(b, 3), Fraction(d, 2))))
    for body in (Ball(2, r), Box((r, r / 2)), CrossPolytope(2, r)):
        assert count_points(lat, body, strict) == brute_count(lat, body, strict)


@settings(max_examples=25, deadline=None)
@given(r=st.integers(1, 6), n=st.integers(1, 3))
def test_enumerated_points_are_symmetric_and_inside(r, n):
    lat = catalog_entry(f"D{n}" if n >= 3 else "Zn", n).lattice
    pts = enumerate_points(lat, Ball(n, r))
    keys = {tuple(np.round(p, 9)) for p in pts}
    assert all(tuple(np.round(-p, 9)) in keys for p in pts)
    assert np.all(np.linalg.norm(pts, axis=1) <= r + 1e-9)


@settings(max_examples=25, deadline=None)
@given(r=st.integers(1, 10), lam=st.sampled_from([1, Fraction(3, 2), 2, 3]))
def test_lower_bound_monotone_in_v(r, lam):
    U = Ball(2, 1)
    lat = normalize_to_packing(catalog_entry("A2"), U)
    V = scale(U, r)
    base = lattice_lower_bound(lat, U, V).value
    assert lattice_lower_bound(lat, U, scale(V, lam)).value >= base / float(lam) ** 2 - 1e-12
