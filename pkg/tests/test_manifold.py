import math

import pytest
from hypothesis import given, strategies as st

from filippov.manifold import (
    NORTH_POLE, POLE_TOL, SOUTH_POLE, Pole, QuotientPoint, Sphere, Torus, manifold_diameter,
    pole_status, quotient_distance, wrap,
)

from oracles import sphere_diameter_grid

coord = st.floats(-5.0, 5.0, allow_nan=False)
unit = st.floats(0.0, 1.0, allow_nan=False)


def test_torus_wrap_reduces_both_coordinates():
    p = wrap(1.25, -0.25, Torus)
    assert (p.x, p.y) == (0.25, 0.75)


def test_wrap_just_below_integer_stays_in_range():
    p = wrap(-1e-20, 3.0 - 1e-17, Torus)
    assert 0.0 <= p.x < 1.0 and 0.0 <= p.y < 1.0


def test_sphere_snaps_to_poles():
    assert wrap(0.3, 0.5 * POLE_TOL, Sphere) == SOUTH_POLE
    assert wrap(0.7, 1.0 - 0.5 * POLE_TOL, Sphere) == NORTH_POLE
    assert pole_status(SOUTH_POLE) == (True, Pole.SOUTH)
    assert not pole_status(wrap(0.5, 0.5, Sphere)).at_pole


def test_sphere_rejects_y_out_of_range():
    with pytest.raises(ValueError):
        wrap(0.2, 1.5, Sphere)


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        wrap(float("nan"), 0.2, Torus)


def test_distance_across_seam():
    assert quotient_distance(wrap(0.95, 0.5, Torus), wrap(0.05, 0.5, Torus)) == pytest.approx(0.1)
    assert quotient_distance(wrap(0.5, 0.02, Sphere), wrap(0.0, 0.03, Sphere)) == pytest.approx(0.05)


def test_distance_models_must_match():
    with pytest.raises(ValueError):
        quotient_distance(wrap(0, 0.2, Torus), wrap(0, 0.2, Sphere))


def test_diameters():
    assert manifold_diameter(Torus) == pytest.approx(math.sqrt(2) / 2)
    # brute force over the glued square
    assert manifold_diameter(Sphere) == pytest.approx(sphere_diameter_grid(), abs=1e-12)
    assert quotient_distance(SOUTH_POLE, NORTH_POLE) == 1.0


def test_point_round_trip():
    p = wrap(0.3, 0.6, Sphere)
    assert QuotientPoint.from_dict(p.to_dict()) == p


@given(coord, coord)
def test_wrap_is_idempotent(x, y):
    p = wrap(x, y, Torus)
    assert wrap(p.x, p.y, Torus) == p


@given(unit, unit, unit, unit)
def test_distance_symmetric_and_bounded(x1, y1, x2, y2):
    for m in (Torus, Sphere):
        p, q = wrap(x1, y1, m), wrap(x2, y2, m)
        d = quotient_distance(p, q)
        assert d == quotient_distance(q, p)
        assert 0.0 <= d <= manifold_diameter(m) + 1e-12


@given(unit, unit, unit, unit, unit, unit)
def test_triangle_inequality(x1, y1, x2, y2, x3, y3):
    for m in (Torus, Sphere):
        p, q, r = wrap(x1, y1, m), wrap(x2, y2, m), wrap(x3, y3, m)
        assert quotient_distance(p, r) <= quotient_distance(p, q) + quotient_distance(q, r) + 1e-12


@given(coord, coord, st.integers(-3, 3), st.integers(-3, 3))
def test_integer_shifts_are_identified_on_torus(x, y, i, j):
    assert quotient_distance(wrap(x, y, Torus), wrap(x + i, y + j, Torus)) < 1e-9
