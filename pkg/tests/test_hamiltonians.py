from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from junction_relax import (
    BranchHamiltonian,
    PiecewiseLinear,
    godunov_flux,
    level_crossing,
    lower_monotone_hull,
    range_min_max,
)
from junction_relax.hamiltonians import first_below, last_below
from junction_relax.standard import absolute_value, double_well

finite = st.floats(-6, 6, allow_nan=False, allow_infinity=False)


@st.composite
def coercive_hamiltonians(draw):
    k = draw(st.integers(1, 6))
    xs = np.cumsum(draw(st.lists(st.floats(0.1, 2.0), min_size=k, max_size=k))) - 4.0
    ys = draw(st.lists(st.floats(-2, 3), min_size=k, max_size=k))
    left = -draw(st.floats(0.2, 4))
    right = draw(st.floats(0.2, 4))
    return BranchHamiltonian(xs, ys, left, right)


@pytest.mark.parametrize(
    "ham, x, expected",
    [(absolute_value(), 0.0, 0.0), (absolute_value(), -3.0, 3.0), (double_well(), 0.5, 0.5), (double_well(), 3.0, 6.0)],
)
def test_evaluation(ham, x, expected):
    assert ham(x) == pytest.approx(expected, abs=1e-15)


def test_evaluation_is_vectorised_and_handles_infinity(h_dw):
    out = h_dw(np.array([-np.inf, -1.0, 0.0, np.inf]))
    assert out.tolist() == [np.inf, 0.0, 1.0, np.inf]


@pytest.mark.parametrize(
    "ham, a, b, expected",
    [(absolute_value(), -1, 2, (0, 2)), (double_well(), -0.5, 0.5, (0.5, 1)), (absolute_value(), 3, 3, (3, 3))],
)
def test_range_min_max(ham, a, b, expected):
    assert range_min_max(ham, a, b) == pytest.approx(expected, abs=1e-15)


def test_range_min_max_rejects_reversed_interval(h_abs):
    with pytest.raises(ValueError):
        range_min_max(h_abs, 2, -1)


@pytest.mark.parametrize(
    "ham, p, q, expected",
    [(absolute_value(), -1, 2, 0.0), (absolute_value(), 2, -1, 2.0), (double_well(), 3, 3, 6.0)],
)
def test_godunov_flux(ham, p, q, expected):
    assert godunov_flux(ham, p, q) == pytest.approx(expected, abs=1e-15)


def test_hull_of_absolute_value(h_abs):
    hull = lower_monotone_hull(h_abs)
    p = np.linspace(-4, 4, 81)
    assert np.allclose(hull(p), np.maximum(0, -p), atol=1e-15)


def test_hull_of_double_well_matches_fine_grid_infimum(h_dw):
    hull = lower_monotone_hull(h_dw)
    q = np.linspace(-6, 4, 100_001)
    brute = np.minimum.accumulate(h_dw(q))
    assert np.max(np.abs(hull(q) - brute)) < 1e-12
    assert hull(-2.0) == pytest.approx(3.0) and hull(0.5) == 0.0


def test_hull_of_nonincreasing_function_is_itself():
    f = PiecewiseLinear.from_points([(0, 2), (1, 1), (2, 1)], -1.0, 0.0)
    g = lower_monotone_hull(f)
    x = np.linspace(-3, 5, 33)
    assert np.allclose(f(x), g(x))


@pytest.mark.parametrize(
    "ham, p, level, direction, expected",
    [
        (absolute_value(), 0.0, 1.0, "rightward", 1.0),
        (absolute_value(), 2.0, 1.0, "leftward", 1.0),
        (double_well(), -1.0, 0.5, "rightward", -0.5),
        (absolute_value(), -3.0, 1.0, "leftward", -np.inf),
        (absolute_value(), 2.0, 1.0, "rightward", 2.0),
    ],
)
def test_level_crossing(ham, p, level, direction, expected):
    assert level_crossing(ham, p, level, direction) == expected


def test_extrema_profiles(h_abs, h_dw):
    assert h_abs.extrema.minima == ((0.0, 0.0),) and h_abs.extrema.maxima == ()
    assert h_dw.extrema.minima == ((-1.0, 0.0), (1.0, 0.0))
    assert h_dw.extrema.maxima == ((0.0, 1.0),)


def test_flat_bottom_is_reported_at_its_midpoint():
    flat = BranchHamiltonian.from_points([(-2, 1), (-1, 0), (1, 0), (2, 1)], -1, 1)
    assert flat.extrema.minima == ((0.0, 0.0),) and flat.extrema.maxima == ()


def test_coercivity_is_enforced():
    with pytest.raises(ValueError):
        BranchHamiltonian.from_points([(0, 0)], 1.0, 1.0)


def test_record_roundtrip(h_dw):
    again = BranchHamiltonian.from_record(h_dw.to_record(), label=2)
    x = np.linspace(-5, 5, 41)
    assert np.array_equal(again(x), h_dw(x)) and again.label == 2


def test_callable_ingestion_reports_midpoint_error():
    ham, report = BranchHamiltonian.from_callable(lambda p: p**2, np.linspace(-3, 3, 61), -6, 6)
    assert report.nodes == 61
    assert report.max_midpoint_error == pytest.approx(0.1**2 / 4, rel=1e-9)
    assert ham(1.0) == pytest.approx(1.0)


def test_last_and_first_below(h_dw):
    assert last_below(h_dw, 0.5) == pytest.approx(7 / 6)
    assert first_below(h_dw, 0.5) == pytest.approx(-7 / 6)


@settings(max_examples=60, deadline=None)
@given(coercive_hamiltonians(), finite, finite, finite)
def test_godunov_flux_monotonicity(h, p, q, r):
    lo, hi = min(p, r), max(p, r)
    assert godunov_flux(h, lo, q) <= godunov_flux(h, hi, q) + 1e-12
    assert godunov_flux(h, q, lo) >= godunov_flux(h, q, hi) - 1e-12
    assert godunov_flux(h, p, p) == pytest.approx(h(p), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(coercive_hamiltonians())
def test_hull_is_nonincreasing_below_and_idempotent(h):
    hull = lower_monotone_hull(h)
    x = np.linspace(-8, 8, 801)
    v = hull(x)
    assert np.all(np.diff(v) <= 1e-12)
    assert np.all(v <= h(x) + 1e-12)
    again = lower_monotone_hull(hull)
    assert np.allclose(again(x), v, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(coercive_hamiltonians(), finite, st.floats(-2, 6))
def test_rightward_crossing_lands_on_the_level(h, p, level):
    q = level_crossing(h, p, level, "rightward")
    assert np.isfinite(q) and q >= p
    if q > p:
        assert h(q) == pytest.approx(level, abs=1e-9)
        inside = np.linspace(p, q, 50)[:-1]
        assert np.all(h(inside) < level + 1e-9)


@settings(max_examples=40, deadline=None)
@given(coercive_hamiltonians(), finite, finite)
def test_range_min_max_matches_breakpoint_aligned_sampling(h, a, b):
    lo, hi = min(a, b), max(a, b)
    nodes = np.concatenate(([lo, hi], h.xs[(h.xs > lo) & (h.xs < hi)]))
    mn, mx = range_min_max(h, lo, hi)
    assert mn == h(nodes).min() and mx == h(nodes).max()
