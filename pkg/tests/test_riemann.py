from __future__ import annotations

import json
import math

import numpy as np
import pytest

from junction_relax import (
    Constant,
    FluxLimiter,
    JunctionHamiltonian,
    Relaxed,
    germ_check,
    hat_p,
    solve_riemann,
)
from junction_relax.riemann import NotSuperRelaxed, convexity_flag, observed_order
from junction_relax.standard import absolute_value, double_well

from conftest import SWEEP, build

ABS = JunctionHamiltonian([absolute_value()])
ABS2 = JunctionHamiltonian([absolute_value(), absolute_value()])


@pytest.fixture(scope="module")
def relaxed_constant():
    return Relaxed(Constant(1.0), ABS)


@pytest.mark.parametrize("p, expected", [(-3.0, -3.0), (2.0, 1.0), (0.0, 1.0)])
def test_hat_p_examples(relaxed_constant, p, expected):
    assert hat_p(relaxed_constant, ABS, [p]) == pytest.approx([expected], abs=1e-12)


def test_hat_p_requires_super_relaxed_input():
    # the raw constant is not super-relaxed: far to the left no level crossing exists
    with pytest.raises(NotSuperRelaxed):
        hat_p(Constant(1.0), ABS, [-3.0])


@pytest.mark.parametrize("q, expected", [([1.0], True), ([0.0], False), ([-2.0], True)])
def test_germ_check(relaxed_constant, q, expected):
    assert germ_check(relaxed_constant, ABS, q) is expected


@pytest.mark.parametrize("h_name, f_name", SWEEP)
def test_hat_p_lands_in_the_germ(h_name, f_name):
    ham, f0 = build(h_name, f_name)
    f = Relaxed(f0, ham)
    for p in np.random.default_rng(9).uniform(-3, 3, size=(20, ham.n)):
        q = hat_p(f, ham, p)
        assert germ_check(f, ham, q)
        assert f(q) == pytest.approx(f(p), abs=1e-9)


@pytest.mark.parametrize(
    "values, flag",
    [
        (np.array([0.0, 1.0, 2.0, 3.0]), "affine"),
        (np.array([0.0, 0.0, 1.0, 3.0]), "convex"),
        (np.array([0.0, 2.0, 3.0, 3.0]), "concave"),
        (np.array([0.0, 1.0, 1.0, 2.0]), "mixed"),
    ],
)
def test_convexity_flag(values, flag):
    assert convexity_flag(values) == flag


def test_observed_order():
    assert observed_order([0.04, 0.02, 0.01], [1 / 50, 1 / 100, 1 / 200]) == pytest.approx(1.0)
    assert math.isinf(observed_order([1e-14, 3e-15, 0.0], [1 / 50, 1 / 100, 1 / 200]))


@pytest.fixture(scope="module")
def constant_at_zero():
    return solve_riemann(Constant(1.0), ABS, [0.0], dx=1 / 200)


def test_riemann_constant_at_zero(constant_at_zero):
    sol = constant_at_zero
    assert sol.relaxed_value == pytest.approx(1.0, abs=1e-12)
    assert sol.value_error <= 5e-2
    assert sol.p_hat == pytest.approx([1.0], abs=5e-2)
    assert "mixed" not in sol.convexity
    assert sol.self_similarity_residual <= 5e-2


def test_riemann_profile_slopes(constant_at_zero):
    sol = constant_at_zero
    w = sol.profiles[0]
    dxi = sol.xi[1] - sol.xi[0]
    # far end carries the initial slope, the junction end p_hat
    assert (w[-1] - w[-2]) / dxi == pytest.approx(0.0, abs=1e-12)
    assert (w[1] - w[0]) / dxi == pytest.approx(1.0, abs=5e-2)


def test_riemann_on_germ_data_is_planar():
    sol = solve_riemann(Constant(1.0), ABS, [-2.0], dx=1 / 50)
    assert sol.value_error <= 1e-12
    assert sol.convexity == ("affine",)
    expected = -2.0 * sol.xi - 2.0  # W(xi) = p xi - H(p)
    assert np.abs(sol.profiles[0] - expected).max() <= 1e-12


def test_riemann_two_branch_flux_limiter():
    sol = solve_riemann(FluxLimiter(1.0, ABS2), ABS2, [0.0, 0.0], dx=1 / 100)
    assert sol.effective_value == pytest.approx(1.0, abs=5e-2)
    assert all(flag != "mixed" for flag in sol.convexity)
    # the time slope never exceeds the barrier max(|H(p)|, |F(p)|)
    barrier = max(abs(sol.relaxed_value), *(abs(float(h(0.0))) for h in ABS2))
    assert abs(sol.effective_value) <= barrier + 1e-9


def test_riemann_on_double_well():
    ham = JunctionHamiltonian([double_well()])
    sol = solve_riemann(Constant(0.5), ham, [1.5], dx=1 / 100)
    assert sol.value_error <= 5e-2
    assert sol.p_hat_exact == pytest.approx([7 / 6])


def test_riemann_outputs(tmp_path, constant_at_zero):
    sol = constant_at_zero
    rows = sol.write_profiles(tmp_path / "w.csv").read_text().splitlines()
    assert rows[0] == "branch,xi,W"
    summary = json.loads(sol.write_summary(tmp_path / "s.json").read_text())
    assert summary["effective_value"] == pytest.approx(sol.effective_value)
    assert summary["convexity"] == list(sol.convexity)
