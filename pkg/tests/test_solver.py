from __future__ import annotations

import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from junction_relax import (
    AffineMonotone,
    CFLViolation,
    Constant,
    EvolutionState,
    FluxLimiter,
    JunctionGrid,
    JunctionHamiltonian,
    Relaxed,
    SchemeConfig,
    gradient_range,
    junction_time_slope,
    planar_profile,
    run,
    sawtooth_profile,
    step,
)
from junction_relax.solver import JunctionFlux, make_junction_flux, stable_dt
from junction_relax.standard import absolute_value, double_well

ABS = JunctionHamiltonian([absolute_value()])
ABS2 = JunctionHamiltonian([absolute_value(), absolute_value()])
MIXED = JunctionHamiltonian([absolute_value(), double_well()])


@pytest.fixture
def abs_flux():
    return JunctionFlux(Relaxed(Constant(1.0), ABS), ABS)


def test_grid_validation():
    with pytest.raises(ValueError):
        JunctionGrid(1, 2, 0.1)
    with pytest.raises(ValueError):
        JunctionGrid(1, 10, -0.1)
    with pytest.raises(ValueError):
        JunctionGrid(2, 10, 0.1, "planar_pin", (1.0,))


def test_discontinuous_initial_profile_is_rejected():
    grid = JunctionGrid(2, 10, 0.1)
    with pytest.raises(ValueError):
        EvolutionState.from_profile(grid, lambda a, x: x + a)


@pytest.mark.parametrize("slope", [1.0, -1.5, -2.5])
def test_planar_germ_state_moves_down_rigidly(abs_flux, slope):
    # F(p) = H(p) at these slopes: the relaxed constant 1 is max(1, -p)
    grid = JunctionGrid(1, 20, 0.05, "planar_pin", (slope,))
    state = EvolutionState.from_profile(grid, planar_profile([slope]))
    lam = abs(slope)
    dt = 0.02
    new = step(state, dt, abs_flux, ABS, grid)
    assert np.abs(new.profiles() - (state.profiles() - lam * dt)).max() <= 1e-12


def test_constant_data_rates(abs_flux):
    grid = JunctionGrid(1, 10, 0.1)
    state = EvolutionState.from_profile(grid, lambda a, x: np.full_like(x, 2.0))
    new = step(state, 0.05, abs_flux, ABS, grid)
    # junction falls at the relaxed value at zero slope, the interior at H(0) = 0
    assert new.junction == pytest.approx(2.0 - 0.05 * 1.0, abs=1e-12)
    assert np.all(new.branches == 2.0)


def test_gradient_range():
    grid = JunctionGrid(2, 40, 0.025)
    planar = EvolutionState.from_profile(grid, planar_profile([0.7, -0.3]))
    assert gradient_range(planar, grid) == pytest.approx(np.array([[0.7, 0.7], [-0.3, -0.3]]))
    saw = EvolutionState.from_profile(grid, sawtooth_profile(1.0, 0.5))
    assert gradient_range(saw, grid) == pytest.approx(np.array([[-1.0, 1.0], [-1.0, 1.0]]))


def test_steady_germ_has_zero_time_slope():
    grid = JunctionGrid(1, 20, 0.05, "planar_pin", (0.0,))
    initial = EvolutionState.from_profile(grid, planar_profile([0.0]))
    traj = run(initial, Constant(0.0), ABS, grid, SchemeConfig(dt=0.01), 0.2)
    assert junction_time_slope(traj) == 0.0
    assert np.all(traj.final.profiles() == 0.0)


def test_cfl_violation_on_the_initial_box():
    grid = JunctionGrid(1, 20, 0.05)
    initial = EvolutionState.from_profile(grid, sawtooth_profile(1.0, 0.5))
    with pytest.raises(CFLViolation):
        run(initial, FluxLimiter(1.0, ABS), ABS, grid, SchemeConfig(dt=0.2), 1.0)


def test_cfl_violation_when_gradients_grow():
    # the box passed in is too narrow: as the junction pulls down, slopes exceed it
    # and the step chosen for the narrow box is no longer stable for the double well
    dw = JunctionHamiltonian([double_well()])
    grid = JunctionGrid(1, 40, 0.05)
    initial = EvolutionState.from_profile(grid, planar_profile([0.0]))
    with pytest.raises(CFLViolation):
        run(initial, Constant(5.0), dw, grid, SchemeConfig(cfl=1.0), 1.0, gradient_box=[[-0.1, 0.1]])


def test_constant_and_affine_give_identical_trajectories():
    grid = JunctionGrid(1, 100, 0.01)
    initial = EvolutionState.from_profile(grid, lambda a, x: 0.5 * np.sin(4 * x))
    box = np.array([[-2.0, 2.0]])
    config = SchemeConfig()
    a = run(initial, Constant(1.0), ABS, grid, config, 0.5, gradient_box=box)
    b = run(initial, AffineMonotone(2.0, [1.0]), ABS, grid, config, 0.5, gradient_box=box)
    assert a.dt == b.dt
    assert np.abs(a.final.profiles() - b.final.profiles()).max() <= 1e-12
    assert np.abs(a.junction_values - b.junction_values).max() <= 1e-12


def test_output_times_are_hit_exactly():
    grid = JunctionGrid(1, 30, 0.05)
    initial = EvolutionState.from_profile(grid, sawtooth_profile())
    traj = run(initial, FluxLimiter(1.0, ABS), ABS, grid, SchemeConfig(), 1.0, output_times=(0.5,))
    assert traj.state_at(0.5).t == pytest.approx(0.5, abs=1e-12)
    assert traj.final.t == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(KeyError):
        traj.state_at(0.3)


def test_table_flux_matches_direct_flux():
    config = SchemeConfig(flux_evaluation="table", table_step=1e-2)
    box = np.array([[-1.0, 1.0], [-1.0, 1.0]])
    table = make_junction_flux(Constant(0.5, 2), MIXED, config, box)
    direct = make_junction_flux(Constant(0.5, 2), MIXED, SchemeConfig())
    lip = direct.partial_lipschitz(box[:, 0], box[:, 1]).sum()
    rng = np.random.default_rng(0)
    for s in rng.uniform(-1, 1, size=(50, 2)):
        assert table(s) == pytest.approx(direct(s), abs=lip * 1e-2)


def test_trajectory_csv(tmp_path):
    grid = JunctionGrid(2, 4, 0.25)
    initial = EvolutionState.from_profile(grid, planar_profile([1.0, 1.0]))
    traj = run(initial, FluxLimiter(1.0, ABS2), ABS2, grid, SchemeConfig(), 0.1)
    rows = list(csv.reader(traj.write_csv(tmp_path / "t.csv").open()))
    assert rows[0] == ["t", "branch", "x", "u"]
    # two snapshots, each with one junction row and 4 nodes per branch
    assert len(rows) == 1 + 2 * (1 + 2 * 4)
    assert rows[1][:3] == ["0.0", "0", "0.0"]


def _state(grid, rng):
    return EvolutionState(0.0, float(rng.normal()), np.cumsum(rng.uniform(-0.05, 0.05, (grid.n, grid.cells)), axis=1))


@pytest.mark.parametrize("ham, f0", [(ABS, Constant(1.0)), (MIXED, AffineMonotone(0.5, [1.0, 1.0])), (ABS2, FluxLimiter(0.3, ABS2))])
def test_step_is_monotone_under_single_node_perturbations(ham, f0, rng):
    grid = JunctionGrid(ham.n, 12, 0.1)
    flux = JunctionFlux(Relaxed(f0, ham), ham)
    box = np.array([[-3.0, 3.0]] * ham.n)
    dt = stable_dt(grid, ham, flux, box, 0.9)
    for _ in range(10):
        s = _state(grid, rng)
        base = step(s, dt, flux, ham, grid).profiles()
        node = None if rng.random() < 0.3 else (int(rng.integers(ham.n)), int(rng.integers(grid.cells)))
        bumped = step(s.shifted(node, float(rng.uniform(1e-6, 0.05))), dt, flux, ham, grid).profiles()
        assert np.all(bumped >= base - 1e-14)


def test_interior_godunov_residual_shrinks_with_dx():
    # smooth decreasing data on |p|: u_t + |u_x| = 0 is solved by u0(x + t) for u_x < 0
    u0 = lambda x: np.exp(-x)
    errors = []
    for dx in (0.02, 0.01, 0.005):
        grid = JunctionGrid(1, int(round(2 / dx)), dx)
        initial = EvolutionState.from_profile(grid, lambda a, x: u0(x))
        traj = run(initial, FluxLimiter(1.0, ABS), ABS, grid, SchemeConfig(), 0.2)
        x = grid.x
        inner = (x > 0.5) & (x < 1.5)
        exact = u0(x + 0.2)
        errors.append(np.abs(traj.final.profile(0) - exact)[inner].max())
    assert errors[0] > errors[1] > errors[2]
    assert errors[1] / errors[2] > 1.6


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 0.3), st.integers(0, 10_000))
def test_comparison_is_preserved(gap, seed):
    rng = np.random.default_rng(seed)
    grid = JunctionGrid(2, 20, 0.05)
    lower = _state(grid, rng)
    upper = EvolutionState(0.0, lower.junction + gap, lower.branches + gap + rng.uniform(0, 0.02, lower.branches.shape))
    box = np.array([[-2.0, 2.0]] * 2)
    f0 = AffineMonotone(0.5, [1.0, 1.0])
    u = run(lower, f0, MIXED, grid, SchemeConfig(), 0.3, gradient_box=box)
    v = run(upper, f0, MIXED, grid, SchemeConfig(), 0.3, gradient_box=box)
    assert np.all(u.final.profiles() <= v.final.profiles() + 1e-12)
