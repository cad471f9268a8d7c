"""Monotone explicit scheme for Hamilton-Jacobi equations on a junction.

Every branch is discretised on ``x_i = i * dx`` for ``i = 0..K``; node 0 is
shared.  Interior nodes use the Godunov numerical Hamiltonian of their
branch, the junction node uses a junction function evaluated at the N
outgoing one-sided slopes.  Under the CFL restriction the update is
monotone, which is what the comparison and gradient-box checks rely on.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Literal, Sequence

import numpy as np

from .hamiltonians import godunov_flux
from .junction import JunctionFunction, JunctionHamiltonian, TabulatedMonotone
from .relaxation import Relaxed

FarBoundary = Literal["planar_pin", "neumann"]
FluxMode = Literal["strong_relaxed", "raw_F0"]


class CFLViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class JunctionGrid:
    """``n`` branches of ``cells`` cells of width ``dx`` glued at node 0.

    ``far_boundary`` selects what happens at ``x_K``: ``"planar_pin"``
    imposes the exact planar solution ``p^alpha x - t H^alpha(p^alpha)``
    with ``p = pin_slopes``; ``"neumann"`` uses a zero-slope ghost node,
    which keeps the scheme monotone.
    """

    n: int
    cells: int
    dx: float
    far_boundary: FarBoundary = "neumann"
    pin_slopes: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.dx <= 0:
            raise ValueError("dx must be positive")
        if self.cells < 3:
            raise ValueError("each branch needs at least 3 cells")
        if self.far_boundary == "planar_pin":
            if self.pin_slopes is None or len(self.pin_slopes) != self.n:
                raise ValueError("planar_pin needs one pin slope per branch")
        elif self.far_boundary != "neumann":
            raise ValueError(f"unknown far boundary {self.far_boundary!r}")

    @property
    def x(self) -> np.ndarray:
        return self.dx * np.arange(self.cells + 1)


@dataclass(frozen=True)
class EvolutionState:
    """Solution at time ``t``: the junction value and ``u^alpha_i`` for ``i >= 1``."""

    t: float
    junction: float
    branches: np.ndarray  # shape (n, cells)

    def profile(self, alpha: int) -> np.ndarray:
        """Values on branch ``alpha`` (0-based) including the junction node."""
        return np.concatenate(([self.junction], self.branches[alpha]))

    def profiles(self) -> np.ndarray:
        return np.column_stack([np.full(self.branches.shape[0], self.junction), self.branches])

    def shifted(self, node: tuple[int, int] | None, delta: float) -> "EvolutionState":
        """Copy with one value raised by ``delta``; ``node=None`` targets the junction."""
        if node is None:
            return replace(self, junction=self.junction + delta)
        b = self.branches.copy()
        b[node] += delta
        return replace(self, branches=b)

    @classmethod
    def from_profile(cls, grid: JunctionGrid, u0: Callable[[int, np.ndarray], np.ndarray], t: float = 0.0):
        """Sample ``u0(alpha, x)`` on the grid; branch values at ``x = 0`` must agree."""
        x = grid.x
        rows = np.array([np.asarray(u0(a, x), dtype=float) for a in range(grid.n)])
        if np.ptp(rows[:, 0]) > 1e-12:
            raise ValueError("initial profile is discontinuous at the junction")
        return cls(t, float(rows[0, 0]), rows[:, 1:].copy())


@dataclass(frozen=True)
class SchemeConfig:
    """Time step and junction flux choice.

    ``dt=None`` picks the largest step allowed by ``cfl`` on the initial
    gradient box.  ``flux_evaluation="table"`` interpolates the junction
    flux from a precomputed table of spacing ``table_step`` instead of
    evaluating it at every step.
    """

    dt: float | None = None
    junction_flux: FluxMode = "strong_relaxed"
    cfl: float = 0.9
    flux_evaluation: Literal["direct", "table"] = "direct"
    table_step: float = 1e-2

    def __post_init__(self) -> None:
        if not 0 < self.cfl <= 1:
            raise ValueError("CFL number must lie in (0, 1]")
        if self.junction_flux not in ("strong_relaxed", "raw_F0"):
            raise ValueError(f"unknown junction flux {self.junction_flux!r}")


@dataclass
class Trajectory:
    """Snapshots at the requested output times plus the junction history of every step."""

    grid: JunctionGrid
    dt: float
    states: list[EvolutionState]
    times: np.ndarray
    junction_values: np.ndarray
    max_gradient_box: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    @property
    def final(self) -> EvolutionState:
        return self.states[-1]

    def state_at(self, t: float, tol: float = 1e-9) -> EvolutionState:
        for s in self.states:
            if abs(s.t - t) <= tol:
                return s
        raise KeyError(f"no snapshot stored at t={t}")

    def write_csv(self, path: str | Path) -> Path:
        """Columns ``t, branch, x, u`` with 1-based branch labels; the junction row is branch 0."""
        path = Path(path)
        x = self.grid.x
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "branch", "x", "u"])
            for s in self.states:
                w.writerow([repr(s.t), 0, 0.0, repr(s.junction)])
                for a in range(self.grid.n):
                    for xi, ui in zip(x[1:], s.branches[a]):
                        w.writerow([repr(s.t), a + 1, repr(float(xi)), repr(float(ui))])
        return path


class JunctionFlux:
    """Junction flux used by the scheme, with memoised point evaluations."""

    def __init__(self, f: JunctionFunction, ham: JunctionHamiltonian):
        self.f = f
        self.ham = ham
        self._cache: dict[bytes, float] = {}

    def __call__(self, slopes: np.ndarray) -> float:
        key = slopes.tobytes()
        value = self._cache.get(key)
        if value is None:
            value = float(self.f(slopes[None, :])[0])
            if len(self._cache) > 200_000:
                self._cache.clear()
            self._cache[key] = value
        return value

    def partial_lipschitz(self, lower: np.ndarray, upper: np.ndarray, samples: int = 9) -> np.ndarray:
        """Largest difference quotient along each axis over a sample grid of the box."""
        n = len(lower)
        count = samples if n <= 3 else 4
        axes = [np.unique(np.linspace(lo, hi, count)) for lo, hi in zip(lower, upper)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        vals = np.asarray(self.f(mesh.reshape(-1, n)), dtype=float).reshape(mesh.shape[:-1])
        out = np.zeros(n)
        for a in range(n):
            if len(axes[a]) > 1:
                q = np.abs(np.diff(vals, axis=a)) / np.diff(axes[a]).reshape(
                    [-1 if k == a else 1 for k in range(n)]
                )
                out[a] = q.max()
        return out


def planar_profile(slopes: Sequence[float]) -> Callable[[int, np.ndarray], np.ndarray]:
    """``u0(alpha, x) = slopes[alpha] * x``."""
    slopes = np.asarray(slopes, dtype=float)
    return lambda a, x: slopes[a] * x


def sawtooth_profile(slope: float = 1.0, period: float = 0.5) -> Callable[[int, np.ndarray], np.ndarray]:
    """Zero at the junction with slopes alternating between ``+slope`` and ``-slope``.

    Even-numbered branches start upwards, odd-numbered ones downwards.
    """
    half = 0.5 * period
    return lambda a, x: slope * (half - np.abs((x % period) - half)) * (1 if a % 2 == 0 else -1)


def make_junction_flux(
    f0: JunctionFunction, ham: JunctionHamiltonian, config: SchemeConfig, box: np.ndarray | None = None
) -> JunctionFlux:
    f = Relaxed(f0, ham) if config.junction_flux == "strong_relaxed" else f0
    if config.flux_evaluation == "table":
        if box is None:
            raise ValueError("a tabulated junction flux needs a gradient box")
        axes = [np.arange(lo, hi + config.table_step, config.table_step) for lo, hi in box]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        vals = np.asarray(f(mesh.reshape(-1, ham.n))).reshape(mesh.shape[:-1])
        f = TabulatedMonotone(axes, vals, tol=1e-9)
    return JunctionFlux(f, ham)


def gradient_range(state: EvolutionState, grid: JunctionGrid) -> np.ndarray:
    """Per-branch ``(min, max)`` of one-sided slopes, junction slopes included."""
    slopes = np.diff(state.profiles(), axis=1) / grid.dx
    return np.column_stack([slopes.min(axis=1), slopes.max(axis=1)])


def max_rate(ham: JunctionHamiltonian, flux: JunctionFlux, box: np.ndarray) -> float:
    """Bound on ``dx / dt`` for monotone updates: branch and junction Lipschitz constants on ``box``."""
    lip_h = max(h.lipschitz_on(lo, hi) for h, (lo, hi) in zip(ham, box))
    lip_j = float(flux.partial_lipschitz(box[:, 0], box[:, 1]).sum())
    return max(lip_h, lip_j, 1e-300)


def stable_dt(grid: JunctionGrid, ham: JunctionHamiltonian, flux: JunctionFlux, box: np.ndarray, cfl: float) -> float:
    """Largest time step keeping every nodal update monotone on the gradient box."""
    return cfl * grid.dx / max_rate(ham, flux, box)


def step(
    state: EvolutionState,
    dt: float,
    flux: JunctionFlux,
    ham: JunctionHamiltonian,
    grid: JunctionGrid,
) -> EvolutionState:
    """One explicit Euler step of the monotone junction scheme."""
    u = state.profiles()
    dx = grid.dx
    t_new = state.t + dt
    new = np.empty_like(state.branches)
    for a, h in enumerate(ham):
        row = u[a]
        if grid.far_boundary == "planar_pin":
            ghost = row[-1] + grid.pin_slopes[a] * dx
        else:
            ghost = row[-1]
        ext = np.append(row, ghost)
        left = (ext[1:-1] - ext[:-2]) / dx
        right = (ext[2:] - ext[1:-1]) / dx
        new[a] = ext[1:-1] - dt * godunov_flux(h, left, right)
        if grid.far_boundary == "planar_pin":
            pa = grid.pin_slopes[a]
            new[a, -1] = pa * grid.x[-1] - t_new * float(h(pa))
    junction_slopes = (u[:, 1] - state.junction) / dx
    junction = state.junction - dt * flux(junction_slopes)
    return EvolutionState(t_new, junction, new)


def run(
    initial: EvolutionState,
    f0: JunctionFunction,
    ham: JunctionHamiltonian,
    grid: JunctionGrid,
    config: SchemeConfig,
    T: float,
    output_times: Sequence[float] = (),
    gradient_box: np.ndarray | None = None,
    flux: JunctionFlux | None = None,
) -> Trajectory:
    """Advance ``initial`` to time ``T``.

    The time step is ``T / n`` for the smallest ``n`` meeting the CFL bound
    on ``gradient_box`` (default: the initial gradient range), rounded up so
    that every entry of ``output_times`` is hit exactly when it is a
    multiple of ``T / n``.  Whenever the observed gradient range leaves the
    validated box, the bound is recomputed and a violation aborts the run.
    """
    if f0.dim != ham.n or grid.n != ham.n:
        raise ValueError("grid, junction function and Hamiltonian disagree on the number of branches")
    box = gradient_range(initial, grid) if gradient_box is None else np.array(gradient_box, dtype=float)
    box = np.column_stack([np.minimum(box[:, 0], gradient_range(initial, grid)[:, 0]),
                           np.maximum(box[:, 1], gradient_range(initial, grid)[:, 1])])
    if flux is None:
        flux = make_junction_flux(f0, ham, config, box)
    dt_max = stable_dt(grid, ham, flux, box, config.cfl)
    if config.dt is not None:
        if config.dt > dt_max * (1 + 1e-12):
            raise CFLViolation(f"dt={config.dt} exceeds the stable step {dt_max} on gradient box {box.tolist()}")
        dt_max = config.dt
    n_steps = max(1, math.ceil(T / dt_max - 1e-9))
    if output_times:
        n_steps = 2 * math.ceil(n_steps / 2)
    dt = T / n_steps
    wanted = {int(round(t / dt)) for t in output_times if abs(t / dt - round(t / dt)) < 1e-6}

    state = initial
    states = [initial]
    times = np.empty(n_steps + 1)
    junction_values = np.empty(n_steps + 1)
    times[0], junction_values[0] = initial.t, initial.junction
    seen = box.copy()
    for k in range(1, n_steps + 1):
        state = step(state, dt, flux, ham, grid)
        times[k], junction_values[k] = state.t, state.junction
        rng = gradient_range(state, grid)
        if np.any(rng[:, 0] < seen[:, 0] - 1e-12) or np.any(rng[:, 1] > seen[:, 1] + 1e-12):
            seen = np.column_stack([np.minimum(seen[:, 0], rng[:, 0]), np.maximum(seen[:, 1], rng[:, 1])])
            limit = stable_dt(grid, ham, flux, seen, config.cfl)
            if dt > limit * (1 + 1e-9):
                raise CFLViolation(
                    f"at t={state.t:.6g} gradients reached {seen.tolist()}, needing dt <= {limit:.6g} (dt={dt:.6g})"
                )
        if k in wanted and k != n_steps:
            states.append(state)
    if states[-1] is not state:
        states.append(state)
    return Trajectory(grid, dt, states, times, junction_values, seen)


def junction_time_slope(trajectory: Trajectory) -> float:
    """``-u_t(T, 0)`` from the last two time steps."""
    if trajectory.times.size < 2:
        raise ValueError("need at least two time levels")
    t, u = trajectory.times, trajectory.junction_values
    return float(-(u[-1] - u[-2]) / (t[-1] - t[-2]))
