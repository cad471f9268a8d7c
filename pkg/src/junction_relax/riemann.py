"""Riemann problems at the junction and the gradient ``p_hat`` they select.

Starting from ``u0 = p^alpha x`` the solution is self-similar,
``u(t, x) = t W^alpha(x / t)``, and the junction value decreases at rate
``F(p)`` where ``F`` is the effective junction function.  At the junction
the profile leaves with slope ``p_hat``, a point of the germ of ``F``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .hamiltonians import COMPARISON_TOL, level_crossing
from .junction import JunctionFunction, JunctionHamiltonian
from .relaxation import Relaxed, relax
from .solver import (
    EvolutionState,
    JunctionGrid,
    SchemeConfig,
    junction_time_slope,
    make_junction_flux,
    max_rate,
    run,
)

GERM_TOL = 1e-9


class NotSuperRelaxed(ValueError):
    pass


def hat_p(f: JunctionFunction, ham: JunctionHamiltonian, p) -> np.ndarray:
    """Gradient reached at the junction by the Riemann solution from ``p``.

    ``f`` must be an effective (relaxed) junction function.  On each branch
    ``p_hat`` is ``p`` when ``H(p) = F(p)``, the first crossing of level
    ``F(p)`` to the right when ``H(p)`` is lower, and to the left when it is
    higher.
    """
    p = np.asarray(p, dtype=float).reshape(-1)
    lam = float(f(p[None, :])[0])
    out = p.copy()
    for a, h in enumerate(ham):
        hp = float(h(p[a]))
        if abs(hp - lam) <= COMPARISON_TOL * max(1.0, abs(lam)):
            continue
        direction = "rightward" if hp < lam else "leftward"
        out[a] = float(level_crossing(h, p[a], lam, direction))
        if not np.isfinite(out[a]):
            raise NotSuperRelaxed(
                f"branch {a + 1}: no crossing of level {lam} left of {p[a]}; the junction function is not super-relaxed"
            )
    return out


def germ_check(f: JunctionFunction, ham: JunctionHamiltonian, q, tol: float = GERM_TOL) -> bool:
    """Whether ``F(q) = H^alpha(q^alpha)`` on every branch."""
    q = np.asarray(q, dtype=float).reshape(-1)
    lam = float(f(q[None, :])[0])
    return bool(np.all(np.abs(ham.values(q)[0] - lam) <= tol))


def convexity_flag(values: np.ndarray, slack: float = 1e-8) -> str:
    """``affine``, ``convex``, ``concave`` or ``mixed`` from discrete second differences."""
    d2 = np.diff(values, 2)
    up, down = bool(np.all(d2 >= -slack)), bool(np.all(d2 <= slack))
    if up and down:
        return "affine"
    return "convex" if up else "concave" if down else "mixed"


@dataclass(frozen=True)
class RiemannSolution:
    p: np.ndarray
    effective_value: float
    relaxed_value: float
    p_hat: np.ndarray
    p_hat_exact: np.ndarray
    xi: np.ndarray
    profiles: np.ndarray  # (n, len(xi)), W^alpha(xi)
    convexity: tuple[str, ...]
    self_similarity_residual: float
    dx: float
    dt: float
    T: float

    @property
    def value_error(self) -> float:
        return abs(self.effective_value - self.relaxed_value)

    @property
    def p_hat_error(self) -> float:
        return float(np.max(np.abs(self.p_hat - self.p_hat_exact)))

    def summary(self) -> dict:
        return {
            "p": self.p.tolist(),
            "effective_value": self.effective_value,
            "relaxed_value": self.relaxed_value,
            "value_error": self.value_error,
            "p_hat": self.p_hat.tolist(),
            "p_hat_exact": self.p_hat_exact.tolist(),
            "convexity": list(self.convexity),
            "self_similarity_residual": self.self_similarity_residual,
            "resolution": {"dx": self.dx, "dt": self.dt, "T": self.T},
        }

    def write_profiles(self, path: str | Path) -> Path:
        """CSV with columns ``branch, xi, W``."""
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["branch", "xi", "W"])
            for a, row in enumerate(self.profiles):
                for x, v in zip(self.xi, row):
                    w.writerow([a + 1, repr(float(x)), repr(float(v))])
        return path

    def write_summary(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.summary(), indent=2))
        return path


def solve_riemann(
    f0: JunctionFunction,
    ham: JunctionHamiltonian,
    p,
    dx: float = 1 / 200,
    T: float = 1.0,
    cfl: float = 0.9,
    junction_flux: str = "strong_relaxed",
) -> RiemannSolution:
    """Run the junction scheme from ``u0 = p^alpha x`` and read off the Riemann data.

    Each branch holds more cells than the run has time steps, and the far
    end is pinned to the planar solution: an explicit three-point scheme
    moves information by one cell per step, so the pin is exact.  The
    junction time slope is taken from the last step, ``p_hat`` from the
    second-order one-sided slope at the junction, and self-similarity is
    measured as ``max |u(T, 2x) - 2 u(T/2, x)| / (1 + |x|)``.
    """
    p = np.asarray(p, dtype=float).reshape(-1)
    relaxed = Relaxed(f0, ham)
    rv = relax(f0, ham, p)
    p_hat_exact = hat_p(relaxed, ham, p)
    box = np.column_stack([np.minimum(p, p_hat_exact), np.maximum(p, p_hat_exact)])
    config = SchemeConfig(junction_flux=junction_flux, cfl=cfl)
    flux = make_junction_flux(f0, ham, config)
    # the scheme moves information one cell per step, so the pinned end stays exact
    steps = math.ceil(T * max_rate(ham, flux, box) / (cfl * dx)) + 1
    grid = JunctionGrid(ham.n, steps + 3, dx, "planar_pin", tuple(p))
    initial = EvolutionState.from_profile(grid, lambda a, x: p[a] * x)
    traj = run(initial, f0, ham, grid, config, T, output_times=(T / 2,), gradient_box=box, flux=flux)

    final = traj.final
    u = final.profiles()
    slopes_hat = (-3 * u[:, 0] + 4 * u[:, 1] - u[:, 2]) / (2 * dx)
    half = traj.state_at(T / 2).profiles()
    m = (u.shape[1] - 1) // 2 + 1
    x_half = grid.x[:m]
    residual = np.abs(u[:, 0 : 2 * m - 1 : 2] - 2 * half[:, :m]) / (1 + x_half)
    xi = grid.x / T
    profiles = u / T
    return RiemannSolution(
        p=p,
        effective_value=junction_time_slope(traj),
        relaxed_value=rv.value,
        p_hat=slopes_hat,
        p_hat_exact=p_hat_exact,
        xi=xi,
        profiles=profiles,
        convexity=tuple(convexity_flag(row) for row in profiles),
        self_similarity_residual=float(residual.max()),
        dx=dx,
        dt=traj.dt,
        T=T,
    )


def observed_order(errors, spacings) -> float:
    """Least-squares slope of ``log(error)`` against ``log(dx)``.

    Returns ``inf`` when every error is at rounding level, meaning the
    scheme reproduces the value exactly at all resolutions.
    """
    e = np.asarray(errors, dtype=float)
    h = np.asarray(spacings, dtype=float)
    if np.all(e <= 1e-12):
        return math.inf
    e = np.maximum(e, 1e-15)
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])
