"""Running the scheme with the raw junction function instead of its relaxation.

The raw condition F0 = 2 - p is not what weak solutions satisfy, but a
monotone scheme that uses it converges to the same solution as the scheme
with the relaxed flux: the gap between the two shrinks linearly with dx.
Run with ``python demos/weak_versus_strong.py``.
"""

from __future__ import annotations

import numpy as np

from junction_relax import AffineMonotone, EvolutionState, JunctionGrid, JunctionHamiltonian, SchemeConfig, run
from junction_relax.solver import make_junction_flux, stable_dt
from junction_relax.standard import absolute_value

ham = JunctionHamiltonian([absolute_value()])
f0 = AffineMonotone(2.0, [1.0])
box = np.array([[-3.0, 3.0]])

print(f"{'dx':>8} {'sup gap at T=1':>16} {'junction (raw)':>16} {'junction (relaxed)':>20}")
for dx in (1 / 50, 1 / 100, 1 / 200, 1 / 400):
    grid = JunctionGrid(1, int(round(2 / dx)), dx)
    initial = EvolutionState.from_profile(grid, lambda a, x: 0.5 * np.sin(3 * x))
    dt = min(
        stable_dt(grid, ham, make_junction_flux(f0, ham, SchemeConfig(junction_flux=m)), box, 0.9)
        for m in ("strong_relaxed", "raw_F0")
    )
    strong = run(initial, f0, ham, grid, SchemeConfig(dt=dt), 1.0, gradient_box=box)
    weak = run(initial, f0, ham, grid, SchemeConfig(dt=dt, junction_flux="raw_F0"), 1.0, gradient_box=box)
    gap = np.abs(strong.final.profiles() - weak.final.profiles()).max()
    print(f"{dx:>8.4f} {gap:>16.2e} {weak.final.junction:>16.6f} {strong.final.junction:>20.6f}")
