"""When do discrete slopes stay in a box?

Starting from a sawtooth with slopes +-1 on u_t + |u_x| = 0, the
flux-limited condition with A = 1 keeps every slope in [-1, 1] for all
time.  With A = 2 the junction value falls faster than its neighbours and
the slope next to the junction climbs to 2.
Run with ``python demos/gradient_box.py``.
"""

from __future__ import annotations

from junction_relax import EvolutionState, FluxLimiter, JunctionGrid, JunctionHamiltonian, SchemeConfig, run, sawtooth_profile
from junction_relax.standard import absolute_value

ham = JunctionHamiltonian([absolute_value()])
grid = JunctionGrid(1, 200, 1 / 100)
initial = EvolutionState.from_profile(grid, sawtooth_profile(1.0, 0.5))

for A in (1.0, 1.5, 2.0):
    traj = run(initial, FluxLimiter(A, ham), ham, grid, SchemeConfig(), 1.0, gradient_box=[[-1.0, 1.0]])
    lo, hi = traj.max_gradient_box[0]
    inside = lo >= -1 - 1e-12 and hi <= 1 + 1e-12
    print(f"A = {A}: slopes seen in [{lo:+.6f}, {hi:+.6f}] -> {'stays in' if inside else 'leaves'} [-1, 1]")
