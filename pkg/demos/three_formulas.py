"""One effective junction value, computed three independent ways.

On a junction of |p| and a double well with F0 = 0.5 - p1 - p2 we compare

* the fixed point of the Godunov semi-fluxes (``relax``),
* the explicit limiter-tensor formula, and
* the junction time slope of a numerical Riemann problem.

Run with ``python demos/three_formulas.py``.
"""

from __future__ import annotations

import numpy as np

from junction_relax import (
    AffineMonotone,
    JunctionHamiltonian,
    build_limiter_tensor,
    explicit_relax_eval,
    relax,
    solve_riemann,
)
from junction_relax.standard import absolute_value, double_well

ham = JunctionHamiltonian([absolute_value(), double_well()])
f0 = AffineMonotone(0.5, [1.0, 1.0])
tensor = build_limiter_tensor(f0, ham)
print("limiter tensor (rows: cells of |p|, columns: cells of the double well)")
print(tensor.A)

print(f"\n{'p':>18} {'fixed point':>12} {'tensor':>12} {'Riemann':>12} {'p_hat':>22}")
for p in ([0.0, 0.0], [-1.5, 0.5], [1.0, -2.0], [0.3, 1.8]):
    fixed = relax(f0, ham, p)
    explicit = explicit_relax_eval(tensor, ham, p)
    sol = solve_riemann(f0, ham, p, dx=1 / 100)
    print(
        f"{str(p):>18} {fixed.value:>12.6f} {explicit.value:>12.6f} {sol.effective_value:>12.6f} "
        f"{np.array2string(sol.p_hat_exact, precision=3):>22}"
    )

print("\nThe Riemann profile near the junction takes the slopes p_hat, which lie in the germ:")
sol = solve_riemann(f0, ham, [0.0, 0.0], dx=1 / 100)
for alpha, flag in enumerate(sol.convexity):
    print(f"  branch {alpha + 1}: profile {flag}, junction slope {sol.p_hat[alpha]:.4f} (exact {sol.p_hat_exact[alpha]:.4f})")
