"""Four different-looking junction conditions over u_t + |u_x| = 0 that act the same.

The flux-limited condition, a plain constant, an affine condition and a
steep epsilon-graph all relax to the same effective junction function, so
weak solutions cannot tell them apart.  Run with ``python demos/equivalent_conditions.py``.
"""

from __future__ import annotations

import numpy as np

from junction_relax import AffineMonotone, Constant, EpsilonGraph, FluxLimiter, JunctionHamiltonian, relax_batch
from junction_relax.standard import absolute_value

ham = JunctionHamiltonian([absolute_value()])
A = 1.0
conditions = {
    "flux limited": FluxLimiter(A, ham),
    "constant": Constant(A),
    "affine 2A - p": AffineMonotone(2 * A, [1.0]),
    "eps-graph 0.01": EpsilonGraph(A, 0.01),
}
P = np.array([[-3.0], [-1.0], [-0.5], [0.0], [0.5], [2.0], [4.0]])

print("Raw junction values F0(p):")
print(f"{'p':>6} " + " ".join(f"{name:>15}" for name in conditions))
for p in P:
    print(f"{p[0]:>6.2f} " + " ".join(f"{float(f(p)):>15.4f}" for f in conditions.values()))

print("\nAfter relaxation every column is max(A, -p):")
relaxed = {name: relax_batch(f, ham, P)[0] for name, f in conditions.items()}
print(f"{'p':>6} " + " ".join(f"{name:>15}" for name in conditions))
for k, p in enumerate(P):
    print(f"{p[0]:>6.2f} " + " ".join(f"{relaxed[name][k]:>15.4f}" for name in conditions))

spread = max(np.ptp(np.column_stack(list(relaxed.values())), axis=1))
print(f"\nlargest disagreement between relaxed conditions: {spread:.1e}")
