"""Effective junction conditions for Hamilton-Jacobi equations on a junction.

A junction is N half-lines glued at one point, each carrying a coercive
piecewise-linear Hamiltonian ``H^alpha``.  A desired junction condition
``u_t + F0(u_x) = 0`` is generally not what viscosity solutions satisfy; the
condition they do satisfy is the relaxation ``R F0``.  This package computes
``R F0`` three ways (semi-relaxation fixed points, Riemann problems, an
explicit limiter tensor), and ships a monotone finite-difference scheme to
observe it in time-dependent runs.

Examples
--------
>>> from junction_relax import JunctionHamiltonian, Constant, relax
>>> from junction_relax.standard import absolute_value
>>> ham = JunctionHamiltonian([absolute_value()])
>>> round(relax(Constant(1.0), ham, [-3.0]).value, 12)
3.0
>>> round(relax(Constant(1.0), ham, [2.0]).value, 12)
1.0
"""

from __future__ import annotations

from types import ModuleType as _ModuleType

from .hamiltonians import (
    BranchHamiltonian,
    ExtremaProfile,
    PiecewiseLinear,
    extrema,
    godunov_flux,
    level_crossing,
    lower_monotone_hull,
    range_min_max,
)
from .junction import (
    AffineMonotone,
    Constant,
    DimensionMismatch,
    EpsilonGraph,
    FluxLimiter,
    JunctionFunction,
    JunctionHamiltonian,
    MonotonicityViolation,
    NonincreasingHull,
    PointwiseMax,
    PointwiseMin,
    TabulatedMonotone,
    audit_monotonicity,
    big_h_minus,
    eval_junction,
    h_min_max,
    restrict_to_branch,
    semi_coercify,
)
from .limiters import LimiterTensor, build_limiter_tensor, explicit_relax_eval, p_minus
from .relaxation import (
    CommutationError,
    NotSemiCoercive,
    Relaxed,
    RelaxationValue,
    brute_force_relax,
    characterization_points,
    classify_characteristic,
    godunov_relax,
    is_relaxed,
    relax,
    relax_batch,
    sub_relax,
    super_relax,
    tabulate_relaxation,
)
from .riemann import RiemannSolution, germ_check, hat_p, solve_riemann
from .solver import (
    CFLViolation,
    EvolutionState,
    JunctionGrid,
    SchemeConfig,
    gradient_range,
    junction_time_slope,
    planar_profile,
    run,
    sawtooth_profile,
    step,
)

__all__ = [
    name
    for name, obj in list(globals().items())
    if not name.startswith("_") and name != "annotations" and not isinstance(obj, _ModuleType)
]
