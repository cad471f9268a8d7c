"""Relaxation of junction functions.

Three routes compute the effective junction function of ``F0``:

* the sub-relaxation ``sup_{q >= p} min(F0(q), H_min(q))`` and the
  super-relaxation ``inf_{q <= p} max(F0(q), H_max(q))``, each obtained as
  the fixed point of a one-sided Godunov semi-flux, and composed in either
  order (:func:`relax`);
* the fixed point of the full Godunov flux (:func:`godunov_relax`);
* exhaustive search on a grid (:func:`brute_force_relax`), used as an
  independent oracle.

Each fixed point is a scalar level ``lam`` together with a witness gradient
``q`` such that ``lam = F0(q)`` and every ``q^alpha`` sits on the level set
of ``H^alpha`` reached from ``p^alpha``.  For a trial level the witness is
obtained exactly from piecewise-linear level crossings, and ``lam - F0(q)``
is nondecreasing in ``lam``, so a bracketed root solve finds it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .hamiltonians import first_below, last_below, level_crossing
from .junction import (
    DimensionMismatch,
    JunctionFunction,
    JunctionHamiltonian,
    TabulatedMonotone,
    _as_batch,
    semi_coercify,
)
from .roots import solve_increasing

COMMUTATION_TOL = 1e-9

Method = Literal[
    "semiflux_lower",
    "semiflux_upper",
    "semiflux_full",
    "composed",
    "brute_force",
    "explicit_tensor",
    "riemann",
]


class NotSemiCoercive(ValueError):
    """Raised when a fixed-point search runs off to ``-inf`` gradients on a
    function that stays finite there.  Wrap the input with ``semi_coercify``."""


class CommutationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class RelaxationValue:
    value: float
    witness: np.ndarray = field(repr=False)
    method: Method

    def __post_init__(self) -> None:
        object.__setattr__(self, "witness", np.asarray(self.witness, dtype=float))


# ----------------------------------------------------------------------
# helpers


def _check_dims(f0: JunctionFunction, ham: JunctionHamiltonian) -> None:
    if f0.dim != ham.n:
        raise DimensionMismatch(f"junction function has {f0.dim} inputs, junction has {ham.n} branches")


def _crossings(ham: JunctionHamiltonian, P: np.ndarray, lam: np.ndarray, direction: str) -> np.ndarray:
    return np.column_stack(
        [level_crossing(h, P[:, a], lam, direction) for a, h in enumerate(ham.branches)]
    )


def _eval_semi_coercive(f: JunctionFunction, Q: np.ndarray) -> np.ndarray:
    vals = f._evaluate(Q)
    off_grid = np.any(Q == -np.inf, axis=1)
    if np.any(off_grid & np.isfinite(vals)):
        raise NotSemiCoercive(
            "the fixed-point search reached gradients at -inf where the junction "
            "function stays finite; apply semi_coercify first"
        )
    return vals


def _fixed_point(f, ham, P, lo, hi, witness_of):
    """Solve ``lam = f(witness_of(lam))`` row by row on the given brackets."""

    def residual(lam, rows):
        return lam - _eval_semi_coercive(f, witness_of(lam, rows))

    # crossings jump when the level passes a local extremum value of some
    # H^alpha, or passes H^alpha(p^alpha) itself
    shared = _jump_levels(ham)
    levels = np.hstack((np.broadcast_to(shared, (P.shape[0], shared.size)), ham.values(P)))
    lo_f, hi_f = solve_increasing(residual, lo, hi, jump_levels=levels)
    value = 0.5 * (lo_f + hi_f)
    rows = np.arange(P.shape[0])
    return value, witness_of(hi_f, rows)


def _jump_levels(ham: JunctionHamiltonian) -> np.ndarray:
    cached = getattr(ham, "_jump_levels", None)
    if cached is None:
        parts = [np.concatenate((h.extrema.min_values, h.extrema.max_values)) for h in ham]
        cached = np.unique(np.concatenate(parts))
        ham._jump_levels = cached
    return cached


def _split_infinite(P: np.ndarray):
    finite = np.all(np.isfinite(P), axis=1)
    if np.any(P == np.inf):
        raise ValueError("gradients at +inf are not supported")
    return finite


def _batched(solver):
    """Run ``solver`` on finite rows only; rows holding ``-inf`` evaluate to ``+inf``."""

    def wrapper(f, ham, p):
        _check_dims(f, ham)
        P = _as_batch(p, ham.n)
        finite = _split_infinite(P)
        values = np.full(P.shape[0], np.inf)
        witnesses = P.copy()
        if np.any(finite):
            v, w = solver(f, ham, P[finite])
            values[finite], witnesses[finite] = v, w
        return values, witnesses

    wrapper.__doc__ = solver.__doc__
    wrapper.__name__ = solver.__name__
    return wrapper


# ----------------------------------------------------------------------
# semi-flux fixed points


@_batched
def sub_relax_batch(f, ham, P):
    """Lower semi-flux fixed point for every row of ``P``; returns ``(values, witnesses)``."""
    fp = f._evaluate(P)
    hmin = ham.values(P).min(axis=1)
    lo, hi = np.minimum(fp, hmin), fp

    def witness_of(lam, rows):
        return _crossings(ham, P[rows], lam, "rightward")

    return _fixed_point(f, ham, P, lo, hi, witness_of)


@_batched
def super_relax_batch(f, ham, P):
    """Upper semi-flux fixed point for every row of ``P``; returns ``(values, witnesses)``."""
    fp = f._evaluate(P)
    hmax = ham.values(P).max(axis=1)
    lo, hi = fp, np.maximum(fp, hmax)

    def witness_of(lam, rows):
        return _crossings(ham, P[rows], lam, "leftward")

    return _fixed_point(f, ham, P, lo, hi, witness_of)


@_batched
def godunov_relax_batch(f, ham, P):
    """Full Godunov flux fixed point for every row of ``P``; returns ``(values, witnesses)``.

    On each branch the witness is the preimage of ``lam`` under
    ``q -> G(q, p)`` closest to ``p``: a rightward crossing when ``lam``
    exceeds ``H(p)``, a leftward one otherwise.
    """
    fp = f._evaluate(P)
    hv = ham.values(P)
    lo = np.minimum(fp, hv.min(axis=1))
    hi = np.maximum(fp, hv.max(axis=1))

    def witness_of(lam, rows):
        Pr = P[rows]
        up = _crossings(ham, Pr, lam, "rightward")
        down = _crossings(ham, Pr, lam, "leftward")
        return np.where(hv[rows] < lam[:, None], up, down)

    return _fixed_point(f, ham, P, lo, hi, witness_of)


def _single(batch_fn, method: Method):
    def run(f0: JunctionFunction, ham: JunctionHamiltonian, p) -> RelaxationValue:
        values, witnesses = batch_fn(f0, ham, np.atleast_1d(np.asarray(p, dtype=float)))
        return RelaxationValue(float(values[0]), witnesses[0], method)

    return run


_sub_single = _single(sub_relax_batch, "semiflux_lower")
_super_single = _single(super_relax_batch, "semiflux_upper")
_godunov_single = _single(godunov_relax_batch, "semiflux_full")


def sub_relax(f0: JunctionFunction, ham: JunctionHamiltonian, p) -> RelaxationValue:
    """Sub-relaxation at ``p`` with witness ``q >= p`` attaining the supremum."""
    return _sub_single(f0, ham, p)


def super_relax(f0: JunctionFunction, ham: JunctionHamiltonian, p) -> RelaxationValue:
    """Super-relaxation at ``p`` with witness ``q <= p`` attaining the infimum.

    Raises :class:`NotSemiCoercive` if the infimum escapes to ``-inf``
    gradients for a function that does not blow up there.
    """
    return _super_single(f0, ham, p)


def godunov_relax(f0: JunctionFunction, ham: JunctionHamiltonian, p) -> RelaxationValue:
    """Godunov fixed point at ``p``; ``f0`` must be semi-coercive."""
    return _godunov_single(f0, ham, p)


# ----------------------------------------------------------------------
# relaxed functions as junction functions


class SubRelaxed(JunctionFunction):
    """Lazy sub-relaxation of a semi-coercive function."""

    family = "sub_relaxed"

    def __init__(self, base: JunctionFunction, ham: JunctionHamiltonian):
        _check_dims(base, ham)
        super().__init__(ham.n)
        self.base, self.ham = base, ham

    def _evaluate(self, P):
        return sub_relax_batch(self.base, self.ham, P)[0]

    def to_record(self):
        return {"family": self.family, "base": self.base.to_record()}


class SuperRelaxed(SubRelaxed):
    """Lazy super-relaxation of a semi-coercive function."""

    family = "super_relaxed"

    def _evaluate(self, P):
        return super_relax_batch(self.base, self.ham, P)[0]


class Relaxed(SubRelaxed):
    """The effective junction function of ``base``, evaluated on demand.

    Uses the Godunov fixed point of ``max(base, H_-)``, which is one root
    solve per gradient.
    """

    family = "relaxed"

    def __init__(self, base: JunctionFunction, ham: JunctionHamiltonian):
        super().__init__(base, ham)
        self.coercified = semi_coercify(base, ham)

    def _evaluate(self, P):
        return godunov_relax_batch(self.coercified, self.ham, P)[0]


def relax_batch(f0: JunctionFunction, ham: JunctionHamiltonian, p, tol: float = COMMUTATION_TOL):
    """Both composition orders of the semi-relaxations of ``max(F0, H_-)``.

    Returns ``(values, witnesses, gap)`` where ``gap`` is the absolute
    difference between the two orders.  Raises :class:`CommutationError`
    when the gap exceeds ``tol``.
    """
    _check_dims(f0, ham)
    P = _as_batch(p, ham.n)
    f = semi_coercify(f0, ham)
    sup_of_sub, witness = super_relax_batch(SubRelaxed(f, ham), ham, P)
    sub_of_sup, _ = sub_relax_batch(SuperRelaxed(f, ham), ham, P)
    gap = np.abs(sup_of_sub - sub_of_sup)
    if np.any(gap > tol):
        worst = int(np.argmax(gap))
        raise CommutationError(
            f"composition orders differ by {gap[worst]:.3e} at p={P[worst].tolist()}"
        )
    return sup_of_sub, witness, gap


def relax(f0: JunctionFunction, ham: JunctionHamiltonian, p, tol: float = COMMUTATION_TOL) -> RelaxationValue:
    """Effective junction value at ``p``.

    ``F0`` is first replaced by ``max(F0, H_-)`` (which has the same
    relaxation), then both orders of sub- and super-relaxation are computed
    and required to agree within ``tol``.  The witness belongs to the outer
    super-relaxation.
    """
    values, witnesses, _ = relax_batch(f0, ham, np.atleast_1d(np.asarray(p, dtype=float)), tol)
    return RelaxationValue(float(values[0]), witnesses[0], "composed")


def tabulate_relaxation(
    f0: JunctionFunction,
    ham: JunctionHamiltonian,
    lower: float,
    upper: float,
    coarse: int = 257,
    kink_tol: float = 1e-12,
    min_width: float = 1e-10,
) -> TabulatedMonotone:
    """Piecewise-linear table of the relaxation of a single-branch ``F0``.

    Starting from a uniform grid, every interval whose quarter, half and
    three-quarter points deviate from the chord by more than ``kink_tol`` is
    split, so the nodes end up bracketing every kink within ``min_width``.
    Below ``lower`` the table grows with the left tail slope of ``H``.
    """
    if ham.n != 1:
        raise ValueError("exact tabulation is only available for a single branch")
    evaluate = Relaxed(f0, ham)._evaluate
    xs = np.linspace(lower, upper, coarse)
    ys = evaluate(xs[:, None])
    while True:
        a, b = xs[:-1], xs[1:]
        fracs = np.array([0.25, 0.5, 0.75])
        probes = a[:, None] + fracs * (b - a)[:, None]
        vals = evaluate(probes.reshape(-1, 1)).reshape(probes.shape)
        chord = ys[:-1, None] + fracs * (ys[1:] - ys[:-1])[:, None]
        split = (np.abs(vals - chord).max(axis=1) > kink_tol) & (b - a > min_width)
        if not split.any():
            break
        xs = np.concatenate([xs, probes[split].ravel()])
        ys = np.concatenate([ys, vals[split].ravel()])
        order = np.argsort(xs)
        xs, ys = xs[order], ys[order]
    ys = np.minimum.accumulate(ys)  # remove rounding-level increases
    return TabulatedMonotone([xs], ys, lower_slope=-ham[0].left_slope)


# ----------------------------------------------------------------------
# brute-force oracle

BruteMode = Literal["lower", "upper", "full"]


def _axis(center: float, lower: float, upper: float, step: float) -> np.ndarray:
    below = int(np.ceil((center - lower) / step - 1e-9))
    above = int(np.ceil((upper - center) / step - 1e-9))
    return center + step * np.arange(-below, above + 1)


def _evaluate_on_mesh(fn, axes, chunk: int = 1 << 20) -> np.ndarray:
    shape = tuple(a.size for a in axes)
    total = int(np.prod(shape))
    out = np.empty(total)
    for start in range(0, total, chunk):
        idx = np.unravel_index(np.arange(start, min(start + chunk, total)), shape)
        Q = np.column_stack([axes[k][i] for k, i in enumerate(idx)])
        out[start : start + Q.shape[0]] = fn(Q)
    return out.reshape(shape)


def brute_force_relax(
    f0: JunctionFunction,
    ham: JunctionHamiltonian,
    p,
    box_margin: float = 0.25,
    grid_step: float = 1e-3,
    mode: BruteMode = "full",
    max_nodes: int = 60_000_000,
) -> RelaxationValue:
    """Grid search for the sub-relaxation, super-relaxation or their composition.

    The grid is anchored at ``p`` with spacing ``grid_step``.  Its extent
    comes from coercivity: past the last crossing of each ``H^alpha`` at the
    relevant height, the objective cannot improve, so truncating there is
    exact up to the grid resolution.  ``full`` tabulates ``min(F0, H_min)``,
    takes a running maximum towards larger gradients on every axis, then a
    running minimum of ``max(., H_max)`` towards smaller gradients.
    """
    _check_dims(f0, ham)
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.size != ham.n:
        raise DimensionMismatch("gradient has the wrong dimension")
    fp = float(f0(p))
    hv = ham.values(p)[0]
    hmax_p = float(hv.max())

    def lower_edges(level):
        return np.array([min(p[a], first_below(h, level)) - box_margin for a, h in enumerate(ham)])

    def upper_edges(level):
        return np.array([max(p[a], last_below(h, level)) + box_margin for a, h in enumerate(ham)])

    def sub_objective(Q):
        return np.minimum(f0._evaluate(Q), ham.values(Q).min(axis=1))

    def super_objective(Q):
        return np.maximum(f0._evaluate(Q), ham.values(Q).max(axis=1))

    if mode == "lower":
        lo, hi = p.copy(), upper_edges(fp)
    elif mode == "upper":
        lo, hi = lower_edges(max(fp, hmax_p)), p.copy()
    elif mode == "full":
        lo = lower_edges(max(fp, hmax_p))
        hi = upper_edges(float(f0(lo)))
    else:
        raise ValueError(f"unknown mode {mode!r}")

    axes = [_axis(p[a], lo[a], hi[a], grid_step) for a in range(ham.n)]
    nodes = int(np.prod([a.size for a in axes]))
    if nodes > max_nodes:
        raise MemoryError(f"brute-force grid would have {nodes} nodes (limit {max_nodes})")
    centre = tuple(int(np.argmin(np.abs(a - p[k]))) for k, a in enumerate(axes))

    if mode == "lower":
        vals = _evaluate_on_mesh(sub_objective, axes)
        flat = int(np.argmax(vals))
        value = vals.flat[flat]
    elif mode == "upper":
        vals = _evaluate_on_mesh(super_objective, axes)
        flat = int(np.argmin(vals))
        value = vals.flat[flat]
    else:
        sub = _evaluate_on_mesh(sub_objective, axes)
        for k in range(sub.ndim):
            sub = np.flip(np.maximum.accumulate(np.flip(sub, axis=k), axis=k), axis=k)
        hmax = _evaluate_on_mesh(lambda Q: ham.values(Q).max(axis=1), axes)
        outer = np.maximum(sub, hmax)
        region = outer[tuple(slice(0, c + 1) for c in centre)]
        flat_local = int(np.argmin(region))
        value = region.flat[flat_local]
        flat = int(np.ravel_multi_index(np.unravel_index(flat_local, region.shape), outer.shape))
    idx = np.unravel_index(flat, tuple(a.size for a in axes))
    witness = np.array([axes[k][i] for k, i in enumerate(idx)])
    return RelaxationValue(float(value), witness, "brute_force")


# ----------------------------------------------------------------------
# characterisations


def characterization_points(f: JunctionFunction, ham: JunctionHamiltonian, p, tie_tol: float = 1e-9):
    """``(p_bar, p_under)``: exit points of the sub/super-level sets of each
    ``H^alpha`` at height ``F(p)``, starting from ``p``.

    ``F`` is sub-relaxed iff it is constant on every box ``[p, p_bar]`` and
    super-relaxed iff it is constant on every ``[p_under, p]`` with
    ``p_under`` finite wherever ``H^alpha(p^alpha) > F(p)``.

    A branch whose ``H^alpha(p^alpha)`` is within ``tie_tol`` of ``F(p)`` is
    already on the level set and keeps ``p^alpha``; otherwise round-off in
    ``F(p)`` would decide which side of a well the crossing lands on.
    """
    _check_dims(f, ham)
    P = _as_batch(p, ham.n)
    lam = f._evaluate(P)
    p_bar = _crossings(ham, P, lam, "rightward")
    p_under = _crossings(ham, P, lam, "leftward")
    on_level = np.abs(ham.values(P) - lam[:, None]) <= tie_tol
    p_bar = np.where(on_level, P, p_bar)
    p_under = np.where(on_level, P, p_under)
    if np.ndim(p) <= 1:
        return p_bar[0], p_under[0]
    return p_bar, p_under


@dataclass(frozen=True)
class RelaxationAudit:
    sub_relaxed: bool
    super_relaxed: bool
    first_sub_failure: np.ndarray | None
    first_super_failure: np.ndarray | None
    points: int


def is_relaxed(
    f: JunctionFunction,
    ham: JunctionHamiltonian,
    sample_grid,
    tol: float = 1e-9,
    samples_per_box: int = 4,
    seed: int = 0,
) -> RelaxationAudit:
    """Check the box-constancy characterisations on a set of gradients.

    For a nonincreasing function, constancy on a box is equivalent to equal
    values at its two corners; a few random interior points are checked too.
    """
    P = _as_batch(sample_grid, ham.n)
    rng = np.random.default_rng(seed)
    lam = f._evaluate(P)
    p_bar, p_under = characterization_points(f, ham, P)

    def box_constant(corner, ok_rows):
        bad = ~ok_rows.copy()
        rows = np.flatnonzero(ok_rows)
        if rows.size == 0:
            return bad
        pts = [corner[rows]]
        for _ in range(samples_per_box):
            w = rng.uniform(size=(rows.size, ham.n))
            pts.append(P[rows] + w * (corner[rows] - P[rows]))
        for q in pts:
            bad[rows] |= np.abs(f._evaluate(q) - lam[rows]) > tol
        return bad

    sub_bad = box_constant(p_bar, np.all(np.isfinite(p_bar), axis=1))
    super_bad = box_constant(p_under, np.all(np.isfinite(p_under), axis=1))

    def first(mask):
        rows = np.flatnonzero(mask)
        return P[rows[0]].copy() if rows.size else None

    return RelaxationAudit(
        sub_relaxed=not sub_bad.any(),
        super_relaxed=not super_bad.any(),
        first_sub_failure=first(sub_bad),
        first_super_failure=first(super_bad),
        points=P.shape[0],
    )


@dataclass(frozen=True)
class CharacteristicClass:
    kind: Literal["both", "super", "sub", "neither"]
    epsilon_used: float
    consistent: bool | None = None


def classify_characteristic(
    f: JunctionFunction,
    ham: JunctionHamiltonian,
    p,
    eps_probe: float = 1e-3,
    strict: float = 1e-9,
    reference: JunctionFunction | None = None,
    probes: int = 16,
) -> CharacteristicClass:
    """Classify ``p`` as a super- and/or sub-characteristic point of ``F``.

    Both kinds need ``H^alpha(p^alpha) = F(p)`` on every branch.  Super means
    every ``H^alpha`` rises strictly just to the right of ``p^alpha``, sub
    means every ``H^alpha`` is strictly lower just to the left.  With
    ``reference = F0`` and ``F`` its relaxation, ``consistent`` reports
    whether ``F >= F0`` at super points and ``F <= F0`` at sub points.
    """
    p = np.asarray(p, dtype=float).reshape(-1)
    lam = float(f(p))
    hv = ham.values(p)[0]
    on_germ = bool(np.all(np.abs(hv - lam) <= strict))
    offsets = eps_probe * np.arange(1, probes + 1) / probes
    is_super = is_sub = False
    if on_germ:
        right = np.array([h(p[a] + offsets) for a, h in enumerate(ham)])
        left = np.array([h(p[a] - offsets) for a, h in enumerate(ham)])
        is_super = bool(np.all(right > hv[:, None] + strict))
        is_sub = bool(np.all(left < hv[:, None] - strict))
    kind = {(True, True): "both", (True, False): "super", (False, True): "sub"}.get(
        (is_super, is_sub), "neither"
    )
    consistent = None
    if reference is not None:
        f0p = float(reference(p))
        consistent = (not is_super or lam >= f0p - strict) and (not is_sub or lam <= f0p + strict)
    return CharacteristicClass(kind, eps_probe, consistent)
