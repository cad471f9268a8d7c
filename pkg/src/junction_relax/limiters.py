"""Explicit limiter tensor for the effective junction condition.

Each branch Hamiltonian splits the real line into cells ``[M_{k-1}, M_k]``
around its successive local minima ``m_k`` (with ``M_0 = -inf`` and
``M_n = +inf``).  A multi-index ``I`` picks one cell per branch.  For every
``I`` a single number ``A_I`` (the limiter) is computed from ``F0``; the
effective junction function is then recovered from the tensor ``A`` and the
decreasing pieces of the Hamiltonians alone, without touching ``F0`` again.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .hamiltonians import ExtremaProfile, level_crossing
from .junction import JunctionFunction, JunctionHamiltonian, _as_batch
from .relaxation import RelaxationValue
from .roots import solve_increasing

CASE_BELOW, CASE_ABOVE, CASE_CROSSING = 1, 2, 3


class LimiterRecursionError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class LimiterTensor:
    """Limiters ``A_I`` with their bounds and the per-branch extrema.

    Arrays are indexed by 0-based cell numbers, so ``A[i1, .., iN]`` is the
    limiter of the cell holding minimum ``m^alpha_{i_alpha + 1}``.
    """

    extrema: tuple[ExtremaProfile, ...]
    A: np.ndarray
    A0: np.ndarray
    B0: np.ndarray
    cases: np.ndarray
    crossing_points: np.ndarray
    sweeps: int

    @property
    def shape(self) -> tuple[int, ...]:
        return self.A.shape

    def is_monotone(self, tol: float = 1e-12) -> bool:
        """``A_I >= A_J`` whenever ``I <= J`` componentwise."""
        return all(
            np.all(np.diff(self.A, axis=k) <= tol) for k in range(self.A.ndim) if self.A.shape[k] > 1
        )

    def to_record(self) -> dict:
        return {
            "extrema": [
                {"minima": [list(m) for m in e.minima], "maxima": [list(m) for m in e.maxima]}
                for e in self.extrema
            ],
            "shape": list(self.A.shape),
            "A": self.A.ravel(order="C").tolist(),
            "A0": self.A0.ravel(order="C").tolist(),
            "B0": [b if np.isfinite(b) else None for b in self.B0.ravel(order="C").tolist()],
            "cases": self.cases.ravel(order="C").tolist(),
            "sweeps": self.sweeps,
        }


def _cell_bounds(ext: ExtremaProfile) -> tuple[np.ndarray, np.ndarray]:
    """Minima and the maxima padded with ``-inf``/``+inf`` at both ends."""
    return ext.min_points, np.concatenate(([-np.inf], ext.max_points, [np.inf]))


def build_limiter_tensor(f0: JunctionFunction, ham: JunctionHamiltonian) -> LimiterTensor:
    """Compute ``A_I`` for every cell multi-index.

    With ``m_I`` the vector of cell minima, ``M_I`` that of the upper cell
    maxima, ``A0_I = max_alpha H(m_I)`` and ``B0_I = min_alpha H(M_I)``:

    * if ``F0`` is below ``A0_I`` where every ``H^alpha`` first reaches
      ``A0_I`` right of ``m_I``, then ``A_I = min(A0_I, A_{I - e_alpha} ...)``;
    * if ``F0`` is above ``B0_I`` where every ``H^alpha`` first reaches
      ``B0_I``, then ``A_I = max(B0_I, A_{I + e_alpha} ...)``;
    * otherwise ``A_I`` is the common level ``F0(p) = H^alpha(p^alpha)``
      with ``p`` on the increasing pieces between ``m_I`` and ``M_I``.

    The first two rules refer to neighbouring cells; they are iterated as
    Jacobi sweeps until nothing changes, within a budget of as many sweeps
    as there are cells.
    """
    exts = tuple(h.extrema for h in ham)
    bounds = [_cell_bounds(e) for e in exts]
    shape = tuple(len(e.minima) for e in exts)
    A0 = np.empty(shape)
    B0 = np.empty(shape)
    cases = np.empty(shape, dtype=int)
    A = np.empty(shape)
    crossing = np.full(shape + (ham.n,), np.nan)

    for I in itertools.product(*(range(s) for s in shape)):
        m_I = np.array([bounds[a][0][i] for a, i in enumerate(I)])
        M_I = np.array([bounds[a][1][i + 1] for a, i in enumerate(I)])
        a0 = float(max(h(m_I[a]) for a, h in enumerate(ham)))
        b0 = float(min(h(M_I[a]) if np.isfinite(M_I[a]) else np.inf for a, h in enumerate(ham)))
        if a0 > b0:
            raise LimiterRecursionError(
                f"cell {I}: largest minimum value {a0} exceeds smallest maximum value {b0}"
            )
        A0[I], B0[I] = a0, b0
        cases[I], A[I], crossing[I] = _classify_cell(f0, ham, m_I, a0, b0)

    sweeps = _sweep(A, A0, B0, cases)
    return LimiterTensor(exts, A, A0, B0, cases, crossing, sweeps)


def _classify_cell(f0, ham, m_I, a0, b0):
    """Case, provisional limiter and crossing gradient of one cell.

    Along the rising pieces, ``p(lam)`` is the first point right of ``m_I``
    where each ``H^alpha`` reaches ``lam``, and ``lam - F0(p(lam))`` is
    nondecreasing.  Its sign at ``a0`` and ``b0`` decides the case; with one
    branch this is the comparison of ``F0`` with ``a0`` at ``m_I`` and with
    ``b0`` at ``M_I``.
    """
    nan = np.full(ham.n, np.nan)

    def rising(lam):
        lam = np.atleast_1d(lam)
        return np.column_stack([level_crossing(h, m_I[a], lam, "rightward") for a, h in enumerate(ham)])

    def residual(lam, rows=None):
        return np.atleast_1d(lam) - f0(rising(lam))

    if residual(a0)[0] > 0:
        return CASE_BELOW, a0, nan
    if np.isfinite(b0) and residual(b0)[0] < 0:
        return CASE_ABOVE, b0, nan
    if residual(a0)[0] == 0:
        lam = a0
    elif np.isfinite(b0) and residual(b0)[0] == 0:
        lam = b0
    else:
        hi = b0 if np.isfinite(b0) else max(a0, float(f0(m_I)))
        while residual(hi)[0] < 0:  # only reachable when b0 is infinite
            hi = 2 * hi - a0 + 1.0
        lo, hi = solve_increasing(residual, np.array([a0]), np.array([hi]))
        lam = float(0.5 * (lo[0] + hi[0]))
    return CASE_CROSSING, lam, rising(lam)[0]


def _sweep(A, A0, B0, cases) -> int:
    budget = int(np.prod(A.shape)) + 1
    below, above = cases == CASE_BELOW, cases == CASE_ABOVE
    for sweep in range(1, budget + 1):
        new = A.copy()
        lower_nb = np.full(A.shape, np.inf)
        upper_nb = np.full(A.shape, -np.inf)
        for k in range(A.ndim):
            shifted = np.full(A.shape, np.inf)
            dst = [slice(None)] * A.ndim
            src = [slice(None)] * A.ndim
            dst[k], src[k] = slice(1, None), slice(None, -1)
            shifted[tuple(dst)] = A[tuple(src)]
            lower_nb = np.minimum(lower_nb, shifted)
            shifted = np.full(A.shape, -np.inf)
            shifted[tuple(src)] = A[tuple(dst)]
            upper_nb = np.maximum(upper_nb, shifted)
        new[below] = np.minimum(A0, lower_nb)[below]
        new[above] = np.maximum(B0, upper_nb)[above]
        if np.array_equal(new, A):
            return sweep
        A[...] = new
    raise LimiterRecursionError(f"limiter recursion did not settle within {budget} sweeps")


def p_minus(tensor: LimiterTensor, ham: JunctionHamiltonian, cell, mu: float) -> np.ndarray:
    """Points on the decreasing pieces of cell ``cell`` where ``H^alpha = mu``.

    Per branch the result lies in ``[M_{k-1}, m_k]``: levels above
    ``H(M_{k-1})`` give ``M_{k-1}`` (``-inf`` for the first cell) and levels
    below ``H(m_k)`` give ``m_k``.  ``cell`` holds 0-based cell numbers.
    """
    out = np.empty(ham.n)
    for a, (h, e, k) in enumerate(zip(ham, tensor.extrema, cell)):
        mins, maxs = _cell_bounds(e)
        out[a] = _decreasing_inverse(h, mins[k], maxs[k], np.array([float(mu)]))[0]
    return out


def _decreasing_inverse(h, bottom, left, mu):
    # last point left of the minimum where H climbs back to mu
    point = -level_crossing(h.mirrored(), -np.asarray(bottom, dtype=float), mu, "rightward")
    return np.where(mu < h(bottom), bottom, np.maximum(point, left))


def _cell_index(tensor: LimiterTensor, P: np.ndarray) -> np.ndarray:
    # a gradient on a cell boundary belongs to the lower cell
    return np.column_stack(
        [np.searchsorted(e.max_points, P[:, a], side="left") for a, e in enumerate(tensor.extrema)]
    ).astype(int)


def explicit_relax_batch(tensor: LimiterTensor, ham: JunctionHamiltonian, p, iterations: int = 64) -> np.ndarray:
    """Effective junction values from the limiter tensor, for a batch of gradients.

    In the cell ``I`` holding ``p``, the value is the least ``mu`` such that
    for some ``g`` in ``{-1, 0}^N`` with ``A_{I+g} <= mu`` the gradient
    satisfies ``p^alpha <= p_minus^alpha(mu)`` where ``g^alpha = -1`` and
    ``p^alpha >= p_minus^alpha(mu)`` where ``g^alpha = 0``.  Membership is
    monotone in ``mu``, so bisection applies.
    """
    P = _as_batch(p, ham.n)
    cells = _cell_index(tensor, P)
    padded = np.pad(tensor.A, [(1, 0)] * ham.n, constant_values=np.inf)
    shifts = list(itertools.product((-1, 0), repeat=ham.n))
    limiter_of = {g: padded[tuple(cells[:, a] + g[a] + 1 for a in range(ham.n))] for g in shifts}
    bottoms = np.column_stack([_cell_bounds(e)[0][cells[:, a]] for a, e in enumerate(tensor.extrema)])
    lefts = np.column_stack([_cell_bounds(e)[1][cells[:, a]] for a, e in enumerate(tensor.extrema)])

    def member(mu):
        pm = np.column_stack(
            [_decreasing_inverse(h, bottoms[:, a], lefts[:, a], mu) for a, h in enumerate(ham)]
        )
        ok = np.zeros(P.shape[0], dtype=bool)
        for g in shifts:
            cond = limiter_of[g] <= mu
            for a in range(ham.n):
                cond &= (P[:, a] <= pm[:, a]) if g[a] == -1 else (P[:, a] >= pm[:, a])
            ok |= cond
        return ok

    floor = np.min([limiter_of[g] for g in shifts], axis=0)
    lo = floor - 1.0
    hi = np.maximum(tensor.A[tuple(cells.T)], ham.values(P).max(axis=1)) + 1.0
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        inside = member(mid)
        hi = np.where(inside, mid, hi)
        lo = np.where(inside, lo, mid)
    return hi


def explicit_relax_eval(tensor: LimiterTensor, ham: JunctionHamiltonian, p) -> RelaxationValue:
    p = np.asarray(p, dtype=float).reshape(-1)
    value = float(explicit_relax_batch(tensor, ham, p[None, :])[0])
    return RelaxationValue(value, p, "explicit_tensor")
