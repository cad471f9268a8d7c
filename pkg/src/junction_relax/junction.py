"""Junction Hamiltonians and monotone junction functions.

A junction function maps the N one-sided gradients at the junction to a
real number and is nonincreasing in each of them.  Every family evaluates a
single gradient ``p`` of shape ``(N,)`` to a float and a stack of gradients
of shape ``(M, N)`` to an array of shape ``(M,)``.  Coordinates equal to
``-inf`` are allowed; semi-coercive functions return ``+inf`` there.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .hamiltonians import BranchHamiltonian, PiecewiseLinear, lower_monotone_hull


class DimensionMismatch(ValueError):
    pass


class MonotonicityViolation(ValueError):
    pass


class JunctionHamiltonian:
    """The ordered family of branch Hamiltonians ``H^1, ..., H^N``."""

    def __init__(self, branches: Sequence[BranchHamiltonian]):
        if len(branches) == 0:
            raise ValueError("a junction needs at least one branch")
        self.branches: tuple[BranchHamiltonian, ...] = tuple(
            b if b.label == i + 1 else b.with_label(i + 1) for i, b in enumerate(branches)
        )
        self.hulls: tuple[PiecewiseLinear, ...] = tuple(lower_monotone_hull(b) for b in self.branches)

    @property
    def n(self) -> int:
        return len(self.branches)

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, index: int) -> BranchHamiltonian:
        return self.branches[index]

    def __iter__(self):
        return iter(self.branches)

    def values(self, p) -> np.ndarray:
        """``H^alpha(p^alpha)`` column by column."""
        P = _as_batch(p, self.n)
        return np.column_stack([h(P[:, a]) for a, h in enumerate(self.branches)])

    def hull_values(self, p) -> np.ndarray:
        P = _as_batch(p, self.n)
        return np.column_stack([h(P[:, a]) for a, h in enumerate(self.hulls)])

    def to_record(self) -> list[dict]:
        return [b.to_record() for b in self.branches]

    @classmethod
    def from_record(cls, records: Sequence[dict]) -> "JunctionHamiltonian":
        return cls([BranchHamiltonian.from_record(r, i + 1) for i, r in enumerate(records)])


def _as_batch(p, n: int) -> np.ndarray:
    P = np.asarray(p, dtype=float)
    if P.ndim == 0 and n == 1:
        P = P.reshape(1, 1)
    elif P.ndim == 1:
        P = P.reshape(1, -1)
    if P.ndim != 2 or P.shape[1] != n:
        raise DimensionMismatch(f"expected gradients with {n} components, got shape {np.shape(p)}")
    return P


def _unbatch(p, values: np.ndarray):
    return float(values[0]) if np.ndim(p) <= 1 else values


def h_min_max(ham: JunctionHamiltonian, p):
    """``(min_alpha H^alpha(p^alpha), max_alpha H^alpha(p^alpha))``."""
    vals = ham.values(p)
    lo, hi = vals.min(axis=1), vals.max(axis=1)
    if np.ndim(p) <= 1:
        return float(lo[0]), float(hi[0])
    return lo, hi


def big_h_minus(ham: JunctionHamiltonian, p):
    """``max_alpha inf_{q <= p^alpha} H^alpha(q)``."""
    return _unbatch(p, ham.hull_values(p).max(axis=1))


class JunctionFunction(ABC):
    """Nonincreasing continuous map from N gradients to a real value."""

    family: str = "abstract"

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = int(dim)

    def __call__(self, p):
        P = _as_batch(p, self.dim)
        return _unbatch(p, np.asarray(self._evaluate(P), dtype=float).reshape(-1))

    @abstractmethod
    def _evaluate(self, P: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def to_record(self) -> dict: ...

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.to_record()})"


class Constant(JunctionFunction):
    family = "constant"

    def __init__(self, value: float, dim: int = 1):
        super().__init__(dim)
        self.value = float(value)

    def _evaluate(self, P):
        return np.full(P.shape[0], self.value)

    def to_record(self):
        return {"family": self.family, "value": self.value, "dim": self.dim}


class AffineMonotone(JunctionFunction):
    """``a - sum_alpha b^alpha p^alpha`` with every ``b^alpha >= 0``."""

    family = "affine"

    def __init__(self, a: float, b: Sequence[float]):
        coeffs = np.atleast_1d(np.asarray(b, dtype=float))
        if np.any(coeffs < 0):
            raise MonotonicityViolation("affine coefficients must be nonnegative")
        super().__init__(coeffs.size)
        self.a = float(a)
        self.b = coeffs

    def _evaluate(self, P):
        with np.errstate(invalid="ignore"):
            terms = np.where(self.b == 0, 0.0, self.b * P)
        return self.a - terms.sum(axis=1)

    def to_record(self):
        return {"family": self.family, "a": self.a, "b": self.b.tolist()}


class NonincreasingHull(JunctionFunction):
    """``H_-``: the largest of the branch lower envelopes."""

    family = "hull"

    def __init__(self, ham: JunctionHamiltonian):
        super().__init__(ham.n)
        self.ham = ham

    def _evaluate(self, P):
        return self.ham.hull_values(P).max(axis=1)

    def to_record(self):
        return {"family": self.family}


class FluxLimiter(JunctionFunction):
    """``max(A, H_-)``."""

    family = "flux_limiter"

    def __init__(self, limiter: float, ham: JunctionHamiltonian):
        super().__init__(ham.n)
        self.limiter = float(limiter)
        self.ham = ham

    def _evaluate(self, P):
        return np.maximum(self.limiter, self.ham.hull_values(P).max(axis=1))

    def to_record(self):
        return {"family": self.family, "A": self.limiter}


class EpsilonGraph(JunctionFunction):
    """Single-branch penalisation ``A - (p - A) / eps`` of the graph ``p = A``."""

    family = "epsilon_graph"

    def __init__(self, limiter: float, epsilon: float):
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        super().__init__(1)
        self.limiter = float(limiter)
        self.epsilon = float(epsilon)

    def _evaluate(self, P):
        return self.limiter - (P[:, 0] - self.limiter) / self.epsilon

    def to_record(self):
        return {"family": self.family, "A": self.limiter, "epsilon": self.epsilon}


class TabulatedMonotone(JunctionFunction):
    """Multilinear interpolant of gridded values.

    Outside the grid the value is continued as a constant above and grows
    linearly with ``lower_slope`` per unit of distance below, which keeps the
    function monotone and, for ``lower_slope > 0``, semi-coercive.
    """

    family = "tabulated"

    def __init__(self, grid: Sequence[Sequence[float]], values, lower_slope: float = 1.0, tol: float = 1e-12):
        axes = tuple(np.asarray(g, dtype=float) for g in grid)
        vals = np.asarray(values, dtype=float)
        super().__init__(len(axes))
        if vals.shape != tuple(a.size for a in axes):
            raise ValueError(f"values shape {vals.shape} does not match the grid")
        if lower_slope < 0:
            raise MonotonicityViolation("lower continuation slope must be nonnegative")
        for axis in range(vals.ndim):
            rise = np.diff(vals, axis=axis)
            if rise.size and rise.max() > tol:
                idx = np.unravel_index(int(np.argmax(rise)), rise.shape)
                raise MonotonicityViolation(
                    f"tabulated values increase by {rise.max():.3g} along axis {axis} at index {idx}"
                )
        self.axes = axes
        self.values = vals
        self.lower_slope = float(lower_slope)
        self._lo = np.array([a[0] for a in axes])
        self._hi = np.array([a[-1] for a in axes])
        self._interp = RegularGridInterpolator(axes, vals, method="linear")

    def _evaluate(self, P):
        clipped = np.clip(P, self._lo, self._hi)
        base = self._interp(clipped)
        below = np.maximum(self._lo - P, 0.0)
        if self.lower_slope == 0.0:
            return base
        return base + self.lower_slope * below.sum(axis=1)

    def to_record(self):
        return {
            "family": self.family,
            "grid": [a.tolist() for a in self.axes],
            "values": self.values.tolist(),
            "lower_slope": self.lower_slope,
        }


class PointwiseMax(JunctionFunction):
    family = "max"

    def __init__(self, terms: Sequence[JunctionFunction]):
        dims = {t.dim for t in terms}
        if len(dims) != 1:
            raise DimensionMismatch(f"terms have dimensions {sorted(dims)}")
        super().__init__(dims.pop())
        self.terms = tuple(terms)

    def _evaluate(self, P):
        return np.max([t._evaluate(P) for t in self.terms], axis=0)

    def to_record(self):
        return {"family": self.family, "terms": [t.to_record() for t in self.terms]}


class PointwiseMin(PointwiseMax):
    family = "min"

    def _evaluate(self, P):
        return np.min([t._evaluate(P) for t in self.terms], axis=0)


class SemiCoercified(PointwiseMax):
    """``max(F0, H_-)``; grows to ``+inf`` as any gradient tends to ``-inf``."""

    family = "semi_coercified"

    def __init__(self, inner: JunctionFunction, ham: JunctionHamiltonian):
        super().__init__([inner, NonincreasingHull(ham)])
        self.inner = inner

    def to_record(self):
        return {"family": self.family, "inner": self.inner.to_record()}


class Restricted(JunctionFunction):
    """One-variable slice ``q -> F(p^1, .., q, .., p^N)`` through branch ``index``."""

    family = "restricted"

    def __init__(self, base: JunctionFunction, p: Sequence[float], index: int):
        super().__init__(1)
        self.base = base
        self.point = np.asarray(p, dtype=float).copy()
        if self.point.shape != (base.dim,):
            raise DimensionMismatch("base point has the wrong dimension")
        if not 0 <= index < base.dim:
            raise IndexError(f"branch index {index} out of range")
        self.index = int(index)

    def _evaluate(self, P):
        full = np.repeat(self.point[None, :], P.shape[0], axis=0)
        full[:, self.index] = P[:, 0]
        return self.base._evaluate(full)

    def to_record(self):
        return {
            "family": self.family,
            "base": self.base.to_record(),
            "point": self.point.tolist(),
            "index": self.index,
        }


def eval_junction(f0: JunctionFunction, ham: JunctionHamiltonian, p):
    if f0.dim != ham.n:
        raise DimensionMismatch(f"junction function has {f0.dim} inputs, junction has {ham.n} branches")
    return f0(p)


def semi_coercify(f0: JunctionFunction, ham: JunctionHamiltonian) -> SemiCoercified:
    if isinstance(f0, SemiCoercified) and f0.terms[1].ham is ham:
        return f0
    if f0.dim != ham.n:
        raise DimensionMismatch(f"junction function has {f0.dim} inputs, junction has {ham.n} branches")
    return SemiCoercified(f0, ham)


def restrict_to_branch(f0: JunctionFunction, p: Sequence[float], index: int) -> Restricted:
    """Freeze every gradient except the one on branch ``index`` (0-based)."""
    return Restricted(f0, p, index)


@dataclass(frozen=True)
class MonotonicityAudit:
    pairs: int
    violations: int
    worst_increase: float
    seed: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


def audit_monotonicity(
    f0: JunctionFunction,
    lower: Sequence[float],
    upper: Sequence[float],
    pairs: int = 1000,
    seed: int = 0,
    tol: float = 1e-12,
) -> MonotonicityAudit:
    """Check ``F(q) >= F(p)`` on random ordered pairs ``q <= p`` inside a box."""
    rng = np.random.default_rng(seed)
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    a = rng.uniform(lo, hi, size=(pairs, f0.dim))
    b = rng.uniform(lo, hi, size=(pairs, f0.dim))
    q, p = np.minimum(a, b), np.maximum(a, b)
    increase = f0(p) - f0(q)
    bad = increase > tol
    return MonotonicityAudit(pairs, int(bad.sum()), float(max(increase.max(), 0.0)), seed)


def junction_from_record(record: dict, ham: JunctionHamiltonian) -> JunctionFunction:
    """Rebuild a junction function from its tagged record."""
    family = record.get("family")
    if family == "constant":
        return Constant(record["value"], record.get("dim", ham.n))
    if family == "affine":
        return AffineMonotone(record["a"], record["b"])
    if family == "hull":
        return NonincreasingHull(ham)
    if family == "flux_limiter":
        return FluxLimiter(record["A"], ham)
    if family == "epsilon_graph":
        return EpsilonGraph(record["A"], record["epsilon"])
    if family == "tabulated":
        return TabulatedMonotone(record["grid"], record["values"], record.get("lower_slope", 1.0))
    if family in ("max", "min"):
        terms = [junction_from_record(t, ham) for t in record["terms"]]
        return PointwiseMax(terms) if family == "max" else PointwiseMin(terms)
    if family == "semi_coercified":
        return SemiCoercified(junction_from_record(record["inner"], ham), ham)
    if family == "restricted":
        return Restricted(junction_from_record(record["base"], ham), record["point"], record["index"])
    raise ValueError(f"unknown junction function family {family!r}")
