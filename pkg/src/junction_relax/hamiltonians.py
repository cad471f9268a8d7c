"""Exact calculus for continuous piecewise-linear Hamiltonians.

A :class:`PiecewiseLinear` function is stored as ordered breakpoints plus a
slope for each unbounded tail.  Every query used elsewhere in the package
(interval extrema, the Godunov flux, the nonincreasing lower envelope, level
crossings, local extrema) is answered exactly from that data, so the only
rounding comes from the final interpolation.

Most routines accept numpy arrays and broadcast, because the relaxation
solvers evaluate many gradients at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np

COMPARISON_TOL = 1e-12

Direction = Literal["rightward", "leftward"]


def _tail_value(anchor_x: float, anchor_y: float, slope: float, x: np.ndarray) -> np.ndarray:
    # Avoids 0 * inf = nan when a flat tail is evaluated at an infinite abscissa.
    if slope == 0.0:
        return np.full_like(x, anchor_y, dtype=float)
    with np.errstate(invalid="ignore"):
        return anchor_y + slope * (x - anchor_x)


@dataclass(frozen=True, eq=False)
class PiecewiseLinear:
    """Continuous piecewise-linear function on the real line.

    Parameters
    ----------
    xs, ys
        Breakpoint abscissas (strictly increasing) and values.
    left_slope, right_slope
        Slopes of the linear extensions to the left of ``xs[0]`` and to the
        right of ``xs[-1]``.
    """

    xs: np.ndarray
    ys: np.ndarray
    left_slope: float
    right_slope: float
    _segments: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        xs = np.array(self.xs, dtype=float).ravel()
        ys = np.array(self.ys, dtype=float).ravel()
        if xs.size == 0:
            raise ValueError("a piecewise-linear function needs at least one breakpoint")
        if xs.shape != ys.shape:
            raise ValueError("breakpoint abscissas and values differ in length")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ValueError("breakpoints must be finite")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("breakpoint abscissas must be strictly increasing")
        if not (np.isfinite(self.left_slope) and np.isfinite(self.right_slope)):
            raise ValueError("tail slopes must be finite")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "left_slope", float(self.left_slope))
        object.__setattr__(self, "right_slope", float(self.right_slope))
        object.__setattr__(self, "_segments", self._build_segments())

    @classmethod
    def from_points(
        cls, points: Sequence[tuple[float, float]], left_slope: float, right_slope: float
    ) -> "PiecewiseLinear":
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return cls(pts[:, 0], pts[:, 1], left_slope, right_slope)

    # ------------------------------------------------------------------
    # segments: one row per linear piece, tails included
    def _build_segments(self) -> tuple:
        xs, ys = self.xs, self.ys
        starts = np.concatenate(([-np.inf], xs))
        ends = np.concatenate((xs, [np.inf]))
        anchor_x = np.concatenate(([xs[0]], xs))
        anchor_y = np.concatenate(([ys[0]], ys))
        inner = np.diff(ys) / np.diff(xs) if xs.size > 1 else np.empty(0)
        slopes = np.concatenate(([self.left_slope], inner, [self.right_slope]))
        end_vals = np.concatenate((ys, [np.inf if self.right_slope > 0 else (
            -np.inf if self.right_slope < 0 else ys[-1])]))
        return starts, ends, anchor_x, anchor_y, slopes, end_vals

    @property
    def breakpoints(self) -> list[tuple[float, float]]:
        return [(float(x), float(y)) for x, y in zip(self.xs, self.ys)]

    @property
    def segment_slopes(self) -> np.ndarray:
        return self._segments[4]

    def __call__(self, x):
        arr = np.asarray(x, dtype=float)
        out = np.interp(arr, self.xs, self.ys)
        left = arr < self.xs[0]
        right = arr > self.xs[-1]
        if np.any(left):
            out = np.where(left, _tail_value(self.xs[0], self.ys[0], self.left_slope, arr), out)
        if np.any(right):
            out = np.where(right, _tail_value(self.xs[-1], self.ys[-1], self.right_slope, arr), out)
        return out if out.ndim else float(out)

    def reflected(self) -> "PiecewiseLinear":
        """Return ``x -> -f(-x)``, which maps leftward queries to rightward ones."""
        cached = self.__dict__.get("_reflected")
        if cached is None:
            cached = PiecewiseLinear(-self.xs[::-1], -self.ys[::-1], self.right_slope, self.left_slope)
            object.__setattr__(self, "_reflected", cached)
        return cached

    def mirrored(self) -> "PiecewiseLinear":
        """Return ``x -> f(-x)``."""
        return PiecewiseLinear(-self.xs[::-1], self.ys[::-1], -self.right_slope, -self.left_slope)

    def lipschitz_on(self, a: float, b: float) -> float:
        """Largest absolute slope among the pieces meeting ``[a, b]``."""
        starts, ends, _, _, slopes, _ = self._segments
        hit = (ends >= a) & (starts <= b)
        return float(np.max(np.abs(slopes[hit])))

    def to_record(self) -> dict:
        return {
            "breakpoints": [[x, y] for x, y in self.breakpoints],
            "left_slope": self.left_slope,
            "right_slope": self.right_slope,
        }

    @classmethod
    def from_record(cls, record: dict) -> "PiecewiseLinear":
        return cls.from_points(record["breakpoints"], record["left_slope"], record["right_slope"])


class BranchHamiltonian(PiecewiseLinear):
    """Coercive piecewise-linear Hamiltonian attached to one branch.

    Coercivity means the left tail decreases and the right tail increases, so
    the function tends to ``+inf`` in both directions.
    """

    def __init__(self, xs, ys, left_slope: float, right_slope: float, label: int = 1):
        if not (left_slope < 0 and right_slope > 0):
            raise ValueError(
                f"Hamiltonian is not coercive: tail slopes ({left_slope}, {right_slope})"
            )
        object.__setattr__(self, "label", int(label))
        super().__init__(np.asarray(xs, float), np.asarray(ys, float), left_slope, right_slope)
        object.__setattr__(self, "_extrema", _compute_extrema(self))

    @classmethod
    def from_points(cls, points, left_slope, right_slope, label: int = 1) -> "BranchHamiltonian":
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return cls(pts[:, 0], pts[:, 1], left_slope, right_slope, label)

    @classmethod
    def from_shape(cls, shape: PiecewiseLinear, label: int = 1) -> "BranchHamiltonian":
        return cls(shape.xs, shape.ys, shape.left_slope, shape.right_slope, label)

    @classmethod
    def from_record(cls, record: dict, label: int = 1) -> "BranchHamiltonian":
        return cls.from_points(
            record["breakpoints"], record["left_slope"], record["right_slope"], label
        )

    @classmethod
    def from_callable(
        cls,
        func: Callable[[np.ndarray], np.ndarray],
        grid: Sequence[float],
        left_slope: float,
        right_slope: float,
        label: int = 1,
    ) -> tuple["BranchHamiltonian", "IngestionReport"]:
        """Interpolate a closed-form Hamiltonian on ``grid``.

        The result is exact at the grid nodes only; the returned report holds
        the largest deviation observed at cell midpoints, which is a usable
        error estimate for smooth inputs.
        """
        nodes = np.asarray(grid, dtype=float)
        ham = cls(nodes, func(nodes), left_slope, right_slope, label)
        mids = 0.5 * (nodes[1:] + nodes[:-1])
        err = float(np.max(np.abs(func(mids) - ham(mids)))) if mids.size else 0.0
        return ham, IngestionReport(nodes.size, err)

    def with_label(self, label: int) -> "BranchHamiltonian":
        return BranchHamiltonian(self.xs, self.ys, self.left_slope, self.right_slope, label)

    @property
    def extrema(self) -> "ExtremaProfile":
        return self._extrema


@dataclass(frozen=True)
class IngestionReport:
    nodes: int
    max_midpoint_error: float


@dataclass(frozen=True)
class ExtremaProfile:
    """Strict local minima and maxima, interlaced ``m1 < M1 < m2 < ...``."""

    minima: tuple[tuple[float, float], ...]
    maxima: tuple[tuple[float, float], ...]

    @property
    def min_points(self) -> np.ndarray:
        return np.array([m for m, _ in self.minima], dtype=float)

    @property
    def max_points(self) -> np.ndarray:
        return np.array([m for m, _ in self.maxima], dtype=float)

    @property
    def min_values(self) -> np.ndarray:
        return np.array([v for _, v in self.minima], dtype=float)

    @property
    def max_values(self) -> np.ndarray:
        return np.array([v for _, v in self.maxima], dtype=float)


# ----------------------------------------------------------------------
# interval queries


def range_min_max(h: PiecewiseLinear, a: float, b: float) -> tuple[float, float]:
    """Exact minimum and maximum of ``h`` on the closed interval ``[a, b]``."""
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("interval endpoints must be finite")
    if a > b:
        raise ValueError(f"empty interval: a={a} > b={b}")
    inside = h.ys[(h.xs > a) & (h.xs < b)]
    vals = np.concatenate(([h(a), h(b)], inside))
    return float(vals.min()), float(vals.max())


def godunov_flux(h: BranchHamiltonian, p, q):
    """Godunov flux: minimum of ``h`` between ``p`` and ``q`` when ``p <= q``,
    maximum when ``p >= q``.

    Nondecreasing in ``p``, nonincreasing in ``q``, and ``h(p)`` on the
    diagonal.  Broadcasts over arrays, using the fact that an interior
    extremum of a PL function sits at a local extremum.
    """
    p_arr = np.asarray(p, dtype=float)
    q_arr = np.asarray(q, dtype=float)
    hp, hq = h(p_arr), h(q_arr)
    lo = np.minimum(p_arr, q_arr)
    hi = np.maximum(p_arr, q_arr)
    ext = h.extrema
    low_env = np.minimum(hp, hq)
    high_env = np.maximum(hp, hq)
    mins, min_vals = ext.min_points, ext.min_values
    if mins.size:
        inside = (mins > lo[..., None]) & (mins < hi[..., None])
        low_env = np.minimum(low_env, np.where(inside, min_vals, np.inf).min(axis=-1))
    maxs, max_vals = ext.max_points, ext.max_values
    if maxs.size:
        inside = (maxs > lo[..., None]) & (maxs < hi[..., None])
        high_env = np.maximum(high_env, np.where(inside, max_vals, -np.inf).max(axis=-1))
    out = np.where(p_arr <= q_arr, low_env, high_env)
    return out if out.ndim else float(out)


def lower_monotone_hull(h: PiecewiseLinear) -> PiecewiseLinear:
    """The nonincreasing envelope ``p -> inf_{q <= p} h(q)``.

    Requires a decreasing left tail so that the infimum is finite.
    """
    if h.left_slope >= 0:
        raise ValueError("lower hull needs a decreasing left tail")
    pts: list[tuple[float, float]] = [(float(h.xs[0]), float(h.ys[0]))]
    running = float(h.ys[0])
    for x0, y0, x1, y1 in zip(h.xs[:-1], h.ys[:-1], h.xs[1:], h.ys[1:]):
        if y1 >= running:
            continue
        # flat at the running minimum until the segment dips below it
        xc = x0 + (running - y0) / (y1 - y0) * (x1 - x0)
        pts.append((float(xc), running))
        pts.append((float(x1), float(y1)))
        running = float(y1)
    if h.right_slope < 0:
        raise ValueError("lower hull needs a nondecreasing right tail")
    return PiecewiseLinear.from_points(_dedupe(pts), h.left_slope, 0.0)


def _dedupe(pts: list[tuple[float, float]]) -> list[tuple[float, float]]:
    out = [pts[0]]
    for pt in pts[1:]:
        if abs(pt[0] - out[-1][0]) <= COMPARISON_TOL:
            continue
        out.append(pt)
    return out


# ----------------------------------------------------------------------
# level crossings


def _first_at_or_above(h: PiecewiseLinear, p: np.ndarray, level: np.ndarray) -> np.ndarray:
    """Smallest ``q >= p`` with ``h(q) >= level`` (``+inf`` if none)."""
    starts, ends, ax, ay, slopes, end_vals = h._segments
    p2 = p[..., None]
    lam = level[..., None]
    st = np.maximum(p2, starts)
    with np.errstate(invalid="ignore"):
        v_start = np.where((st == ax) | (slopes == 0), ay, ay + slopes * (st - ax))
    valid = st <= ends
    # crossing inside the piece: start below the level, end at or above it
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        interp = st + (lam - v_start) / slopes
    interp = np.minimum(interp, ends)
    cand = np.where(v_start >= lam, st, np.where(end_vals >= lam, interp, np.inf))
    cand = np.where(valid, cand, np.inf)
    return cand.min(axis=-1)


def level_crossing(h: PiecewiseLinear, p, level, direction: Direction = "rightward"):
    """Exit point of the sublevel/superlevel set of ``h`` started at ``p``.

    ``rightward`` returns ``p`` if ``h(p) >= level`` and otherwise the first
    point to the right where ``h`` reaches ``level``.  ``leftward`` returns
    ``p`` if ``h(p) <= level`` and otherwise the first point to the left
    where ``h`` comes down to ``level``.  Unreachable levels give ``+inf``
    (rightward) or ``-inf`` (leftward).  Broadcasts over ``p`` and ``level``.
    """
    p_arr, lam = np.broadcast_arrays(np.asarray(p, dtype=float), np.asarray(level, dtype=float))
    if direction == "rightward":
        out = _first_at_or_above(h, p_arr, lam)
    elif direction == "leftward":
        out = -_first_at_or_above(h.reflected(), -p_arr, -lam)
    else:
        raise ValueError(f"unknown direction {direction!r}")
    return out if out.ndim else float(out)


def last_below(h: PiecewiseLinear, level: float) -> float:
    """``sup {x : h(x) < level}``, so ``h >= level`` beyond it; ``-inf`` if the set is empty."""
    xs, ys = h.xs, h.ys
    if h.right_slope < 0 or (h.right_slope == 0 and ys[-1] < level):
        return np.inf
    if ys[-1] < level:
        return float(xs[-1] + (level - ys[-1]) / h.right_slope)
    for i in range(xs.size - 1, 0, -1):
        if ys[i - 1] < level:
            x0, y0, x1, y1 = xs[i - 1], ys[i - 1], xs[i], ys[i]
            return float(x0 + (level - y0) / (y1 - y0) * (x1 - x0))
    if h.left_slope > 0:
        return float(xs[0] + (level - ys[0]) / h.left_slope)
    return -np.inf


def first_below(h: PiecewiseLinear, level: float) -> float:
    """``inf {x : h(x) < level}``, so ``h >= level`` before it; ``+inf`` if the set is empty."""
    return -last_below(h.mirrored(), level)


# ----------------------------------------------------------------------
# extrema


def _compute_extrema(h: PiecewiseLinear) -> ExtremaProfile:
    # runs of equal slope sign; flat runs only matter between sign changes
    slopes = h.segment_slopes
    signs = np.sign(slopes)
    bounds = np.concatenate(([-np.inf], h.xs, [np.inf]))
    runs: list[tuple[int, float, float]] = []
    for k, s in enumerate(signs):
        lo, hi = bounds[k], bounds[k + 1]
        if runs and runs[-1][0] == s:
            runs[-1] = (int(s), runs[-1][1], hi)
        else:
            runs.append((int(s), lo, hi))
    minima: list[tuple[float, float]] = []
    maxima: list[tuple[float, float]] = []
    prev_sign = None
    gap_start = None
    for s, lo, hi in runs:
        if s == 0:
            continue
        if prev_sign is not None and prev_sign != s:
            point = 0.5 * (gap_start + lo)
            target = minima if prev_sign < 0 else maxima
            target.append((float(point), float(h(point))))
        prev_sign = s
        gap_start = hi
    return ExtremaProfile(tuple(minima), tuple(maxima))


def extrema(h: BranchHamiltonian) -> ExtremaProfile:
    """Strict local minima and maxima; a flat extremal plateau is reported at its midpoint."""
    return h.extrema
