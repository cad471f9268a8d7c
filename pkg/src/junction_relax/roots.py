"""Vectorised root finding for nondecreasing scalar maps.

All fixed points computed in this package reduce to finding the zero of a
nondecreasing (possibly discontinuous) function of one real variable, once
per gradient.  The solver below advances every row of a batch together.  It
takes secant steps through the two latest evaluations (exact as soon as both
lie on the same linear piece), falls back to false position and then to
bisection whenever the bracket fails to halve, so the worst case stays within
a small multiple of plain bisection.

Jumps of the map defeat false position.  When the caller knows the finite set
of abscissas where jumps can occur, the solver first bisects over that set
and probes one tolerance away from any jump left at a bracket end, so the
remaining bracket only contains continuous pieces.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

ABS_TOL = 1e-13
_EPS = np.finfo(float).eps


class BracketError(RuntimeError):
    pass


def solve_increasing(
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    lo: np.ndarray,
    hi: np.ndarray,
    tol: float = ABS_TOL,
    max_iter: int = 400,
    jump_levels: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Shrink ``[lo, hi]`` around the sign change of ``fn``.

    Parameters
    ----------
    fn
        ``fn(x, rows)`` evaluates the map for the batch rows ``rows`` at
        abscissas ``x``.  It must be nondecreasing in ``x`` with
        ``fn(lo) <= 0 <= fn(hi)``; the endpoints themselves are not evaluated.
    lo, hi
        Initial brackets, one per row.
    jump_levels
        Abscissas outside of which ``fn`` is continuous: a 1-D array shared
        by all rows or a 2-D array with one row of levels per batch row.

    Returns
    -------
    (lo, hi)
        Final brackets of width at most ``tol`` plus a few ulps, or of zero
        width when an exact zero was hit.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    if np.any(~np.isfinite(lo)) or np.any(~np.isfinite(hi)):
        raise BracketError("brackets must be finite")
    if np.any(lo > hi):
        raise BracketError("inverted bracket")
    m = lo.size
    flo = np.full(m, np.nan)
    fhi = np.full(m, np.nan)
    width_prev = np.full(m, np.inf)
    width_prev2 = np.full(m, np.inf)
    force_bisect = np.zeros(m, dtype=bool)

    def done_mask():
        scale = np.maximum(np.abs(lo), np.abs(hi))
        return (hi - lo) <= tol + 4 * _EPS * scale

    def update(rows, x, f):
        neg, pos = f < 0, f > 0
        zero = ~neg & ~pos
        lo[rows[neg]], flo[rows[neg]] = x[neg], f[neg]
        hi[rows[pos]], fhi[rows[pos]] = x[pos], f[pos]
        lo[rows[zero]] = hi[rows[zero]] = x[zero]

    if jump_levels is not None and np.size(jump_levels):
        levels = np.asarray(jump_levels, dtype=float)
        if levels.ndim == 1:
            levels = np.broadcast_to(levels, (m, levels.size))
        levels = np.sort(levels, axis=1)
        width = levels.shape[1]
        for _ in range(width + 1):
            first = (levels <= lo[:, None]).sum(axis=1)
            last_ = (levels < hi[:, None]).sum(axis=1) - 1
            rows = np.flatnonzero(first <= last_)
            if rows.size == 0:
                break
            x = levels[rows, (first[rows] + last_[rows]) // 2]
            update(rows, x, np.asarray(fn(x, rows), dtype=float))
        # a jump sitting on a bracket end: step one tolerance inside
        for end in ("hi", "lo"):
            edge = hi if end == "hi" else lo
            on_level = np.any(levels == edge[:, None], axis=1) & ~done_mask()
            rows = np.flatnonzero(on_level)
            if rows.size:
                x = hi[rows] - tol if end == "hi" else lo[rows] + tol
                x = np.clip(x, lo[rows], hi[rows])
                update(rows, x, np.asarray(fn(x, rows), dtype=float))

    active = np.flatnonzero(~done_mask())
    x_prev = np.full(m, np.nan)
    f_prev = np.full(m, np.nan)
    x_last = np.full(m, np.nan)
    f_last = np.full(m, np.nan)
    for _ in range(max_iter):
        if active.size == 0:
            return lo, hi
        a, b = lo[active], hi[active]
        fa, fb = flo[active], fhi[active]
        x1, f1, x2, f2 = x_prev[active], f_prev[active], x_last[active], f_last[active]
        mid = 0.5 * (a + b)
        with np.errstate(invalid="ignore", divide="ignore"):
            secant = x2 - f2 * (x2 - x1) / (f2 - f1)
            false_pos = (a * fb - b * fa) / (fb - fa)
        ok_secant = np.isfinite(secant) & (f2 != f1) & (secant >= a) & (secant <= b)
        ok_fp = np.isfinite(false_pos) & (false_pos >= a) & (false_pos <= b)
        x = np.where(ok_secant, secant, np.where(ok_fp, false_pos, mid))
        x = np.where(force_bisect[active], mid, x)
        # stay at least one tolerance inside so that a good guess also straddles
        step = 0.5 * tol
        x = np.where(b - a > 2 * step, np.clip(x, a + step, b - step), mid)
        f = np.asarray(fn(x, active), dtype=float)
        if np.any(np.isnan(f)):
            raise BracketError("root function returned NaN")
        update(active, x, f)
        x_prev[active], f_prev[active] = x2, f2
        x_last[active], f_last[active] = x, f

        width = hi[active] - lo[active]
        force_bisect[active] = width > 0.5 * width_prev2[active]
        width_prev2[active] = width_prev[active]
        width_prev[active] = width
        active = active[~done_mask()[active]]
    raise BracketError(f"root solver did not converge for {active.size} rows")
