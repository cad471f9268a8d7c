"""Reference Hamiltonians used throughout the tests, demos and CLI scenarios."""

from __future__ import annotations

from .hamiltonians import BranchHamiltonian


def absolute_value(label: int = 1) -> BranchHamiltonian:
    """``H(p) = |p|``, exact as a piecewise-linear function."""
    return BranchHamiltonian.from_points([(-1.0, 1.0), (0.0, 0.0), (1.0, 1.0)], -1.0, 1.0, label)


def double_well(label: int = 1) -> BranchHamiltonian:
    """Two wells at ``p = -1`` and ``p = 1`` (value 0) split by a bump of height 1 at 0."""
    points = [(-2.0, 3.0), (-1.0, 0.0), (0.0, 1.0), (1.0, 0.0), (2.0, 3.0)]
    return BranchHamiltonian.from_points(points, -3.0, 3.0, label)
