"""Subdivision of interval boxes into cells sharing their float faces."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from fhnwave.interval.core import Interval, as_interval


def grid_edges(lo: float, hi: float, parts: int) -> np.ndarray:
    """``parts + 1`` monotone float edges with exact end points ``lo`` and ``hi``."""
    if parts < 1:
        raise ValueError("parts must be positive")
    k = np.arange(parts + 1, dtype=np.float64)
    edges = lo + (hi - lo) * (k / parts)
    edges[0] = lo
    edges[-1] = hi
    return np.maximum.accumulate(edges)


def subdivide(box: Interval, parts_per_dim: Sequence[int]) -> Interval:
    """Split a box into ``prod(parts_per_dim)`` cells.

    Returns a batched interval of shape ``(cells, n)``; cells are ordered with the
    last coordinate varying fastest. Adjacent cells share the same float edge so
    the union of the cells is exactly ``box``.
    """
    box = as_interval(box)
    if box.ndim != 1 or len(parts_per_dim) != box.shape[0]:
        raise ValueError("parts_per_dim must give one count per box coordinate")
    los, his = [], []
    for i, parts in enumerate(parts_per_dim):
        edges = grid_edges(float(box.lo[i]), float(box.hi[i]), int(parts))
        los.append(edges[:-1])
        his.append(edges[1:])
    lo = np.stack(np.meshgrid(*los, indexing="ij"), axis=-1).reshape(-1, len(parts_per_dim))
    hi = np.stack(np.meshgrid(*his, indexing="ij"), axis=-1).reshape(-1, len(parts_per_dim))
    return Interval(lo, hi)


def unit_box(n: int) -> Interval:
    """The box ``[-1, 1]^n``."""
    return Interval(-np.ones(n), np.ones(n))


def face_cells(n: int, grid: int, fixed: int, value: float) -> Interval:
    """Cells of the face ``x[fixed] = value`` of ``[-1, 1]^n``, ``grid`` parts per free axis."""
    parts = [grid] * n
    parts[fixed] = 1
    box = unit_box(n)
    box = Interval(
        np.where(np.arange(n) == fixed, value, box.lo),
        np.where(np.arange(n) == fixed, value, box.hi),
    )
    return subdivide(box, parts)


__all__ = ["face_cells", "grid_edges", "subdivide", "unit_box"]
