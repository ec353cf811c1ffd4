"""Isolating blocks in admissible linear coordinates."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, Any

import numpy as np

from fhnwave.covering import HSet
from fhnwave.interval import Interval, as_interval, batched_matmul, inverse, matvec
from fhnwave.poincare import AffineSection
from fhnwave.segments import ChainEnd

if TYPE_CHECKING:
    from fhnwave.typing import FloatArray

FACES = (1, -1, 2, -2, 3, -3)


def _enclose(values: Any) -> Interval:
    if isinstance(values, Interval):
        return values
    arr = np.asarray(values, dtype=object)
    if arr.dtype == object and any(isinstance(v, str) for v in arr.ravel()):
        return Interval.from_decimals(arr)
    return as_interval(np.asarray(values, dtype=np.float64))


def is_admissible(m: Interval | FloatArray) -> bool:
    """``True`` when the slow row of ``m`` is ``(0, 0, *)`` with a nonzero last entry."""
    m = as_interval(m)
    row = m[..., 2, :]
    return bool(
        np.all(row.lo[..., :2] == 0)
        and np.all(row.hi[..., :2] == 0)
        and np.all(row.mig()[..., 2] > 0)
    )


def admissible_inverse(m: Interval | FloatArray) -> Interval:
    """Enclose the inverse of an admissible matrix, keeping its slow row exact.

    For ``m = [[A, b], [0, d]]`` the inverse is ``[[A^-1, -A^-1 b / d], [0, 1/d]]``,
    which is admissible again.
    """
    m = as_interval(m)
    if not is_admissible(m):
        raise ValueError("matrix is not admissible")
    a_inv = inverse(m[..., :2, :2])
    d_inv = 1.0 / m[..., 2, 2]
    top_right = -matvec(a_inv, m[..., :2, 2]) * d_inv
    top = Interval.concatenate([a_inv, top_right[..., None]], axis=-1)
    bottom = Interval.stack([Interval.zeros(d_inv.shape), Interval.zeros(d_inv.shape), d_inv])
    return Interval.concatenate([top, bottom[None, :]], axis=-2)


@dataclass(frozen=True)
class Block:
    """A 3D h-set ``center + cinv @ [-1, 1]^3`` with one exit direction.

    ``cinv`` holds the exit column, the entry column and the slow column. The
    coordinate change ``c`` defaults to the admissible inverse of ``cinv``; it
    is passed explicitly when the block is a rescaling of another one.
    """

    center: FloatArray
    cinv: Interval
    name: str = ""
    c: Interval | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.center.shape != (3,) or self.cinv.shape != (3, 3):
            raise ValueError("blocks live in three dimensions")
        if not is_admissible(self.cinv):
            raise ValueError(f"coordinate change of block {self.name!r} is not admissible")
        if abs(np.linalg.det(self.cinv.mid())) == 0.0:
            raise ValueError(f"block {self.name!r} is degenerate")

    @classmethod
    def create(cls, center: Any, cinv: Any, name: str = "") -> Block:
        """A block from float or decimal-text data; text entries are enclosed to 1 ulp."""
        return cls(np.asarray(center, dtype=np.float64), _enclose(cinv), name)

    @cached_property
    def coords(self) -> Interval:
        """Enclosure of the coordinate change ``c_B``."""
        return self.c if self.c is not None else admissible_inverse(self.cinv)

    def scaled(self, factors: Any, name: str = "") -> Block:
        """The block with coordinates ``diag(factors) @ c_B``.

        Factors below one stretch the block along the matching direction.
        """
        f = _enclose(factors)
        return Block(
            center=self.center,
            cinv=self.cinv / f,
            name=name or f"{self.name}*",
            c=self.coords * f[:, None],
        )

    def point(self, y: Interval | FloatArray) -> Interval:
        """Enclose ``c_B^-1 (y)`` for a batch of block coordinates."""
        return self.center + matvec(self.cinv, as_interval(y))

    def to_coords(self, x: Interval | FloatArray) -> Interval:
        return matvec(self.coords, as_interval(x) - self.center)

    def in_coords(self, v: Interval) -> Interval:
        """A batch of tangent vectors expressed in block coordinates."""
        return matvec(self.coords, v)

    def conjugate(self, m: Interval) -> Interval:
        """``c_B @ m @ c_B^-1`` for a batch of matrices ``m``."""
        return batched_matmul(batched_matmul(self.coords, m), self.cinv)


def boundary_hset(block: Block, i: int) -> HSet:
    """The face ``pi_|i| c_B = sign(i)`` of a block as an h-set.

    The h-set frame keeps the remaining block coordinates in order. For the
    slow and entry faces the first column is the block exit direction; on the
    exit faces ``i = +-1`` both columns are entry directions of the block and the
    h-set is only meant to be mapped forward as a source set.
    """
    if i not in FACES:
        raise ValueError(f"boundary index must be one of {FACES}, got {i}")
    k = abs(i) - 1
    sign = 1.0 if i > 0 else -1.0
    cinv = block.cinv.mid()
    rest = [j for j in range(3) if j != k]
    frame = cinv[:, rest]
    normal = np.cross(frame[:, 0], frame[:, 1])
    origin = block.center + sign * cinv[:, k]
    section = AffineSection.create(origin, normal, frame)
    return HSet.create(section, (0.0, 0.0), np.eye(2), (1.0, 1.0), name=f"{block.name}[{i}]")


def block_chain_end(block: Block, i: int) -> ChainEnd:
    """A slow face ``i = +-3`` of a block as the end of a chain of segments.

    The fast columns of ``c_B^-1`` are normalized to a unit first entry like a
    segment frame, their scales becoming the exit and entry widths.
    """
    if abs(i) != 3:
        raise ValueError("chains can only end on the slow faces of a block")
    cinv = block.cinv.mid()
    sign = 1.0 if i > 0 else -1.0
    front = block.center + sign * cinv[:, 2]
    scales = cinv[0, :2]
    if np.any(scales == 0):
        raise ValueError(f"fast columns of block {block.name!r} have no u component")
    frame = cinv[:2, :2] / scales
    a, b = np.abs(scales)
    return ChainEnd(front, frame, float(a), float(b), name=f"{block.name}[{i}]")


__all__ = [
    "FACES",
    "Block",
    "admissible_inverse",
    "block_chain_end",
    "boundary_hset",
    "is_admissible",
]
