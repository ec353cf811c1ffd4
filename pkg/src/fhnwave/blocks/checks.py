"""Isolation, cone and exit-sweep inequalities of blocks.

Every check evaluates the field over the block faces (or the block interior)
pushed through ``c_B^-1`` and reads the result in block coordinates. ``eps``
enters the fast rows as an interval ``[0, eps0]``; inequalities on the slow
direction use the slow right-hand side with ``eps`` factored out, so a PASS
holds for every ``eps`` in ``(0, eps0]``.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass
from functools import partial
from typing import TYPE_CHECKING

import numpy as np

from fhnwave.blocks.block import FACES, Block
from fhnwave.dynamics import FhnParams, SlowFastField, fhn_eval, fhn_jacobian
from fhnwave.interval import (
    Interval,
    batched_matmul,
    face_cells,
    leading_minors3,
    subdivide,
    unit_box,
)

if TYPE_CHECKING:
    from fhnwave.typing import FloatArray

logger = logging.getLogger(__name__)

DEFAULT_BLOCK_GRID = 50
DEFAULT_SWEEP_GRID = 20

_Evaluator = Callable[[Interval], Interval]


def _field_parts(
    field: FhnParams | SlowFastField,
) -> tuple[_Evaluator, _Evaluator, SlowFastField]:
    if isinstance(field, FhnParams):
        return partial(fhn_eval, p=field), partial(fhn_jacobian, p=field), field.vector_field
    return field.eval, field.jacobian, field


def _theta(field: FhnParams | SlowFastField) -> Interval | None:
    return field.theta if isinstance(field, FhnParams) else None


def _lower(values: Interval) -> Interval:
    return Interval(values.lo.min(), values.hi.min())


def _upper(values: Interval) -> Interval:
    return Interval(values.lo.max(), values.hi.max())


def _hull(values: Interval) -> Interval:
    return Interval(values.lo.min(), values.hi.max())


@dataclass(frozen=True)
class BlockCheck:
    """Margins of the six face inequalities of a block.

    ``xu`` encloses the smallest outward exit velocity (positive when isolating),
    ``xs`` the largest outward entry velocity and ``xmu`` the largest outward
    factored slow velocity (both negative when isolating).
    """

    block: str
    xu: Interval
    xs: Interval
    xmu: Interval
    grid: int
    eps_range: Interval
    theta_range: Interval | None = None
    worst_face: int | None = None
    worst_cell: int | None = None

    @property
    def passed(self) -> bool:
        return self.condition is None

    @property
    def condition(self) -> str | None:
        if not self.xu.lo > 0:
            return "xu"
        if not self.xs.hi < 0:
            return "xs"
        if not self.xmu.hi < 0:
            return "xmu"
        return None

    @property
    def margin(self) -> Interval:
        slacks = [self.xu, -self.xs, -self.xmu]
        return Interval(min(float(s.lo) for s in slacks), min(float(s.hi) for s in slacks))

    def __str__(self) -> str:
        verdict = (
            "PASS"
            if self.passed
            else f"FAIL ({self.condition} on face {self.worst_face}, cell {self.worst_cell})"
        )
        return (
            f"block {self.block}: {verdict} xu={float(self.xu.lo):.3e} "
            f"xs={float(self.xs.hi):.3e} xmu={float(self.xmu.hi):.3e}"
        )


def face_values(
    block: Block, field: FhnParams | SlowFastField, grid: int
) -> dict[int, Interval]:
    """Outward normal velocities on the cells of every block face.

    Exit faces give ``sign * pi_u(c_B F)``, entry faces ``sign * pi_s(c_B F)`` and
    slow faces ``sign * g`` with the factored slow function ``g``.
    """
    rhs, _, slow_fast = _field_parts(field)
    slow_sign = float(np.sign(block.cinv.mid()[2, 2]))
    values: dict[int, Interval] = {}
    for i in FACES:
        k, sign = abs(i) - 1, (1.0 if i > 0 else -1.0)
        x = block.point(face_cells(3, grid, fixed=k, value=sign))
        if k == 2:
            values[i] = (sign * slow_sign) * slow_fast.slow_factored(x)[..., 0]
        else:
            values[i] = sign * block.in_coords(rhs(x))[..., k]
    return values


def check_block(
    block: Block, field: FhnParams | SlowFastField, grid: int = DEFAULT_BLOCK_GRID
) -> BlockCheck:
    """Check that the flow leaves ``block`` through ``x_u = +-1`` and enters it elsewhere.

    Each face is split into ``grid**2`` cells.
    """
    if grid < 1:
        raise ValueError("grid must be positive")
    values = face_values(block, field, grid)
    exits = {i: values[i] for i in (1, -1)}
    entries = {i: values[i] for i in (2, -2)}
    slows = {i: values[i] for i in (3, -3)}
    xu = _lower(Interval.concatenate([v.reshape(-1) for v in exits.values()]))
    xs = _upper(Interval.concatenate([v.reshape(-1) for v in entries.values()]))
    xmu = _upper(Interval.concatenate([v.reshape(-1) for v in slows.values()]))

    worst_face: int | None = None
    worst_cell: int | None = None
    if not xu.lo > 0:
        worst_face = min(exits, key=lambda i: float(exits[i].lo.min()))
        worst_cell = int(np.argmin(exits[worst_face].lo))
    elif not xs.hi < 0:
        worst_face = max(entries, key=lambda i: float(entries[i].hi.max()))
        worst_cell = int(np.argmax(entries[worst_face].hi))
    elif not xmu.hi < 0:
        worst_face = max(slows, key=lambda i: float(slows[i].hi.max()))
        worst_cell = int(np.argmax(slows[worst_face].hi))
    check = BlockCheck(
        block.name, xu, xs, xmu, grid, field.eps, _theta(field), worst_face, worst_cell
    )
    logger.info("%s", check)
    return check


@dataclass(frozen=True)
class ConeCheck:
    """Leading principal minors of the symmetrized cone matrix over the block."""

    block: str
    minors: tuple[Interval, Interval, Interval]
    eps_range: Interval
    theta_range: Interval | None = None
    grid: int = 1

    @property
    def eps0(self) -> float:
        return float(self.eps_range.hi)

    @property
    def passed(self) -> bool:
        return self.condition is None

    @property
    def condition(self) -> str | None:
        for k, minor in enumerate(self.minors, start=1):
            if not minor.lo > 0:
                return f"minor-{k}"
        return None

    @property
    def margin(self) -> Interval:
        return Interval(
            min(float(m.lo) for m in self.minors), min(float(m.hi) for m in self.minors)
        )

    def __str__(self) -> str:
        verdict = "PASS" if self.passed else f"FAIL ({self.condition})"
        lows = ", ".join(f"{float(m.lo):.3e}" for m in self.minors)
        return f"cones of {self.block}: {verdict} minors >= ({lows})"


def cone_matrix(block: Block, field: FhnParams | SlowFastField, cells: Interval) -> Interval:
    """``J = Q A + (Q A)^T`` with ``A = c_B DF c_B^-1`` on each cell of block coordinates.

    ``Q = diag(1, -1, -1/eps)``. The third row of ``Q A`` equals
    ``-c_B[2, 2] (DF_slow / eps) c_B^-1`` for an admissible block and is formed
    that way, so it never divides by ``eps``.
    """
    _, jac, slow_fast = _field_parts(field)
    x = block.point(cells)
    a = block.conjugate(jac(x))
    slow_row = batched_matmul(slow_fast.slow_jacobian_factored(x), block.cinv)[..., 0, :]
    third = -block.coords[2, 2] * slow_row
    qa = Interval.stack([a[..., 0, :], -a[..., 1, :], third], axis=-2)
    return qa + qa.swapaxes(-1, -2)


def check_cone_condition(
    block: Block, field: FhnParams | SlowFastField, grid: int = 1
) -> ConeCheck:
    """Check positivity of the three leading minors of the cone matrix.

    ``grid`` subdivides ``[-1, 1]^3`` per axis; one cell evaluates the
    Jacobian on the whole block hull.
    """
    if grid < 1:
        raise ValueError("grid must be positive")
    cells = subdivide(unit_box(3), [grid] * 3)
    m1, m2, m3 = leading_minors3(cone_matrix(block, field, cells))
    minors = (_hull(m1), _hull(m2), _hull(m3))
    check = ConeCheck(block.name, minors, field.eps, _theta(field), grid)
    logger.info("%s", check)
    return check


@dataclass(frozen=True)
class SweepCheck:
    """Lower bound of the exit velocity over the outer part of a block."""

    block: str
    margin: Interval
    inner_fraction: float
    grid: int
    worst_cell: int | None = None

    @property
    def passed(self) -> bool:
        return bool(self.margin.lo > 0)

    def __str__(self) -> str:
        verdict = "PASS" if self.passed else f"FAIL (cell {self.worst_cell})"
        return (
            f"exit sweep of {self.block} over x_u >= {self.inner_fraction:g}: {verdict} "
            f"margin={float(self.margin.lo):.3e}"
        )


def sweep_region(inner_fraction: float, grid: int) -> Interval:
    """Cells of ``[inner_fraction, 1] x [-1, 1]^2``."""
    if not 0.0 <= inner_fraction < 1.0:
        raise ValueError("inner_fraction must lie in [0, 1)")
    box = Interval(np.array([inner_fraction, -1.0, -1.0]), np.ones(3))
    return subdivide(box, [grid] * 3)


def check_exit_sweep(
    block: Block,
    field: FhnParams | SlowFastField,
    inner_fraction: float = 0.3,
    grid: int = DEFAULT_SWEEP_GRID,
) -> SweepCheck:
    """Check that ``x_u`` grows along the flow on ``x_u in [inner_fraction, 1]``.

    Trajectories starting there then leave the block through its face
    ``x_u = 1``, provided the block itself isolates.
    """
    rhs, _, _ = _field_parts(field)
    x = block.point(sweep_region(inner_fraction, grid))
    velocity = block.in_coords(rhs(x))[..., 0]
    margin = _lower(velocity)
    worst: int | None = None if margin.lo > 0 else int(np.argmin(velocity.lo))
    check = SweepCheck(block.name, margin, inner_fraction, grid, worst)
    logger.info("%s", check)
    return check


def unit_block(cinv: FloatArray | None = None, name: str = "unit") -> Block:
    """A block around the origin, by default the cube ``[-1, 1]^3``."""
    return Block.create(np.zeros(3), np.eye(3) if cinv is None else cinv, name)


__all__ = [
    "DEFAULT_BLOCK_GRID",
    "DEFAULT_SWEEP_GRID",
    "BlockCheck",
    "ConeCheck",
    "SweepCheck",
    "check_block",
    "check_cone_condition",
    "check_exit_sweep",
    "cone_matrix",
    "face_values",
    "sweep_region",
    "unit_block",
]
