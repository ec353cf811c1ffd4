"""Isolation inequalities of segments.

Three conditions make a segment isolating:

* S1a: the slow velocity points from front to rear everywhere on the support.
  The slow row is checked with ``eps`` factored out, so one check covers every
  ``eps > 0``.
* S2b: the field leaves through the exit faces ``lu`` and ``ru``.
* S3b: the field enters through the entry faces ``ls`` and ``rs``.

Face conditions are interval inner products of the outward face normals with
the field over subdivided faces, with ``eps`` and ``theta`` as intervals.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from functools import partial
from typing import TYPE_CHECKING

import numpy as np

from fhnwave.dynamics import FhnParams, SlowFastField, fhn_eval
from fhnwave.interval import Interval, as_interval, dot, subdivide
from fhnwave.utils import run_parallel, run_parallel_sync

if TYPE_CHECKING:
    from fhnwave.segments.segment import Segment
    from fhnwave.typing import Direction, FaceName

logger = logging.getLogger(__name__)

DEFAULT_CENTRAL_GRID = 8

_Evaluator = Callable[[Interval], Interval]


@dataclass(frozen=True)
class IsolationCheck:
    """Isolation margins of one segment.

    ``s1a`` encloses the oriented slow velocity over the support (positive when
    isolating), ``s2b`` the smallest outward flux over the exit faces (positive)
    and ``s3b`` the largest outward flux over the entry faces (negative).
    """

    segment: str
    s1a: Interval
    s2b: Interval
    s3b: Interval
    grid: int
    eps_range: Interval
    theta_range: Interval | None = None
    worst_face: FaceName | None = None
    worst_cell: int | None = None

    @property
    def passed(self) -> bool:
        return self.condition is None

    @property
    def condition(self) -> str | None:
        """The first violated condition, if any."""
        if not self.s1a.lo > 0:
            return "S1a"
        if not self.s2b.lo > 0:
            return "S2b"
        if not self.s3b.hi < 0:
            return "S3b"
        return None

    @property
    def margin(self) -> Interval:
        """Smallest slack of the three conditions."""
        slacks = [self.s1a, self.s2b, -self.s3b]
        return Interval(min(float(s.lo) for s in slacks), min(float(s.hi) for s in slacks))

    def __str__(self) -> str:
        verdict = "PASS" if self.passed else f"FAIL ({self.condition} on {self.worst_face})"
        return (
            f"{self.segment}: {verdict} S1a={float(self.s1a.lo):.3e} "
            f"S2b={float(self.s2b.lo):.3e} S3b={float(self.s3b.hi):.3e}"
        )


def _evaluators(
    field: FhnParams | SlowFastField, direction: Direction
) -> tuple[_Evaluator, _Evaluator]:
    if isinstance(field, FhnParams):
        rhs: _Evaluator = partial(fhn_eval, p=field)
        slow_field = field.vector_field
    else:
        rhs = field.eval
        slow_field = field

    def slow(x: Interval) -> Interval:
        return slow_field.slow_factored(x)[..., 0]

    if direction == "backward":
        return (lambda x: -rhs(x)), (lambda x: -slow(x))
    return rhs, slow


def _worst_min(fluxes: dict[FaceName, Interval]) -> tuple[Interval, FaceName, int]:
    face = min(fluxes, key=lambda k: float(fluxes[k].lo.min()))
    flux = fluxes[face]
    lo = min(float(f.lo.min()) for f in fluxes.values())
    hi = min(float(f.hi.min()) for f in fluxes.values())
    return Interval(lo, hi), face, int(np.argmin(flux.lo))


def _worst_max(fluxes: dict[FaceName, Interval]) -> tuple[Interval, FaceName, int]:
    face = max(fluxes, key=lambda k: float(fluxes[k].hi.max()))
    flux = fluxes[face]
    lo = max(float(f.lo.max()) for f in fluxes.values())
    hi = max(float(f.hi.max()) for f in fluxes.values())
    return Interval(lo, hi), face, int(np.argmax(flux.hi))


def check_segment_isolation(
    segment: Segment,
    field: FhnParams | SlowFastField,
    grid: int,
    *,
    direction: Direction = "forward",
    central_grid: int = DEFAULT_CENTRAL_GRID,
) -> IsolationCheck:
    """Check S1a, S2b and S3b for a segment.

    ``grid`` is the number of parts per face axis, so each side face is split
    into ``grid**2`` cells. S1a is checked on ``central_grid**3`` cells of the
    support. ``direction="backward"`` checks the time-reversed field.
    """
    if grid < 1 or central_grid < 1:
        raise ValueError("grids must be positive")
    rhs, slow = _evaluators(field, direction)

    support = subdivide(Interval([-1.0, -1.0, 0.0], [1.0, 1.0, 1.0]), [central_grid] * 3)
    oriented = segment.orientation * slow(segment.point(support))
    s1a = Interval(oriented.lo.min(), oriented.hi.min())

    fluxes = {
        face: dot(segment.outward_normal(face), rhs(segment.face_cells(face, grid)))
        for face in ("lu", "ru", "ls", "rs")
    }
    s2b, exit_face, exit_cell = _worst_min({k: fluxes[k] for k in ("lu", "ru")})
    s3b, entry_face, entry_cell = _worst_max({k: fluxes[k] for k in ("ls", "rs")})

    worst_face: FaceName | None = None
    worst_cell: int | None = None
    if not s1a.lo > 0:
        worst_cell = int(np.argmin(oriented.lo))
    elif not s2b.lo > 0:
        worst_face, worst_cell = exit_face, exit_cell
    elif not s3b.hi < 0:
        worst_face, worst_cell = entry_face, entry_cell
    theta = field.theta if isinstance(field, FhnParams) else None
    check = IsolationCheck(
        segment.name, s1a, s2b, s3b, grid, field.eps, theta, worst_face, worst_cell
    )
    logger.info("%s", check)
    return check


def eps_ranges(eps_max: float | str, splits: Sequence[float | str] = ()) -> list[Interval]:
    """Consecutive ranges ``[0, s1], [s1, s2], ..., [sk, eps_max]``."""
    points = [as_interval(0.0)] + [
        Interval.from_decimal(s) if isinstance(s, str) else as_interval(s)
        for s in (*splits, eps_max)
    ]
    if any(float(p.mid()) <= float(q.mid()) for q, p in zip(points, points[1:], strict=False)):
        raise ValueError("eps splits must increase towards eps_max")
    return [Interval(q.lo, p.hi) for q, p in zip(points, points[1:], strict=False)]


def check_isolation_ranges(
    segment: Segment,
    params: FhnParams,
    ranges: Sequence[Interval],
    grid: int,
    *,
    direction: Direction = "forward",
) -> list[IsolationCheck]:
    """One isolation check per ``eps`` range; the segment isolates iff all pass."""
    return [
        check_segment_isolation(segment, params.with_eps(eps), grid, direction=direction)
        for eps in ranges
    ]


async def acheck_segments(
    segments: Sequence[Segment],
    field: FhnParams | SlowFastField,
    grid: int,
    *,
    jobs: int = 1,
    direction: Direction = "forward",
) -> list[IsolationCheck]:
    """Check several segments on worker threads, results in input order."""
    tasks = [
        partial(check_segment_isolation, s, field, grid, direction=direction) for s in segments
    ]
    return await run_parallel(tasks, jobs=jobs)


def check_segments(
    segments: Sequence[Segment],
    field: FhnParams | SlowFastField,
    grid: int,
    *,
    jobs: int = 1,
    direction: Direction = "forward",
) -> list[IsolationCheck]:
    tasks = [
        partial(check_segment_isolation, s, field, grid, direction=direction) for s in segments
    ]
    return run_parallel_sync(tasks, jobs=jobs)


__all__ = [
    "IsolationCheck",
    "acheck_segments",
    "check_isolation_ranges",
    "check_segment_isolation",
    "check_segments",
    "eps_ranges",
]
