"""Chains of short segments along a branch of the slow manifold."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import anyio
import numpy as np

from fhnwave.covering import CoverCheck, identity_covering
from fhnwave.dynamics import fast_eigenframe, fast_equilibrium
from fhnwave.segments.isolation import IsolationCheck, acheck_segments
from fhnwave.segments.segment import ChainEnd, Segment

if TYPE_CHECKING:
    from fhnwave.dynamics import FhnParams

logger = logging.getLogger(__name__)

DEFAULT_FACTOR = 1.05


@dataclass(frozen=True)
class ChainCheck:
    """Segments of a chain with their isolation checks and linking coverings.

    ``coverings[i]`` is the identity covering from the rear face of the
    ``i``-th segment (the start segment for ``i = 0``) to the front face of the
    next one. The last chain segment ends exactly on the chain end.
    """

    name: str
    segments: list[Segment]
    isolation: list[IsolationCheck] = field(default_factory=list)
    coverings: list[CoverCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failure is None

    @property
    def failure(self) -> str | None:
        """Description of the first failed check along the chain."""
        for i, (cover, iso) in enumerate(zip(self.coverings, self.isolation, strict=False)):
            if not cover.passed:
                return f"{self.name}: covering into segment {i + 1} fails {cover.condition}"
            if not iso.passed:
                return f"{self.name}: segment {i + 1} fails {iso.condition}"
        return None


def build_chain_segments(
    start: Segment,
    end: Segment | ChainEnd,
    n: int,
    factor: float,
    theta: float,
    *,
    name: str = "chain",
) -> list[Segment]:
    """Place ``n`` segments from the rear face of ``start`` to the front of ``end``.

    Every rear point is a fast equilibrium at evenly stepped ``w`` with the
    fast eigenframe there; exit widths shrink by ``factor`` and entry widths
    grow by it across each link, and rear widths interpolate linearly between
    the two ends.
    """
    if n < 1:
        raise ValueError("a chain needs at least one segment")
    if factor <= 1.0:
        logger.warning(
            "chain %s uses factor %.3g <= 1; identity coverings cannot hold", name, factor
        )
    target = end.end if isinstance(end, Segment) else end
    w0, w1 = float(start.rear[2]), float(target.front[2])
    if (w1 - w0) * start.orientation < 0:
        logger.warning("chain %s runs against the orientation of its start segment", name)
    step = (w1 - w0) / n

    segments: list[Segment] = []
    previous = start
    u_guess = float(start.rear[0])
    for i in range(1, n + 1):
        if i < n:
            w = w0 + i * step
            u = fast_equilibrium(w, u_guess)
            rear = np.array([u, 0.0, w])
            frame = fast_eigenframe(u, theta)
            u_guess = u
        else:
            rear = np.asarray(target.front, dtype=np.float64)
            frame = np.asarray(target.frame, dtype=np.float64)
        t = i / n
        segments.append(
            Segment.create(
                previous.rear,
                rear,
                frame,
                previous.c / factor,
                factor * previous.d,
                t * target.a + (1.0 - t) * start.c,
                t * target.b + (1.0 - t) * start.d,
                name=f"{name}[{i}]",
            )
        )
        previous = segments[-1]
    logger.debug("chain %s spans w in [%.6g, %.6g] with %d segments", name, w0, w1, n)
    return segments


def chain_coverings(start: Segment, segments: list[Segment]) -> list[CoverCheck]:
    """Identity coverings linking consecutive segments of a chain."""
    checks = []
    previous = start
    for segment in segments:
        checks.append(identity_covering(previous.face("out"), segment.face("in")))
        previous = segment
    return checks


async def abuild_chain(
    start: Segment,
    end: Segment | ChainEnd,
    n: int,
    params: FhnParams,
    grid: int,
    *,
    factor: float = DEFAULT_FACTOR,
    jobs: int = 1,
    name: str = "chain",
) -> ChainCheck:
    """Build a chain and verify its isolation and linking coverings."""
    theta = float(params.theta.mid())
    segments = build_chain_segments(start, end, n, factor, theta, name=name)
    coverings = await anyio.to_thread.run_sync(chain_coverings, start, segments)
    isolation = await acheck_segments(segments, params, grid, jobs=jobs)
    chain = ChainCheck(name, segments, isolation, coverings)
    if chain.passed:
        logger.info("chain %s: PASS (%d segments)", name, n)
    else:
        logger.info("chain %s: FAIL %s", name, chain.failure)
    return chain


def build_chain(
    start: Segment,
    end: Segment | ChainEnd,
    n: int,
    params: FhnParams,
    grid: int,
    *,
    factor: float = DEFAULT_FACTOR,
    jobs: int = 1,
    name: str = "chain",
) -> ChainCheck:
    """Synchronous wrapper of :func:`abuild_chain`."""

    async def _run() -> ChainCheck:
        return await abuild_chain(
            start, end, n, params, grid, factor=factor, jobs=jobs, name=name
        )

    return anyio.run(_run)


__all__ = [
    "DEFAULT_FACTOR",
    "ChainCheck",
    "abuild_chain",
    "build_chain",
    "build_chain_segments",
    "chain_coverings",
]
