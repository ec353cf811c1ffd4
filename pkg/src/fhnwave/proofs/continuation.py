"""Validated continuation of the periodic orbit in ``eps``.

Every step proves a periodic orbit for all ``eps`` in a short range: the float
orbit is refined at the middle of the range, its section frames are aligned
with the exit and entry directions, and a chain of coverings
``X_0 => X_1 => ... => X_{k-1} => X_0`` is grown around the loop, one h-set
per section. The driver adapts the range width to the outcome.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import partial
from typing import TYPE_CHECKING

import anyio
import numpy as np

from fhnwave.covering import CoverImages, FlowMap, HSet, compute_cover_images, verify_cover
from fhnwave.dynamics import FhnParams
from fhnwave.errors import ProofError
from fhnwave.interval import Interval
from fhnwave.oracle.orbit import (
    OrbitGuess,
    orbit_from_points,
    read_anchors,
    refine_orbit,
    resample,
    seed_orbit,
    stabilize_frames,
)
from fhnwave.proofs.report import CLOSED_OK, ProofReport, ReportEntry
from fhnwave.proofs.scenario import ContinuationScenario, decimal, scenario_hash

if TYPE_CHECKING:
    from fhnwave.integrator import FieldLike
    from fhnwave.poincare import AffineSection

logger = logging.getLogger(__name__)

KIND = "continuation"


@dataclass(frozen=True)
class TimedFlowMap(FlowMap):
    """A section map that keeps the crossing time enclosures of its images."""

    times: list[Interval] = field(default_factory=list, compare=False)

    def images(self, source: HSet, cells: Interval, *, jobs: int = 1) -> Interval:
        image = self.pmap().map_parallel(source.flowset(cells), jobs=jobs)
        self.times.append(image.time)
        return image.point

    @property
    def time_hull(self) -> Interval:
        lo = min(float(np.min(t.lo)) for t in self.times)
        hi = max(float(np.max(t.hi)) for t in self.times)
        return Interval(lo, hi)


@dataclass(frozen=True)
class ContinuationStep:
    """Outcome of one continuation step."""

    eps: Interval
    report: ProofReport
    guess: OrbitGuess
    period: Interval | None = None

    @property
    def proved(self) -> bool:
        return self.report.proved


def next_hset(
    images: CoverImages, section: AffineSection, *, margin: float, exit_cap: float, name: str
) -> HSet | None:
    """The h-set on ``section`` that ``images`` cover with relative ``margin``.

    Its exit half width stays ``margin`` inside the exit edge images, capped at
    ``exit_cap``; its entry half width is ``margin`` beyond the image. ``None``
    when the exit edges do not land on opposite sides.
    """
    left, right = images.left[..., 0], images.right[..., 0]
    apart = (np.all(left.hi < 0) and np.all(right.lo > 0)) or (
        np.all(left.lo > 0) and np.all(right.hi < 0)
    )
    if not apart:
        return None
    room = float(min(left.mig().min(), right.mig().min()))
    entry = float(images.interior[..., 1].mag().max())
    widths = (min(room / (1.0 + margin), exit_cap), entry * (1.0 + margin))
    if widths[1] <= 0:
        return None
    return HSet.create(section, np.zeros(2), np.eye(2), widths, name=name)


def _grow_loop(
    guess: OrbitGuess,
    flow_field: FieldLike,
    scenario: ContinuationScenario,
    size: float,
    report: ProofReport,
    *,
    jobs: int,
) -> Interval | None:
    """Add one covering entry per section; returns the period enclosure."""
    k = guess.k
    sections = guess.sections
    current = HSet.create(sections.take(0), np.zeros(2), np.eye(2), (size, size), name="X0")
    first = current
    period = Interval(0.0)
    for i in range(k):
        j = (i + 1) % k
        entry_id = f"cover:X{i}=>X{j}"
        report.require(entry_id)
        dst = sections.take(j)
        g = TimedFlowMap(flow_field, dst)
        try:
            images = compute_cover_images(current, g, scenario.div, jobs=jobs)
        except ProofError as exc:
            report.add(ReportEntry.error(entry_id, exc))
            return None
        period = period + g.time_hull
        if j == 0:
            target: HSet | None = first
        else:
            target = next_hset(
                images, dst, margin=scenario.margin, exit_cap=scenario.exit_cap, name=f"X{j}"
            )
        if target is None:
            report.add(
                ReportEntry(
                    entry_id, f"C2:{CLOSED_OK}", False, Interval(-np.inf), detail="no exit room"
                )
            )
            return None
        entry = report.add(ReportEntry.from_cover(entry_id, verify_cover(images, target)))
        if not entry.passed:
            return None
        current = target
    return period


def continuation_step(
    eps: Interval,
    guess: OrbitGuess,
    scenario: ContinuationScenario,
    *,
    size: float | None = None,
    digest: str = "",
    jobs: int = 1,
) -> ContinuationStep:
    """Prove a periodic orbit for every ``eps`` in the range and prepare the next guess.

    The report stops at the first failed covering; the next guess is the
    refined orbit with resampled anchors. A guess with its own ``field`` is
    proved for that field instead of the FitzHugh-Nagumo one.
    """
    size = scenario.x0_size if size is None else size
    report = ProofReport(KIND, digest)
    report.extras["eps"] = f"[{float(eps.lo).hex()}, {float(eps.hi).hex()}]"
    refined: OrbitGuess | None = None
    with report.guard("refine"):
        refined = stabilize_frames(
            refine_orbit(guess.with_eps(float(eps.mid())), jobs=jobs), jobs=jobs
        )
    if refined is None:
        report.require("refine")
        return ContinuationStep(eps, report, guess)
    report.extras["anchors"] = str(refined.k)
    report.extras["residual"] = f"{refined.residual:.3e}"

    flow_field = (
        refined.field
        if refined.field is not None
        else FhnParams.create(decimal(scenario.theta), eps)
    )
    period = _grow_loop(refined, flow_field, scenario, size, report, jobs=jobs)
    if period is not None:
        report.extras["period"] = f"[{float(period.lo)!r}, {float(period.hi)!r}]"
        logger.info(
            "eps in [%.9g, %.9g]: period in [%.8f, %.8f]",
            float(eps.lo),
            float(eps.hi),
            float(period.lo),
            float(period.hi),
        )
    try:
        following = resample(refined, scenario.t_min, scenario.t_max)
    except (ProofError, ValueError) as exc:
        logger.warning("resampling failed, keeping the anchors: %s", exc)
        following = refined
    return ContinuationStep(eps, report, following, period)


def initial_guess(scenario: ContinuationScenario, *, jobs: int = 1) -> OrbitGuess:
    eps = float(decimal(scenario.eps_start).mid())
    theta = float(decimal(scenario.theta).mid())
    if scenario.seed_file is not None:
        return orbit_from_points(read_anchors(scenario.seed_file), eps, theta)
    return seed_orbit(eps, theta, anchors=scenario.anchors, jobs=jobs)


def _range(a: float, b: float) -> Interval:
    return Interval(min(a, b), max(a, b))


async def arun_continuation(
    scenario: ContinuationScenario, *, guess: OrbitGuess | None = None, jobs: int = 1
) -> ProofReport:
    """Continue the orbit from ``eps_start`` towards ``eps_stop``.

    A failed step is retried with half the increment and half the initial
    h-set; a proved one lets both grow by ``growth`` up to their caps. The run
    ends after ``max_steps`` proved steps, at ``eps_stop``, or when the
    increment drops below ``min_increment``; the last failed attempt is then
    part of the report.
    """
    digest = scenario_hash(scenario)
    combined = ProofReport(KIND, digest)
    if guess is None:
        guess = await anyio.to_thread.run_sync(partial(initial_guess, scenario, jobs=jobs))
    eps = float(decimal(scenario.eps_start).mid())
    stop = float(decimal(scenario.eps_stop).mid())
    sign = 1.0 if stop >= eps else -1.0
    increment, size = scenario.increment, scenario.x0_size
    proved = 0
    while proved < scenario.max_steps:
        remaining = abs(stop - eps)
        if remaining == 0.0 and proved > 0:
            break
        following = eps + sign * min(increment, remaining)
        step = await anyio.to_thread.run_sync(
            partial(
                continuation_step,
                _range(eps, following),
                guess,
                scenario,
                size=size,
                digest=digest,
                jobs=jobs,
            )
        )
        if step.proved:
            combined.extend(step.report, f"step{proved}:")
            proved += 1
            eps, guess = following, step.guess
            increment = min(increment * scenario.growth, scenario.max_increment)
            size = min(size * scenario.growth, scenario.x0_size)
            if remaining == 0.0:
                break
            continue
        increment, size = increment / 2.0, size / 2.0
        logger.info("step at eps=%.9g failed, increment now %.3e", eps, increment)
        if increment < scenario.min_increment:
            combined.extend(step.report, f"step{proved}:")
            break
    logger.info("continuation reached eps=%.9g after %d proved steps", eps, proved)
    return combined


def run_continuation(
    scenario: ContinuationScenario, *, guess: OrbitGuess | None = None, jobs: int = 1
) -> ProofReport:
    """Synchronous wrapper of :func:`arun_continuation`."""
    return anyio.run(partial(arun_continuation, scenario, guess=guess, jobs=jobs))


__all__ = [
    "ContinuationStep",
    "TimedFlowMap",
    "arun_continuation",
    "continuation_step",
    "initial_guess",
    "next_hset",
    "run_continuation",
]
