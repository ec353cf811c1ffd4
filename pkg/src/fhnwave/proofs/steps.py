"""Building blocks shared by the proof pipelines.

Every helper turns one rigorous check into report entries. Checks run inside
worker threads; a helper either returns its entries or the exception that
stopped it, so one failed computation never hides the independent entries.
"""

from __future__ import annotations

import logging
import time
from collections.abc import Awaitable, Callable, Sequence
from dataclasses import dataclass
from functools import partial
from typing import TYPE_CHECKING, TypeVar, cast

import numpy as np

from fhnwave.blocks import BlockCheck, ConeCheck
from fhnwave.covering import (
    CoverCheck,
    CoverImages,
    FlowMap,
    HSet,
    build_mid_set,
    compute_cover_images,
    verify_cover,
)
from fhnwave.errors import ProofError
from fhnwave.interval import Interval
from fhnwave.proofs.report import CLOSED_OK, FACTORED, ProofReport, ReportEntry, merge_reports
from fhnwave.segments import ChainCheck, ChainEnd, IsolationCheck, Segment, check_segment_isolation
from fhnwave.utils import run_parallel

if TYPE_CHECKING:
    from fhnwave.dynamics import FhnParams
    from fhnwave.poincare import AffineSection
    from fhnwave.proofs.report import Check
    from fhnwave.proofs.scenario import MidSetSpec

logger = logging.getLogger(__name__)

_T = TypeVar("_T")

ISOLATION_CONDITIONS = ("S1a", "S2b", "S3b")
BLOCK_CONDITIONS = ("xu", "xs", "xmu")
# strict margins leave room for any small constriction of the licensed faces
CONSTRICTION_NOTE = "segment faces are licensed as delta-constricted h-sets, every small delta > 0"


@dataclass(frozen=True)
class Outcome:
    """Result of one pipeline task: a value or the error that replaced it."""

    value: object
    seconds: float
    error: Exception | None = None


def capture(fn: Callable[[], _T]) -> Outcome:
    """Run ``fn`` and keep a :class:`ProofError` (or a construction ``ValueError``) as data."""
    start = time.perf_counter()
    try:
        value: object = fn()
    except (ProofError, ValueError) as exc:
        logger.warning("task failed: %s: %s", type(exc).__name__, exc)
        return Outcome(None, time.perf_counter() - start, exc)
    return Outcome(value, time.perf_counter() - start)


async def acapture(fn: Callable[[], Awaitable[object]]) -> Outcome:
    """Async counterpart of :func:`capture`."""
    start = time.perf_counter()
    try:
        value = await fn()
    except (ProofError, ValueError) as exc:
        logger.warning("task failed: %s: %s", type(exc).__name__, exc)
        return Outcome(None, time.perf_counter() - start, exc)
    return Outcome(value, time.perf_counter() - start)


async def run_captured(tasks: Sequence[Callable[[], object]], *, jobs: int) -> list[Outcome]:
    """Run tasks on worker threads; results keep the task order."""
    return await run_parallel([partial(capture, task) for task in tasks], jobs=jobs)


def _worst(values: Sequence[Interval]) -> Interval:
    return Interval(min(float(v.lo) for v in values), min(float(v.hi) for v in values))


def _slacks(check: IsolationCheck) -> dict[str, Interval]:
    return {"S1a": check.s1a, "S2b": check.s2b, "S3b": -check.s3b}


def isolation_entries(prefix: str, outcome: Outcome) -> list[ReportEntry]:
    """``S1a``, ``S2b`` and ``S3b`` entries of one segment."""
    ids = [f"{prefix}:{c}" for c in ISOLATION_CONDITIONS]
    if outcome.error is not None:
        return [ReportEntry.error(i, outcome.error, seconds=outcome.seconds) for i in ids]
    check = outcome.value
    assert isinstance(check, IsolationCheck)
    entries = []
    for i, (name, slack) in zip(ids, _slacks(check).items(), strict=True):
        tag = f"{name}:{FACTORED if name == 'S1a' else CLOSED_OK}"
        entries.append(ReportEntry(i, tag, bool(slack.lo > 0), slack, outcome.seconds, str(check)))
    return entries


def chain_entries(prefix: str, outcome: Outcome) -> list[ReportEntry]:
    """Worst isolation slacks over a chain and the worst of its linking coverings."""
    ids = [f"{prefix}:{c}" for c in (*ISOLATION_CONDITIONS, "links")]
    if outcome.error is not None:
        return [ReportEntry.error(i, outcome.error, seconds=outcome.seconds) for i in ids]
    chain = outcome.value
    assert isinstance(chain, ChainCheck)
    entries = []
    detail = chain.failure or f"{len(chain.segments)} segments"
    for i, name in zip(ids, ISOLATION_CONDITIONS, strict=False):
        slack = _worst([_slacks(c)[name] for c in chain.isolation])
        tag = f"{name}:{FACTORED if name == 'S1a' else CLOSED_OK}"
        entries.append(ReportEntry(i, tag, bool(slack.lo > 0), slack, outcome.seconds, detail))
    links = _worst([c.margin for c in chain.coverings])
    entries.append(ReportEntry(ids[-1], "LINK", bool(links.lo > 0), links, detail=detail))
    return entries


def faces_match(x: HSet, y: HSet) -> bool:
    """Whether two h-sets have the same support on the same plane."""
    return bool(
        np.array_equal(x.section.origin, y.section.origin)
        and np.array_equal(x.section.frame, y.section.frame)
        and np.array_equal(x.center, y.center)
        and np.array_equal(x.dirs, y.dirs)
        and np.array_equal(x.half_widths, y.half_widths)
    )


def chain_target_face(end: Segment | ChainEnd) -> HSet:
    return end.face("in") if isinstance(end, Segment) else end.face()


def chain_link_entry(id: str, outcome: Outcome, end: Segment | ChainEnd) -> ReportEntry:
    """The last chain segment must end exactly on the chain end."""
    if outcome.error is not None or not isinstance(outcome.value, ChainCheck):
        return ReportEntry.link(id, linked=False, detail="chain was not built")
    last = outcome.value.segments[-1].face("out")
    linked = faces_match(last, chain_target_face(end))
    return ReportEntry.link(id, linked, detail=f"{last.name} = {chain_target_face(end).name}")


def face_link_entry(id: str, outcomes: Sequence[Outcome], face: str) -> ReportEntry:
    """A side or front face of a segment is an h-set of the loop once the segment isolates."""
    passed = all(
        o.error is None and isinstance(o.value, IsolationCheck) and o.value.passed
        for o in outcomes
    )
    return ReportEntry.link(id, passed, detail=f"face {face} of an isolating segment")


def block_entries(prefix: str, outcome: Outcome) -> list[ReportEntry]:
    ids = [f"{prefix}:{c}" for c in BLOCK_CONDITIONS]
    if outcome.error is not None:
        return [ReportEntry.error(i, outcome.error, seconds=outcome.seconds) for i in ids]
    check = outcome.value
    assert isinstance(check, BlockCheck)
    slacks = {"xu": check.xu, "xs": -check.xs, "xmu": -check.xmu}
    return [
        ReportEntry(
            i,
            f"{name}:{FACTORED if name == 'xmu' else CLOSED_OK}",
            bool(slack.lo > 0),
            slack,
            outcome.seconds,
            str(check),
        )
        for i, (name, slack) in zip(ids, slacks.items(), strict=True)
    ]


def cone_entries(prefix: str, outcome: Outcome) -> list[ReportEntry]:
    ids = [f"{prefix}:minor-{k}" for k in (1, 2, 3)]
    if outcome.error is not None:
        return [ReportEntry.error(i, outcome.error, seconds=outcome.seconds) for i in ids]
    check = outcome.value
    assert isinstance(check, ConeCheck)
    return [
        ReportEntry(
            i, f"minor-{k}:{FACTORED}", bool(m.lo > 0), m, outcome.seconds, str(check)
        )
        for k, (i, m) in enumerate(zip(ids, check.minors, strict=True), start=1)
    ]


def check_entry(id: str, tag: str, outcome: Outcome) -> ReportEntry:
    if outcome.error is not None:
        return ReportEntry.error(id, outcome.error, seconds=outcome.seconds)
    check = cast("Check", outcome.value)
    return ReportEntry.from_check(id, tag, check, seconds=outcome.seconds)


def isolate(
    segment: Segment, params: FhnParams, grid: int, central_grid: int
) -> Callable[[], IsolationCheck]:
    return partial(check_segment_isolation, segment, params, grid, central_grid=central_grid)


@dataclass(frozen=True)
class Junction:
    """``source => mid`` forward and ``target^T`` backcovering ``mid^T``, on one section."""

    mid: HSet
    cover: CoverCheck
    backcover: CoverCheck


def junction_from_images(
    forward: CoverImages,
    backward: CoverImages,
    section: AffineSection,
    spec: MidSetSpec,
    name: str,
) -> Junction:
    """Place a mid set between cached forward and backward images and verify both relations."""
    mid = build_mid_set(
        forward, backward, section, balance=spec.balance, margin=spec.margin, name=name
    )
    logger.info(
        "%s: center %s, half widths %s",
        name,
        np.array2string(mid.center, precision=6),
        np.array2string(mid.half_widths, precision=3),
    )
    cover = verify_cover(forward, mid, "cover")
    backcover = verify_cover(backward, mid.transposed(), "backcover")
    return Junction(mid, cover, backcover)


def backward_images(
    face: HSet, params: FhnParams, section: AffineSection, div: int, *, jobs: int = 1
) -> CoverImages:
    """Images of ``face^T`` under the inverse flow, on ``section``."""
    flow = FlowMap(params, section, "backward")
    return compute_cover_images(face.transposed(), flow, div, jobs=jobs)


def junction(
    source: HSet,
    target: HSet,
    params: FhnParams,
    section: AffineSection,
    div: int,
    spec: MidSetSpec,
    name: str,
    *,
    jobs: int = 1,
) -> Junction:
    """Connect ``source`` to ``target`` through a mid set on ``section``."""
    forward = compute_cover_images(source, FlowMap(params, section), div, jobs=jobs)
    backward = backward_images(target, params, section, div, jobs=jobs)
    return junction_from_images(forward, backward, section, spec, name)


def junction_entries(cover_id: str, back_id: str, outcome: Outcome) -> list[ReportEntry]:
    if outcome.error is not None:
        return [
            ReportEntry.error(i, outcome.error, seconds=outcome.seconds)
            for i in (cover_id, back_id)
        ]
    result = outcome.value
    assert isinstance(result, Junction)
    return [
        ReportEntry.from_cover(cover_id, result.cover, seconds=outcome.seconds),
        ReportEntry.from_cover(back_id, result.backcover),
    ]


def add_all(report: ProofReport, entries: Sequence[ReportEntry], *, required: bool = True) -> None:
    for entry in entries:
        report.add(entry)
        if required:
            report.require(entry.id)


def describe_mid_set(mid: HSet) -> str:
    """Geometry of a constructed mid set, exact to the last bit."""
    values = [*mid.center, *mid.dirs.ravel(), *mid.half_widths]
    return ",".join(float(v).hex() for v in values)


async def over_eps_ranges(
    kind: str,
    digest: str,
    ranges: Sequence[Interval],
    run: Callable[[Interval], Awaitable[ProofReport]],
) -> ProofReport:
    """Run one pipeline per ``eps`` range; several ranges merge under ``eps{j}:`` prefixes."""
    if len(ranges) == 1:
        return await run(ranges[0])
    parts = []
    for j, eps in enumerate(ranges):
        logger.info("eps range %d: [%s, %s]", j, float(eps.lo), float(eps.hi))
        parts.append((f"eps{j}:", await run(eps)))
    return merge_reports(kind, digest, parts)


__all__ = [
    "BLOCK_CONDITIONS",
    "CONSTRICTION_NOTE",
    "ISOLATION_CONDITIONS",
    "Junction",
    "Outcome",
    "acapture",
    "add_all",
    "backward_images",
    "block_entries",
    "capture",
    "chain_entries",
    "chain_link_entry",
    "chain_target_face",
    "check_entry",
    "cone_entries",
    "describe_mid_set",
    "face_link_entry",
    "faces_match",
    "isolate",
    "isolation_entries",
    "junction",
    "junction_entries",
    "junction_from_images",
    "over_eps_ranges",
    "run_captured",
]
