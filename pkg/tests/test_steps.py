import threading

import numpy as np
import pytest

from fhnwave.blocks import check_block, check_cone_condition, unit_block
from fhnwave.dynamics import (
    FhnParams,
    PolynomialField,
    SlowFastField,
    fast_eigenframe,
    fast_equilibrium,
)
from fhnwave.errors import NoCrossing, ProofError
from fhnwave.interval import Interval
from fhnwave.proofs.report import ProofReport, ReportEntry
from fhnwave.proofs.steps import (
    acapture,
    add_all,
    block_entries,
    capture,
    chain_entries,
    check_entry,
    cone_entries,
    describe_mid_set,
    face_link_entry,
    faces_match,
    isolation_entries,
    over_eps_ranges,
    run_captured,
)
from fhnwave.segments import Segment, check_segment_isolation
from fhnwave.utils import in_worker_thread, run_parallel_sync

EPS = Interval(0.0, 1e-3)


def _saddle() -> SlowFastField:
    fast = PolynomialField([[(1.0, (1, 0, 0))], [(-1.0, (0, 1, 0))]])
    slow = PolynomialField([[(-1.0, (0, 0, 1))]])
    return SlowFastField(fast, slow, EPS)


def _lower_segment() -> Segment:
    front = np.array([fast_equilibrium(0.025, -0.1), 0.0, 0.025])
    rear = np.array([fast_equilibrium(0.024, -0.1), 0.0, 0.024])
    frame = fast_eigenframe(0.5 * (front[0] + rear[0]), 0.61)
    return Segment.create(front, rear, frame, 1e-3, 1e-3, name="lower")


def _boom() -> None:
    raise NoCrossing("left the window")


def test_capture_keeps_proof_errors_as_data() -> None:
    ok = capture(lambda: 3)
    assert ok.value == 3
    assert ok.error is None
    failed = capture(_boom)
    assert failed.value is None
    assert isinstance(failed.error, NoCrossing)

    def broken() -> None:
        raise RuntimeError("bug")

    with pytest.raises(RuntimeError):
        capture(broken)


async def test_async_capture_and_parallel_order() -> None:
    async def value() -> int:
        return 7

    assert (await acapture(value)).value == 7
    outcomes = await run_captured([lambda: 1, _boom, lambda: 3], jobs=2)
    assert [o.value for o in outcomes] == [1, None, 3]
    assert isinstance(outcomes[1].error, ProofError)


async def test_nested_fan_out_stays_on_the_worker_thread() -> None:
    def inner() -> int:
        return threading.get_ident()

    def outer() -> tuple[int, list[int], bool]:
        return threading.get_ident(), run_parallel_sync([inner] * 3, jobs=4), in_worker_thread()

    outcomes = await run_captured([outer] * 4, jobs=4)
    for outcome in outcomes:
        assert isinstance(outcome.value, tuple)
        ident, inner_idents, flagged = outcome.value
        assert inner_idents == [ident] * 3
        assert flagged
    assert not in_worker_thread()


def test_isolation_entries_of_a_real_segment() -> None:
    params = FhnParams.create("0.61", Interval(0.0, 1e-4))
    outcome = capture(lambda: check_segment_isolation(_lower_segment(), params, 8))
    entries = isolation_entries("segment:DL", outcome)
    assert [e.id for e in entries] == ["segment:DL:S1a", "segment:DL:S2b", "segment:DL:S3b"]
    assert [e.tag for e in entries] == ["S1a:FACTORED", "S2b:CLOSED-OK", "S3b:CLOSED-OK"]
    assert all(e.passed for e in entries)
    assert all(float(e.margin.lo) > 0 for e in entries)
    links = face_link_entry("link:DL.out", [outcome], "out")
    assert links.passed


def test_failed_tasks_fill_every_entry_with_the_error() -> None:
    failed = capture(_boom)
    entries = isolation_entries("segment:UL", failed)
    assert len(entries) == 3
    assert {e.tag for e in entries} == {"ERROR:NoCrossing"}
    chain = chain_entries("chain:Up", failed)
    assert [e.id for e in chain][-1] == "chain:Up:links"
    assert not any(e.passed for e in chain)
    assert len(block_entries("block:Bu", failed)) == 3
    assert [e.id for e in cone_entries("cone:Bu", failed)] == [
        "cone:Bu:minor-1",
        "cone:Bu:minor-2",
        "cone:Bu:minor-3",
    ]
    assert check_entry("x", "T", failed).tag == "ERROR:NoCrossing"
    assert not face_link_entry("link", [failed], "ls").passed


def test_block_and_cone_entries() -> None:
    block = block_entries("block:B", capture(lambda: check_block(unit_block(), _saddle(), 4)))
    assert [e.tag for e in block] == ["xu:CLOSED-OK", "xs:CLOSED-OK", "xmu:FACTORED"]
    assert all(e.passed for e in block)
    cone = cone_entries(
        "cone:B", capture(lambda: check_cone_condition(unit_block(), _saddle(), 2))
    )
    assert all(e.passed for e in cone)
    assert bool(cone[2].margin.contains(8.0))


def test_faces_match() -> None:
    segment = _lower_segment()
    assert faces_match(segment.face("in"), segment.face("in"))
    assert not faces_match(segment.face("in"), segment.face("out"))
    assert describe_mid_set(segment.face("in")).count(",") == 7


def test_add_all_requires_by_default() -> None:
    report = ProofReport("periodic_small_eps", "h")
    add_all(report, [ReportEntry.link("a", linked=True)])
    add_all(report, [ReportEntry.link("b", linked=True)], required=False)
    assert report.required == ["a"]


async def test_eps_ranges_merge_under_prefixes() -> None:
    async def run(eps: Interval) -> ProofReport:
        report = ProofReport("periodic_small_eps", "h")
        report.add(ReportEntry("segment:DL:S1a", "S1a:FACTORED", True, eps))
        report.require("segment:DL:S1a")
        return report

    single = await over_eps_ranges("periodic_small_eps", "h", [EPS], run)
    assert [e.id for e in single.entries] == ["segment:DL:S1a"]
    ranges = [Interval(0.0, 1e-4), Interval(1e-4, 1e-3)]
    merged = await over_eps_ranges("periodic_small_eps", "h", ranges, run)
    assert [e.id for e in merged.entries] == ["eps0:segment:DL:S1a", "eps1:segment:DL:S1a"]
    assert merged.proved