import os

import numpy as np
import pytest

from fhnwave.covering import CoverImages
from fhnwave.dynamics import PolynomialField
from fhnwave.interval import Interval
from fhnwave.oracle import OrbitGuess, orbit_from_points
from fhnwave.poincare import AffineSection
from fhnwave.proofs import (
    ContinuationScenario,
    ContinuationStep,
    HomoclinicScenario,
    NewtonScenario,
    PeriodicScenario,
    ProofReport,
    ReportEntry,
    Verdict,
    arun_continuation,
    continuation_step,
    prove_homoclinic,
    prove_newton_unique,
    prove_periodic,
    run_continuation,
    scenario_hash,
)
from fhnwave.proofs.continuation import next_hset
from fhnwave.proofs.periodic import corner_segments

slow = pytest.mark.skipif(
    "FHNWAVE_SLOW" not in os.environ, reason="set FHNWAVE_SLOW to run the desk-scale proofs"
)

JOBS = int(os.environ.get("FHNWAVE_JOBS", "4"))
SECTION = AffineSection.create([0.0, 0.0, 0.0], [1.0, 0.0, 0.0])


def _images(left: list[float], right: list[float], entry: list[float]) -> CoverImages:
    def pair(exit_values: list[float]) -> Interval:
        return Interval(np.stack([exit_values, np.zeros(len(exit_values))], axis=-1))

    interior = Interval(np.stack([np.zeros(len(entry)), entry], axis=-1))
    return CoverImages(None, len(entry), interior, pair(left), pair(right))


def test_next_hset_keeps_room_inside_the_exit_images() -> None:
    images = _images([-0.5, -0.4], [0.6, 0.7], [0.2, -0.3])
    target = next_hset(images, SECTION, margin=0.1, exit_cap=1.0, name="X1")
    assert target is not None
    assert target.name == "X1"
    assert target.half_widths[0] == pytest.approx(0.4 / 1.1)
    assert target.half_widths[1] == pytest.approx(0.3 * 1.1)
    capped = next_hset(images, SECTION, margin=0.1, exit_cap=0.1, name="X1")
    assert capped is not None
    assert capped.half_widths[0] == pytest.approx(0.1)


def test_next_hset_needs_exit_edges_on_both_sides() -> None:
    same_side = _images([0.5, 0.4], [0.6, 0.7], [0.2, -0.3])
    assert next_hset(same_side, SECTION, margin=0.1, exit_cap=1.0, name="X1") is None
    flat = _images([-0.5, -0.4], [0.6, 0.7], [0.0, 0.0])
    assert next_hset(flat, SECTION, margin=0.1, exit_cap=1.0, name="X1") is None


def test_corner_segments_follow_the_scenario() -> None:
    segments = corner_segments(PeriodicScenario())
    assert sorted(segments) == ["DL", "DR", "UL", "UR"]
    assert segments["UR"].a == pytest.approx(0.029)
    # down corners run with decreasing w
    assert segments["DL"].orientation == -1.0
    assert segments["UL"].orientation == 1.0


# attracted to the unit circle in the plane z = 0, repelled from that plane
SADDLE_CYCLE = PolynomialField(
    [
        [(1.0, (0, 1, 0)), (1.0, (1, 0, 0)), (-1.0, (3, 0, 0)), (-1.0, (1, 2, 0))],
        [(-1.0, (1, 0, 0)), (1.0, (0, 1, 0)), (-1.0, (2, 1, 0)), (-1.0, (0, 3, 0))],
        [(1.0, (0, 0, 1))],
    ]
)


def _saddle_guess(eps: float = 1e-3) -> OrbitGuess:
    angles = -2.0 * np.pi * np.arange(6) / 6
    points = np.stack([1.02 * np.cos(angles), 1.02 * np.sin(angles), np.full(6, 0.01)], axis=-1)
    return orbit_from_points(points, eps, 0.61, field=SADDLE_CYCLE)


def test_thin_continuation_step_around_a_saddle_cycle() -> None:
    scenario = ContinuationScenario(div=2, x0_size=1e-4)
    step = continuation_step(Interval(1e-3), _saddle_guess(), scenario, digest="toy")
    report = step.report
    assert step.proved, [e.line() for e in report.failures] + report.missing
    assert [e.id for e in report.entries] == [f"cover:X{i}=>X{(i + 1) % 6}" for i in range(6)]
    assert step.period is not None
    assert float(step.period.lo) <= 2.0 * np.pi <= float(step.period.hi)
    assert step.guess.k == 6


def _scripted_steps(
    monkeypatch: pytest.MonkeyPatch, outcomes: list[bool]
) -> list[tuple[Interval, float | None]]:
    calls: list[tuple[Interval, float | None]] = []

    def fake(
        eps: Interval,
        guess: OrbitGuess,
        scenario: ContinuationScenario,
        *,
        size: float | None = None,
        digest: str = "",
        jobs: int = 1,
    ) -> ContinuationStep:
        proved = outcomes[len(calls)]
        calls.append((eps, size))
        report = ProofReport("continuation", digest)
        report.require("cover:X0=>X1")
        margin = Interval(1.0) if proved else Interval(-1.0)
        report.add(ReportEntry("cover:X0=>X1", "C2:CLOSED-OK", proved, margin))
        return ContinuationStep(eps, report, guess)

    monkeypatch.setattr("fhnwave.proofs.continuation.continuation_step", fake)
    return calls


def _bounds(calls: list[tuple[Interval, float | None]]) -> list[tuple[float, float]]:
    return [(float(eps.lo), float(eps.hi)) for eps, _ in calls]


async def test_continuation_adapts_the_increment(monkeypatch: pytest.MonkeyPatch) -> None:
    calls = _scripted_steps(monkeypatch, [True, False, True, True])
    scenario = ContinuationScenario(
        eps_start="0.001",
        eps_stop="0.000995",
        increment=2e-6,
        max_increment=3e-6,
        x0_size=1e-6,
        max_steps=10,
    )
    report = await arun_continuation(scenario, guess=_saddle_guess())
    assert report.proved
    # grown after a pass, halved after a failure, clipped at eps_stop
    assert _bounds(calls) == [
        pytest.approx((0.000998, 0.001)),
        pytest.approx((0.000995, 0.000998)),
        pytest.approx((0.0009965, 0.000998)),
        pytest.approx((0.000995, 0.0009965)),
    ]
    assert [size for _, size in calls] == pytest.approx([1e-6, 1e-6, 5e-7, 7.5e-7])
    assert [e.id for e in report.entries] == [
        "step0:cover:X0=>X1",
        "step1:cover:X0=>X1",
        "step2:cover:X0=>X1",
    ]
    assert report.scenario_hash == scenario_hash(scenario)


async def test_continuation_stops_below_the_smallest_increment(
    monkeypatch: pytest.MonkeyPatch,
) -> None:
    calls = _scripted_steps(monkeypatch, [False, False, False, False])
    scenario = ContinuationScenario(increment=2e-6, min_increment=5e-7)
    report = await arun_continuation(scenario, guess=_saddle_guess())
    assert len(calls) == 3
    assert [size for _, size in calls] == pytest.approx([1e-6, 5e-7, 2.5e-7])
    # only the last failed attempt is kept
    assert [e.id for e in report.entries] == ["step0:cover:X0=>X1"]
    assert report.verdict == Verdict.NOT_PROVED


async def test_continuation_stops_after_max_steps(monkeypatch: pytest.MonkeyPatch) -> None:
    calls = _scripted_steps(monkeypatch, [True] * 5)
    scenario = ContinuationScenario(
        eps_stop="0.0009", increment=2e-6, max_increment=3e-6, max_steps=2
    )
    report = await arun_continuation(scenario, guess=_saddle_guess())
    assert report.proved
    widths = [float(eps.hi) - float(eps.lo) for eps, _ in calls]
    assert widths == pytest.approx([2e-6, 3e-6])


@slow
def test_periodic_orbits_for_small_eps() -> None:
    report = prove_periodic(PeriodicScenario(), jobs=JOBS)
    assert report.proved, [e.line() for e in report.failures] + report.missing


@slow
def test_homoclinic_orbits_for_small_eps() -> None:
    report = prove_homoclinic(HomoclinicScenario(), jobs=JOBS)
    assert report.proved, [e.line() for e in report.failures] + report.missing


@slow
def test_local_uniqueness_by_newton() -> None:
    report = prove_newton_unique(NewtonScenario(), jobs=JOBS)
    assert report.proved, [e.line() for e in report.failures]
    assert "period" in report.extras


@slow
def test_continuation_proves_its_first_steps() -> None:
    report = run_continuation(ContinuationScenario(max_steps=2), jobs=JOBS)
    assert report.proved, [e.line() for e in report.failures] + report.missing
    assert "step1:period" in report.extras
