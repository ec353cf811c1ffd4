"""Existence and local uniqueness of the periodic orbit at one ``eps``."""

from __future__ import annotations

import logging
import time
from functools import partial

import anyio

from fhnwave.dynamics import FhnParams
from fhnwave.errors import ProofError
from fhnwave.newton import MultiShootingSystem, NewtonOutcome, newton_periodic
from fhnwave.oracle.orbit import (
    OrbitGuess,
    orbit_from_points,
    read_anchors,
    refine_orbit,
    seed_orbit,
    stabilize_frames,
)
from fhnwave.proofs.report import CLOSED_OK, ProofReport, ReportEntry
from fhnwave.proofs.scenario import NewtonScenario, decimal, scenario_hash

logger = logging.getLogger(__name__)

KIND = "newton_unique"
ENTRY_ID = "newton:unique"


def newton_guess(scenario: NewtonScenario, *, jobs: int = 1) -> OrbitGuess:
    """The refined orbit at ``eps`` with frames along the exit and entry directions."""
    eps = float(decimal(scenario.eps).mid())
    theta = float(decimal(scenario.theta).mid())
    if scenario.seed_file is not None:
        guess = orbit_from_points(read_anchors(scenario.seed_file), eps, theta)
        guess = refine_orbit(guess, jobs=jobs)
    else:
        guess = seed_orbit(eps, theta, anchors=scenario.anchors, jobs=jobs)
    return stabilize_frames(guess, jobs=jobs)


def newton_entry(outcome: NewtonOutcome, *, seconds: float | None = None) -> ReportEntry:
    return ReportEntry(
        ENTRY_ID,
        f"{outcome.verdict}:{CLOSED_OK}",
        outcome.proved,
        outcome.margin,
        seconds,
        str(outcome),
    )


def prove_newton_unique(
    scenario: NewtonScenario, *, guess: OrbitGuess | None = None, jobs: int = 1
) -> ProofReport:
    """Run the interval Newton operator around the float orbit.

    The verdict is ``PROVED`` exactly when the operator maps the box of
    ``radius`` strictly into itself.
    """
    report = ProofReport(KIND, scenario_hash(scenario))
    report.require(ENTRY_ID)
    start = time.perf_counter()
    try:
        if guess is None:
            guess = newton_guess(scenario, jobs=jobs)
        params = FhnParams.create(decimal(scenario.theta), decimal(scenario.eps))
        system = MultiShootingSystem(guess.sections, params)
        outcome = newton_periodic(system, scenario.radius, jobs=jobs)
    except ProofError as exc:
        report.add(ReportEntry.error(ENTRY_ID, exc, seconds=time.perf_counter() - start))
        return report
    report.add(newton_entry(outcome, seconds=time.perf_counter() - start))
    report.extras["anchors"] = str(guess.k)
    report.extras["radius"] = repr(scenario.radius)
    report.extras["enclosure_radius"] = repr(outcome.radius)
    if outcome.period is not None:
        report.extras["period"] = f"[{float(outcome.period.lo)!r}, {float(outcome.period.hi)!r}]"
    return report


async def aprove_newton_unique(
    scenario: NewtonScenario, *, guess: OrbitGuess | None = None, jobs: int = 1
) -> ProofReport:
    return await anyio.to_thread.run_sync(
        partial(prove_newton_unique, scenario, guess=guess, jobs=jobs)
    )


__all__ = ["aprove_newton_unique", "newton_entry", "newton_guess", "prove_newton_unique"]
