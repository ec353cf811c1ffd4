"""Periodic orbits for all small ``eps``.

The closed loop of h-sets runs through the four corner segments, the two mid
sets of the fast jumps and the two chains along the slow branches::

    DL.ru => midLeft <= UL.ls,  UL ... Up ... UR.in,
    UR.lu => midRight <= DR.rs,  DR ... Down ... DL.in

Every relation of the loop becomes one report entry, so a report proves the
orbit exactly when all of them pass.
"""

from __future__ import annotations

import logging
from functools import partial

import anyio

from fhnwave.dynamics import FhnParams
from fhnwave.interval import Interval
from fhnwave.proofs.report import ProofReport
from fhnwave.proofs.scenario import PeriodicScenario, decimal, scenario_hash
from fhnwave.proofs.steps import (
    CONSTRICTION_NOTE,
    Junction,
    Outcome,
    acapture,
    add_all,
    chain_entries,
    chain_link_entry,
    describe_mid_set,
    face_link_entry,
    isolate,
    isolation_entries,
    junction,
    junction_entries,
    over_eps_ranges,
    run_captured,
)
from fhnwave.segments import Segment, abuild_chain, eps_ranges

logger = logging.getLogger(__name__)

CORNERS = ("DL", "UL", "UR", "DR")
KIND = "periodic_small_eps"


def corner_segments(scenario: PeriodicScenario) -> dict[str, Segment]:
    return {s.corner: s.build(scenario.corners[s.corner]) for s in scenario.segments}


def _record_mid(report: ProofReport, outcome: Outcome) -> None:
    if isinstance(outcome.value, Junction):
        report.extras[outcome.value.mid.name] = describe_mid_set(outcome.value.mid)


async def aprove_periodic_range(
    scenario: PeriodicScenario, eps: Interval, *, jobs: int = 1, digest: str = ""
) -> ProofReport:
    """Check the loop for one range of ``eps``."""
    params = FhnParams.create(decimal(scenario.theta), eps)
    segments = corner_segments(scenario)
    dl, ul, ur, dr = (segments[c] for c in CORNERS)
    grids, chains, div = scenario.grids, scenario.chains, scenario.div
    left, right = scenario.left_section.build(), scenario.right_section.build()

    tasks = [isolate(segments[c], params, grids.segment, grids.central) for c in CORNERS]
    tasks.append(
        partial(
            junction, dl.face("ru"), ul.face("ls"), params, left, div, scenario.mid_set, "midLeft"
        )
    )
    tasks.append(
        partial(
            junction, ur.face("lu"), dr.face("rs"), params, right, div, scenario.mid_set, "midRight"
        )
    )
    *isolated, mid_left, mid_right = await run_captured(tasks, jobs=jobs)
    iso = dict(zip(CORNERS, isolated, strict=True))

    up = await acapture(
        partial(
            abuild_chain,
            ul,
            ur,
            chains.n_up,
            params,
            grids.chain,
            factor=chains.factor,
            jobs=jobs,
            name="Up",
        )
    )
    down = await acapture(
        partial(
            abuild_chain,
            dr,
            dl,
            chains.n_down,
            params,
            grids.chain,
            factor=chains.factor,
            jobs=jobs,
            name="Down",
        )
    )

    report = ProofReport(KIND, digest)
    report.extras["eps"] = f"[{float(eps.lo).hex()}, {float(eps.hi).hex()}]"
    report.extras["constriction"] = CONSTRICTION_NOTE
    _record_mid(report, mid_left)
    _record_mid(report, mid_right)
    add_all(report, isolation_entries("segment:DL", iso["DL"]))
    add_all(report, [face_link_entry("link:DL.ru", [iso["DL"]], "ru")])
    add_all(report, junction_entries("cover:DL.ru=>midLeft", "backcover:UL.ls=>midLeft", mid_left))
    add_all(report, [face_link_entry("link:UL.ls", [iso["UL"]], "ls")])
    add_all(report, isolation_entries("segment:UL", iso["UL"]))
    add_all(report, chain_entries("chain:Up", up))
    add_all(report, [chain_link_entry("link:Up=>UR.in", up, ur)])
    add_all(report, isolation_entries("segment:UR", iso["UR"]))
    add_all(report, [face_link_entry("link:UR.lu", [iso["UR"]], "lu")])
    add_all(
        report, junction_entries("cover:UR.lu=>midRight", "backcover:DR.rs=>midRight", mid_right)
    )
    add_all(report, [face_link_entry("link:DR.rs", [iso["DR"]], "rs")])
    add_all(report, isolation_entries("segment:DR", iso["DR"]))
    add_all(report, chain_entries("chain:Down", down))
    add_all(report, [chain_link_entry("link:Down=>DL.in", down, dl)])
    logger.info("periodic loop for eps <= %.3e: %s", float(eps.hi), report.verdict)
    return report


async def aprove_periodic(scenario: PeriodicScenario, *, jobs: int = 1) -> ProofReport:
    """Prove a periodic orbit for every ``eps`` in ``(0, eps_max]``.

    With ``eps_splits`` every sub-range runs the whole loop and the entries are
    merged under ``eps{j}:`` prefixes.
    """
    digest = scenario_hash(scenario)
    ranges = eps_ranges(scenario.eps_max, scenario.eps_splits)
    return await over_eps_ranges(
        KIND,
        digest,
        ranges,
        partial(aprove_periodic_range, scenario, jobs=jobs, digest=digest),
    )


def prove_periodic(scenario: PeriodicScenario, *, jobs: int = 1) -> ProofReport:
    """Synchronous wrapper of :func:`aprove_periodic`."""
    return anyio.run(partial(aprove_periodic, scenario, jobs=jobs))


__all__ = [
    "CORNERS",
    "aprove_periodic",
    "aprove_periodic_range",
    "corner_segments",
    "prove_periodic",
]
