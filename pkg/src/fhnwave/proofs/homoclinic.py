"""Homoclinic orbits for all small ``eps``, with ``theta`` in a small range.

The unstable manifold of the origin leaves the block ``BU`` through its exit
face; the stretched block ``BUext`` carries it out to a face that is shot over
the whole ``theta`` range onto the left section. From there the h-sets follow
the periodic loop up to the lower slow branch, whose chain ends on the slow
face of the block ``BS`` around the origin.
"""

from __future__ import annotations

import logging
from functools import partial

import anyio
import numpy as np

from fhnwave.blocks import (
    Block,
    block_chain_end,
    boundary_hset,
    check_block,
    check_cone_condition,
    check_exit_sweep,
)
from fhnwave.covering import HSet, ParametricFlowMap, compute_parametric_images
from fhnwave.dynamics import FhnParams
from fhnwave.integrator import FlowSet
from fhnwave.interval import Interval
from fhnwave.poincare import AffineSection
from fhnwave.proofs.report import CLOSED_OK, ProofReport, ReportEntry
from fhnwave.proofs.scenario import HomoclinicScenario, MidSetSpec, decimal, scenario_hash
from fhnwave.proofs.steps import (
    CONSTRICTION_NOTE,
    Junction,
    Outcome,
    acapture,
    add_all,
    backward_images,
    block_entries,
    chain_entries,
    chain_link_entry,
    check_entry,
    cone_entries,
    describe_mid_set,
    face_link_entry,
    isolate,
    isolation_entries,
    junction,
    junction_entries,
    junction_from_images,
    over_eps_ranges,
    run_captured,
)
from fhnwave.segments import abuild_chain, eps_ranges

logger = logging.getLogger(__name__)

KIND = "homoclinic"
SEGMENTS = ("UL", "UR", "DR")


def exit_face_source(face: HSet) -> partial[FlowSet]:
    """The whole face as one source set per parameter cell."""
    return partial(_whole_face, face)


def _whole_face(face: HSet, cells: Interval) -> FlowSet:
    n = cells.shape[0]
    return face.flowset(Interval(-np.ones((n, 2)), np.ones((n, 2))))


def _theta_field(eps: Interval, cells: Interval) -> FhnParams:
    return FhnParams(theta=cells, eps=eps.broadcast_to(cells.shape))


def theta_junction(
    block: Block,
    target: HSet,
    params: FhnParams,
    section: AffineSection,
    div: int,
    spec: MidSetSpec,
    *,
    jobs: int = 1,
) -> Junction:
    """``theta => midLeft`` from the exit face of ``block``; ``target^T`` backcovers ``midLeft^T``.

    The exit face is propagated once for the ``div`` cells of the ``theta``
    range and once for each end point of the range.
    """
    theta = params.theta
    g = ParametricFlowMap(
        partial(_theta_field, params.eps),
        exit_face_source(boundary_hset(block, 1)),
        section,
    )
    forward = compute_parametric_images(
        float(theta.lo), float(theta.hi), g, div, name="theta", jobs=jobs
    )
    backward = backward_images(target, params, section, div, jobs=jobs)
    return junction_from_images(forward, backward, section, spec, "midLeft")


def _blocks_link(id: str, block: Outcome, sweep: Outcome) -> ReportEntry:
    linked = all(
        o.error is None and getattr(o.value, "passed", False) for o in (block, sweep)
    )
    return ReportEntry.link(id, linked, detail="exit face of BU swept to the exit face of BUext")


def _record_mid(report: ProofReport, outcome: Outcome) -> None:
    if isinstance(outcome.value, Junction):
        report.extras[outcome.value.mid.name] = describe_mid_set(outcome.value.mid)


async def aprove_homoclinic_range(
    scenario: HomoclinicScenario, eps: Interval, *, jobs: int = 1, digest: str = ""
) -> ProofReport:
    """Check the connecting chain of h-sets for one range of ``eps``."""
    params = FhnParams.create(scenario.theta_range, eps)
    grids, chains, div = scenario.grids, scenario.chains, scenario.div
    segments = {s.corner: s.build(scenario.corners[s.corner]) for s in scenario.segments}
    ul, ur, dr = (segments[c] for c in SEGMENTS)
    bu, bs = scenario.bu.build("BU"), scenario.bs.build("BS")
    factor = decimal(scenario.bu_ext_factor)
    bu_ext = bu.scaled([scenario.bu_ext_factor, "1", "1"], "BUext")
    left, right = scenario.left_section.build(), scenario.right_section.build()

    tasks = [
        partial(check_block, bu, params, grids.block),
        partial(check_cone_condition, bu, params, grids.cone),
        partial(check_exit_sweep, bu_ext, params, float(factor.lo), grids.sweep),
        partial(check_block, bs, params, grids.block),
        partial(check_cone_condition, bs, params, grids.cone),
        *(isolate(segments[c], params, grids.segment, grids.central) for c in SEGMENTS),
        partial(theta_junction, bu_ext, ul.face("ls"), params, left, div, scenario.mid_set),
        partial(
            junction, ur.face("lu"), dr.face("rs"), params, right, div, scenario.mid_set, "midRight"
        ),
    ]
    outcomes = await run_captured(tasks, jobs=jobs)
    bu_block, bu_cone, sweep, bs_block, bs_cone = outcomes[:5]
    iso = dict(zip(SEGMENTS, outcomes[5:8], strict=True))
    mid_left, mid_right = outcomes[8:]

    bs_end = block_chain_end(bs, 3)
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
            bs_end,
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
    report.extras["theta"] = f"[{float(params.theta.lo).hex()}, {float(params.theta.hi).hex()}]"
    _record_mid(report, mid_left)
    _record_mid(report, mid_right)
    add_all(report, block_entries("block:BU", bu_block))
    add_all(report, cone_entries("cone:BU", bu_cone))
    add_all(report, [check_entry("sweep:BUext", f"sweep:{CLOSED_OK}", sweep)])
    add_all(report, [_blocks_link("link:BU=>BUext[1]", bu_block, sweep)])
    add_all(report, junction_entries("cover:theta=>midLeft", "backcover:UL.ls=>midLeft", mid_left))
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
    add_all(report, [chain_link_entry("link:Down=>BS[3]", down, bs_end)])
    add_all(report, block_entries("block:BS", bs_block))
    add_all(report, cone_entries("cone:BS", bs_cone))
    logger.info("homoclinic chain for eps <= %.3e: %s", float(eps.hi), report.verdict)
    return report


async def aprove_homoclinic(scenario: HomoclinicScenario, *, jobs: int = 1) -> ProofReport:
    """Prove a homoclinic orbit at some ``theta`` in range for every ``eps`` in ``(0, eps_max]``."""
    digest = scenario_hash(scenario)
    ranges = eps_ranges(scenario.eps_max, scenario.eps_splits)
    return await over_eps_ranges(
        KIND,
        digest,
        ranges,
        partial(aprove_homoclinic_range, scenario, jobs=jobs, digest=digest),
    )


def prove_homoclinic(scenario: HomoclinicScenario, *, jobs: int = 1) -> ProofReport:
    """Synchronous wrapper of :func:`aprove_homoclinic`."""
    return anyio.run(partial(aprove_homoclinic, scenario, jobs=jobs))


__all__ = [
    "aprove_homoclinic",
    "aprove_homoclinic_range",
    "exit_face_source",
    "prove_homoclinic",
    "theta_junction",
]
