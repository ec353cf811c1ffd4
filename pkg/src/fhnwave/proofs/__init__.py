from fhnwave.proofs.continuation import (
    ContinuationStep,
    arun_continuation,
    continuation_step,
    run_continuation,
)
from fhnwave.proofs.homoclinic import aprove_homoclinic, prove_homoclinic
from fhnwave.proofs.newton import aprove_newton_unique, prove_newton_unique
from fhnwave.proofs.periodic import aprove_periodic, prove_periodic
from fhnwave.proofs.report import ProofReport, ReportEntry, Verdict
from fhnwave.proofs.scenario import (
    ContinuationScenario,
    HomoclinicScenario,
    NewtonScenario,
    PeriodicScenario,
    ProofScenario,
    load_scenario,
    scenario_hash,
    skeleton_fragment,
)

__all__ = [
    "ContinuationScenario",
    "ContinuationStep",
    "HomoclinicScenario",
    "NewtonScenario",
    "PeriodicScenario",
    "ProofReport",
    "ProofScenario",
    "ReportEntry",
    "Verdict",
    "aprove_homoclinic",
    "aprove_newton_unique",
    "aprove_periodic",
    "arun_continuation",
    "continuation_step",
    "load_scenario",
    "prove_homoclinic",
    "prove_newton_unique",
    "prove_periodic",
    "run_continuation",
    "scenario_hash",
    "skeleton_fragment",
]
