from fhnwave.integrator.flowset import FlowSet, VariationalSet
from fhnwave.integrator.taylor import (
    FieldLike,
    StepExpansion,
    StepResult,
    TaylorIntegrator,
    as_field,
    c0_step,
    c1_step,
    rough_enclosure,
    suggest_step,
)

__all__ = [
    "FieldLike",
    "FlowSet",
    "StepExpansion",
    "StepResult",
    "TaylorIntegrator",
    "VariationalSet",
    "as_field",
    "c0_step",
    "c1_step",
    "rough_enclosure",
    "suggest_step",
]
