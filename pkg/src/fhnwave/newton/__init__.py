from fhnwave.newton.operator import (
    NewtonOutcome,
    NewtonVerdict,
    interval_newton,
    newton_operator,
    newton_step,
)
from fhnwave.newton.periodic import (
    MultiShootingSystem,
    cyclic_matrix,
    newton_periodic,
    precondition_blocks,
)

__all__ = [
    "MultiShootingSystem",
    "NewtonOutcome",
    "NewtonVerdict",
    "cyclic_matrix",
    "interval_newton",
    "newton_operator",
    "newton_periodic",
    "newton_step",
    "precondition_blocks",
]
