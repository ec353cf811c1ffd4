from fhnwave.config import init_config
from fhnwave.proofs import (
    load_scenario,
    prove_homoclinic,
    prove_newton_unique,
    prove_periodic,
    run_continuation,
)

__all__ = [
    "init_config",
    "load_scenario",
    "prove_homoclinic",
    "prove_newton_unique",
    "prove_periodic",
    "run_continuation",
]
