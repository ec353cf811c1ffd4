from fhnwave.blocks.block import (
    FACES,
    Block,
    admissible_inverse,
    block_chain_end,
    boundary_hset,
    is_admissible,
)
from fhnwave.blocks.checks import (
    DEFAULT_BLOCK_GRID,
    DEFAULT_SWEEP_GRID,
    BlockCheck,
    ConeCheck,
    SweepCheck,
    check_block,
    check_cone_condition,
    check_exit_sweep,
    cone_matrix,
    face_values,
    sweep_region,
    unit_block,
)

__all__ = [
    "DEFAULT_BLOCK_GRID",
    "DEFAULT_SWEEP_GRID",
    "FACES",
    "Block",
    "BlockCheck",
    "ConeCheck",
    "SweepCheck",
    "admissible_inverse",
    "block_chain_end",
    "boundary_hset",
    "check_block",
    "check_cone_condition",
    "check_exit_sweep",
    "cone_matrix",
    "face_values",
    "is_admissible",
    "sweep_region",
    "unit_block",
]
