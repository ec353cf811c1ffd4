from fhnwave.interval.boxes import face_cells, grid_edges, subdivide, unit_box
from fhnwave.interval.core import (
    Interval,
    as_interval,
    batched_matmul,
    cross,
    dot,
    iv_arith,
    matvec,
)
from fhnwave.interval.linalg import (
    det3,
    gauss_solve_enclose,
    inverse,
    leading_minors3,
    orthonormalize,
    solve_preconditioned,
)

__all__ = [
    "Interval",
    "as_interval",
    "batched_matmul",
    "cross",
    "det3",
    "dot",
    "face_cells",
    "gauss_solve_enclose",
    "grid_edges",
    "inverse",
    "iv_arith",
    "leading_minors3",
    "matvec",
    "orthonormalize",
    "solve_preconditioned",
    "subdivide",
    "unit_box",
]
