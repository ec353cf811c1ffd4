"""Float (non-rigorous) tools that find the data the proofs check."""

from fhnwave.oracle.flow import (
    DEFAULT_TOL,
    FloatCrossing,
    Trajectory,
    float_rhs,
    float_section_map,
    rk_orbit,
)
from fhnwave.oracle.orbit import (
    OrbitGuess,
    float_cycle,
    orbit_from_points,
    orbit_trajectory,
    read_anchors,
    refine_orbit,
    resample,
    sections_from_points,
    seed_orbit,
    stabilize_frames,
    write_csv,
)
from fhnwave.oracle.skeleton import SingularSkeleton, front_speed, shoot_skeleton

__all__ = [
    "DEFAULT_TOL",
    "FloatCrossing",
    "OrbitGuess",
    "SingularSkeleton",
    "Trajectory",
    "float_cycle",
    "float_rhs",
    "float_section_map",
    "front_speed",
    "orbit_from_points",
    "orbit_trajectory",
    "read_anchors",
    "refine_orbit",
    "resample",
    "rk_orbit",
    "sections_from_points",
    "seed_orbit",
    "shoot_skeleton",
    "stabilize_frames",
    "write_csv",
]
