from fhnwave.covering.check import (
    CoverCheck,
    CoverImages,
    c1_slack,
    c2_slack,
    check_covering,
    check_parametric_covering,
    compute_cover_images,
    compute_parametric_images,
    identity_covering,
    verify_cover,
)
from fhnwave.covering.hset import HSet, parameter_cells
from fhnwave.covering.maps import AffineMap, FlowMap, ParameterMap, ParametricFlowMap, SectionMap
from fhnwave.covering.midset import build_mid_set

__all__ = [
    "AffineMap",
    "CoverCheck",
    "CoverImages",
    "FlowMap",
    "HSet",
    "ParameterMap",
    "ParametricFlowMap",
    "SectionMap",
    "build_mid_set",
    "c1_slack",
    "c2_slack",
    "check_covering",
    "check_parametric_covering",
    "compute_cover_images",
    "compute_parametric_images",
    "identity_covering",
    "parameter_cells",
    "verify_cover",
]
