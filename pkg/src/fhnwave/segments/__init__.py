from fhnwave.segments.chain import (
    DEFAULT_FACTOR,
    ChainCheck,
    abuild_chain,
    build_chain,
    build_chain_segments,
    chain_coverings,
)
from fhnwave.segments.isolation import (
    IsolationCheck,
    acheck_segments,
    check_isolation_ranges,
    check_segment_isolation,
    check_segments,
    eps_ranges,
)
from fhnwave.segments.segment import ChainEnd, Segment, w_plane

__all__ = [
    "DEFAULT_FACTOR",
    "ChainCheck",
    "ChainEnd",
    "IsolationCheck",
    "Segment",
    "abuild_chain",
    "acheck_segments",
    "build_chain",
    "build_chain_segments",
    "chain_coverings",
    "check_isolation_ranges",
    "check_segment_isolation",
    "check_segments",
    "eps_ranges",
    "w_plane",
]
