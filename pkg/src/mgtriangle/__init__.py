"""Streaming triangle, wedge and transitivity estimation for multigraph edge streams."""

from .core import EdgeEntry, Parameters, ReservoirState, WedgeRecord, beta_for_budget, run_stream
from .errors import (
    InputError,
    InvalidWedgeError,
    MGTriangleError,
    OracleCapError,
    RejectedEdgeError,
    StreamParseError,
    UnsupportedWindowError,
)
from .hashing import canonical_edge, hash_unit, wedge_key
from .oracle import ExactCounts, exact_counts
from .stream import (
    TimedEdge,
    edges_from_pairs,
    parse_edge_stream,
    permute_stream,
    read_edge_stream,
    synthesize_multigraph,
)
from .windows import Estimates, WindowSpec, estimate, estimate_many, parse_windows

__version__ = "0.1.0"
