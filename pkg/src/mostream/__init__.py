"""Streaming multi-objective clustering with a bounded-memory tree synopsis."""

from .core import (
    ClusterSummary,
    ClusteringSolution,
    DataPoint,
    ObjectiveVector,
    SolutionOrigin,
    StreamConfig,
    WindowBatch,
)
from .engine import EngineState, FinalSelection, WindowReport, run_stream
from .objectives import ParetoArchive
from .seeders import SeederParams

__all__ = [
    "ClusterSummary",
    "ClusteringSolution",
    "DataPoint",
    "EngineState",
    "FinalSelection",
    "ObjectiveVector",
    "ParetoArchive",
    "SeederParams",
    "SolutionOrigin",
    "StreamConfig",
    "WindowBatch",
    "WindowReport",
    "run_stream",
]
