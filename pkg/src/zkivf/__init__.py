"""Verifiable fixed-shape IVF-PQ retrieval over committed snapshots."""

from .exceptions import ZkIvfError
from .fixedpoint import FieldSpec, FxScale, FxVector
from .shaping import IvfPqConfig, Snapshot, build_snapshot

__version__ = "0.1.0"

__all__ = ["ZkIvfError", "FieldSpec", "FxScale", "FxVector", "IvfPqConfig", "Snapshot",
           "build_snapshot", "__version__"]
