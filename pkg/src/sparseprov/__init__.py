"""Filter-based topology learning and path provenance for sparse networks."""

__version__ = "0.1.0"

from .topology import (
    BudgetExceeded,
    NeighborProfile,
    Topology,
    complement_count,
    complement_edges,
    complete_topology,
    enumerate_paths,
    random_sparse_topology,
    topology_from_profile,
)
from .bloom import BloomFilter, derive_indices
from .identity import KeyRing

__all__ = [
    "BudgetExceeded",
    "BloomFilter",
    "KeyRing",
    "NeighborProfile",
    "Topology",
    "complement_count",
    "complement_edges",
    "complete_topology",
    "derive_indices",
    "enumerate_paths",
    "random_sparse_topology",
    "topology_from_profile",
    "__version__",
]
