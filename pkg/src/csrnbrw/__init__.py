"""Community detection on collaboration networks with cycle-aware
(RNBRW x collaboration-strength) edge weighting followed by Louvain."""

from .graph import Graph, build_graph, connected_components, density, remove_isolates, transitivity
from .louvain import louvain, modularity, nmi
from .partition import Partition
from .rnbrw import csrnbrw_weights, retrace_probabilities, run_walks

__version__ = "0.1.0"

__all__ = [
    "Graph", "Partition", "build_graph", "connected_components", "csrnbrw_weights",
    "density", "louvain", "modularity", "nmi", "remove_isolates",
    "retrace_probabilities", "run_walks", "transitivity",
]
