"""Early-exit message passing networks with centrality-bucket exit policies."""

from .graph import AdjacencyKind, Graph, NormAdjacency, build_graph, normalize, spmm
from .model import Flavor, ModelParams, extract_standard_gnn, forward
from .train import TrainConfig, train, train_alm, train_st

__all__ = [
    "AdjacencyKind",
    "Graph",
    "NormAdjacency",
    "build_graph",
    "normalize",
    "spmm",
    "Flavor",
    "ModelParams",
    "extract_standard_gnn",
    "forward",
    "TrainConfig",
    "train",
    "train_alm",
    "train_st",
]

__version__ = "0.1.0"
