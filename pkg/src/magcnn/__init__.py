"""Motif-matching graph normalization with subgraph-level attention CNNs."""

__version__ = "0.1.0"

from .datasets import FeatureScheme, GraphDataset, assign_node_features, load_tu_dataset
from .graph import Graph, closeness_centrality, shortest_path_lengths, weighted_degree
from .grid import NormalizationParams, normalize_graph
from .models import MAGCNN, MGCNN, ModelConfig, build_model

__all__ = [
    "FeatureScheme", "Graph", "GraphDataset", "MAGCNN", "MGCNN", "ModelConfig",
    "NormalizationParams", "assign_node_features", "build_model", "closeness_centrality",
    "load_tu_dataset", "normalize_graph", "shortest_path_lengths", "weighted_degree",
]
