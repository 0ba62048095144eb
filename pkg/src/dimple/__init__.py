"""Clustering and subspace estimation for signed diverse multiplex networks."""
from .kmeans import KMeansConfig, kmeans_cluster
from .layers import cluster_algorithm1, cluster_algorithm3, cluster_layers, empirical_gram, layer_projections
from .linalg import Spectrum, center_double, eigengap_rank, gram_entry, top_k_eigvecs
from .metrics import (
    SubspaceErrorReport,
    align_rotation,
    misclustering_rate,
    sin_theta,
    subspace_report,
    two_inf_distance,
    within_layer_error,
)
from .model import GeneratorConfig, GroundTruth, LatentConfig, LayerPartition, generate
from .subspace import (
    aggregate_group,
    concat_baseline,
    debias_square,
    estimate_group_subspaces,
    estimate_subspace,
    node_communities,
)

__version__ = "0.1.0"
