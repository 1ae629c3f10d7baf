"""Causal joint graphs from motion data: PC skeleton search, KL-divergence
edge orientation, normalised causal representations and a small graph
convolutional classifier to compare causal and anatomical adjacency."""

from .model import (
    Cpdag,
    Dataset,
    DiscreteDataset,
    Representation,
    SkeletonSpec,
    WeightedCausalDag,
    WeightedEdge,
    skeletal22,
    validate_dag,
)
from .pipeline import PipelineConfig, bootstrap_stability, run_pipeline

__version__ = "0.1.0"

__all__ = [
    "Cpdag",
    "Dataset",
    "DiscreteDataset",
    "PipelineConfig",
    "Representation",
    "SkeletonSpec",
    "WeightedCausalDag",
    "WeightedEdge",
    "bootstrap_stability",
    "run_pipeline",
    "skeletal22",
    "validate_dag",
]
