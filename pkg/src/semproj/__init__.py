"""Semantic projection of word vectors onto antonym-defined feature scales."""

__version__ = "0.1.0"

from .config import RunConfig
from .dataset import Dataset, load_dataset, select_pairs
from .embeddings import (
    EmbeddingStore,
    load_cache,
    load_embeddings,
    lookup,
    open_store,
    resolve_item,
    save_cache,
)
from .estimators import RaterReliability, SemanticProjector
from .evaluation import EvalReport, evaluate_experiment, outlier_sweep
from .projection import ProjectionResult, distance_control, pca_viz, project, zscore
from .ratings import RatingsTable, load_ratings, reliability
from .stats import (
    adjust_upper_bound,
    compare_schemes,
    fdr_by,
    pairwise_oc,
    pearson_r,
    permutation_test,
)
from .subspace import (
    FeaturePoles,
    FeatureSubspace,
    alignment_diagnostics,
    build_subspace,
    single_end_direction,
)

__all__ = [
    "Dataset", "EmbeddingStore", "EvalReport", "FeaturePoles", "FeatureSubspace",
    "ProjectionResult", "RaterReliability", "RatingsTable", "RunConfig", "SemanticProjector",
    "adjust_upper_bound", "alignment_diagnostics", "build_subspace", "compare_schemes",
    "distance_control", "evaluate_experiment", "fdr_by", "load_cache", "load_dataset",
    "load_embeddings", "load_ratings", "lookup", "open_store", "outlier_sweep", "pairwise_oc",
    "pca_viz", "pearson_r", "permutation_test", "project", "reliability", "resolve_item",
    "save_cache", "select_pairs", "single_end_direction", "zscore",
]
