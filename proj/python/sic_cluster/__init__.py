"""Python interface to the semantic-enhanced image clustering engine."""

from ._sic import (
    ConfigError,
    DataError,
    SicError,
    bound_constants,
    bound_gap,
    convergence_slope,
    evaluate,
    filter_nouns,
    kmeans,
    knn,
    predict,
    read_embeddings,
    run_cli,
    synth,
    train,
    write_embeddings,
)

__all__ = [
    "ConfigError",
    "DataError",
    "SicError",
    "bound_constants",
    "bound_gap",
    "convergence_slope",
    "evaluate",
    "filter_nouns",
    "kmeans",
    "knn",
    "predict",
    "read_embeddings",
    "run_cli",
    "synth",
    "train",
    "write_embeddings",
]
