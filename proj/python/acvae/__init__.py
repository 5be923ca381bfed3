"""Adaptive correlated variational auto-encoders for graph-structured data."""

from ._acvae import (
    ConsistencyError,
    InputError,
    Model,
    TrainingError,
    benchmark,
    generate_synthetic,
    load,
    ncrr,
    oracle_suites,
    run_oracle,
    split_edges,
    tfidf,
    train,
    uniform_mas_weights,
)

MODES = ("vae", "cvae_ind", "cvae_corr", "acvae_saddle", "acvae_eb")

__all__ = [
    "MODES",
    "ConsistencyError",
    "InputError",
    "Model",
    "TrainingError",
    "benchmark",
    "generate_synthetic",
    "load",
    "ncrr",
    "oracle_suites",
    "run_oracle",
    "split_edges",
    "tfidf",
    "train",
    "uniform_mas_weights",
]
