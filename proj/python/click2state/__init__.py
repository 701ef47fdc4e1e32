"""Python access to the Click2State C++ core."""

from ._core import (
    FEATURE_DIM,
    DataError,
    Model,
    NumericError,
    analyze,
    auc,
    bce,
    bootstrap_auc_diff,
    dataset_summary,
    evaluate,
    generate_jsonl,
    init_model,
    kld,
    lda,
    synth,
    train,
)

__all__ = [
    "FEATURE_DIM",
    "DataError",
    "Model",
    "NumericError",
    "analyze",
    "auc",
    "bce",
    "bootstrap_auc_diff",
    "dataset_summary",
    "evaluate",
    "generate_jsonl",
    "init_model",
    "kld",
    "lda",
    "synth",
    "train",
]
