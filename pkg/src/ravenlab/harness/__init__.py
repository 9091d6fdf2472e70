"""Training, evaluation, experiments, reports."""
from .data import (
    Item,
    annotation_contains,
    build_corpus,
    derive_seed,
    filter_by_family,
    split_dataset,
)
from .train import MetricsRecord, TrainConfig, evaluate, iter_batches, train, train_step
from .experiments import run_holdout, run_in_config, run_transfer
from .report import FORMATS, emit_report, load_report

__all__ = [
    "Item", "annotation_contains", "build_corpus", "derive_seed",
    "filter_by_family", "split_dataset",
    "MetricsRecord", "TrainConfig", "evaluate", "iter_batches", "train",
    "train_step",
    "run_holdout", "run_in_config", "run_transfer",
    "FORMATS", "emit_report", "load_report",
]
