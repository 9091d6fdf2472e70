"""Canned generalization experiments.

Three shapes of question:

    in_config        train and test on the same configuration(s)
    config_transfer  train on one set, test on another
    rule_holdout     train on instances *without* a rule family,
                     test on instances *with* it

Each runner returns flat row dicts ready for report emission, one row per
(experiment, configuration) plus a summary row where sensible.
"""
from __future__ import annotations

from dataclasses import asdict
from typing import Dict, List, Optional, Sequence

from ..puzzles.types import Config, RuleFamily
from .data import build_corpus, derive_seed, filter_by_family
from .train import TrainConfig, evaluate, train

__all__ = ["run_in_config", "run_transfer", "run_holdout"]

# fixed offsets so the three corpora of one experiment never share seeds
_TRAIN_NS, _VAL_NS, _TEST_NS = 1, 2, 3


def _corpus_seeds(master: int):
    return (
        derive_seed(master, _TRAIN_NS),
        derive_seed(master, _VAL_NS),
        derive_seed(master, _TEST_NS),
    )


def _base_row(experiment: str, tc: TrainConfig) -> Dict:
    return {
        "experiment": experiment,
        "mode": tc.mode,
        "seed": tc.seed,
        "lam": tc.lam,
        "mu": tc.mu,
    }


def run_in_config(
    configs: Sequence[Config],
    tc: TrainConfig,
    n_train: int = 2000,
    n_val: int = 500,
    n_test: int = 500,
    data_seed: int = 0,
    image_size: int = 40,
    log_path: Optional[str] = None,
    checkpoint_path: Optional[str] = None,
) -> List[Dict]:
    s_train, s_val, s_test = _corpus_seeds(data_seed)
    train_items = build_corpus(configs, n_train, s_train, image_size)
    val_items = build_corpus(configs, n_val, s_val, image_size)
    test_items = build_corpus(configs, n_test, s_test, image_size)
    params, history = train(tc, train_items, val_items, log_path, checkpoint_path)
    rec = evaluate(params, test_items, tc.mode)
    rows = [
        dict(
            _base_row("in_config", tc),
            configuration=name,
            accuracy=acc,
            n=rec.count // max(len(rec.per_config), 1),
        )
        for name, acc in rec.per_config.items()
    ]
    rows.append(
        dict(
            _base_row("in_config", tc),
            configuration="mean",
            accuracy=rec.accuracy,
            n=rec.count,
        )
    )
    return rows


def run_transfer(
    train_configs: Sequence[Config],
    test_configs: Sequence[Config],
    tc: TrainConfig,
    n_train: int = 2000,
    n_val: int = 500,
    n_test: int = 500,
    data_seed: int = 0,
    image_size: int = 40,
    log_path: Optional[str] = None,
    checkpoint_path: Optional[str] = None,
) -> List[Dict]:
    s_train, s_val, s_test = _corpus_seeds(data_seed)
    train_items = build_corpus(train_configs, n_train, s_train, image_size)
    val_items = build_corpus(train_configs, n_val, s_val, image_size)
    params, history = train(tc, train_items, val_items, log_path, checkpoint_path)
    rows = []
    src = "+".join(c.value for c in train_configs)
    for cfg in test_configs:
        test_items = build_corpus([cfg], n_test, s_test, image_size)
        rec = evaluate(params, test_items, tc.mode)
        rows.append(
            dict(
                _base_row("config_transfer", tc),
                train_on=src,
                configuration=cfg.value,
                accuracy=rec.accuracy,
                n=rec.count,
            )
        )
    return rows


def run_holdout(
    family: RuleFamily,
    configs: Sequence[Config],
    tc: TrainConfig,
    n_train: int = 2000,
    n_val: int = 500,
    n_test: int = 500,
    data_seed: int = 0,
    image_size: int = 40,
    oversample: int = 4,
    log_path: Optional[str] = None,
    checkpoint_path: Optional[str] = None,
) -> List[Dict]:
    """Train without a rule family, test only on instances using it."""
    s_train, s_val, s_test = _corpus_seeds(data_seed)
    pool_train = build_corpus(configs, n_train * oversample, s_train, image_size)
    pool_val = build_corpus(configs, max(n_val, n_val * oversample // 2), s_val, image_size)
    pool_test = build_corpus(configs, n_test * oversample, s_test, image_size)
    train_items = filter_by_family(pool_train, family, keep=False)[:n_train]
    val_items = filter_by_family(pool_val, family, keep=False)[:n_val]
    test_items = filter_by_family(pool_test, family, keep=True)[:n_test]
    params, history = train(tc, train_items, val_items, log_path, checkpoint_path)
    rec = evaluate(params, test_items, tc.mode)
    rows = [
        dict(
            _base_row("rule_holdout", tc),
            holdout=family.label,
            configuration="+".join(c.value for c in configs),
            accuracy=rec.accuracy,
            n=rec.count,
        )
    ]
    return rows
