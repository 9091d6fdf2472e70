"""Training loop and evaluation.

Batches are homogeneous in configuration (mixed corpora are bucketed first)
so module activation is uniform within a step.  In meta mode the optimizer
skips every attribute module whose bit is absent from all meta-targets in
the batch; skipped parameters and their Adam moments stay bit-identical.
The best-validation parameter snapshot is what train() returns.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..autograd import AdamState, Tape, adam_step, backward
from ..autograd.serial import save_tensors
from ..errors import TooFew
from ..model import (
    batch_loss,
    forward_scores,
    frozen_module_names,
    inactive_param_names,
    init_params,
)
from ..puzzles.types import Config
from .data import Item, derive_seed

__all__ = ["TrainConfig", "MetricsRecord", "train", "evaluate", "train_step", "iter_batches"]


@dataclass
class TrainConfig:
    mode: str = "plain"
    lam: float = 0.01          # margin weight
    mu: float = 0.1            # meta alignment weight
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    batch_size: int = 32
    epochs: int = 30
    seed: int = 0
    early_stop_acc: Optional[float] = None   # stop once val accuracy reaches this
    patience: Optional[int] = None           # stop after this many non-improving epochs


@dataclass
class MetricsRecord:
    accuracy: float
    per_config: Dict[str, float]
    count: int


def iter_batches(
    items: Sequence[Item], batch_size: int, rng: np.random.Generator
) -> List[List[Item]]:
    """Config-homogeneous batches in shuffled order."""
    by_config: Dict[Config, List[int]] = {}
    for i, (p, _) in enumerate(items):
        by_config.setdefault(p.config, []).append(i)
    batches: List[List[Item]] = []
    for cfg in sorted(by_config, key=lambda c: c.value):
        idx = np.array(by_config[cfg])
        rng.shuffle(idx)
        for lo in range(0, len(idx), batch_size):
            batches.append([items[i] for i in idx[lo : lo + batch_size]])
    order = rng.permutation(len(batches))
    return [batches[i] for i in order]


def train_step(
    params: Dict,
    state: AdamState,
    batch: Sequence[Item],
    cfg: TrainConfig,
) -> Tuple[float, float]:
    """One masked optimization step; returns (loss, batch accuracy)."""
    config = batch[0][0].config
    x = np.stack([r for _, r in batch])
    y = np.array([p.label for p, _ in batch])
    anns = [p.annotation for p, _ in batch] if cfg.mode == "meta" else None
    with Tape() as tape:
        total, bs = batch_loss(
            params, x, y, config, cfg.mode,
            lam=cfg.lam, mu=cfg.mu, annotations=anns,
        )
        backward(total, tape)
    acc = float((bs.s.data.argmax(axis=1) == y).mean())
    skip = set(inactive_param_names(config, cfg.mode))
    if cfg.mode == "meta":
        skip |= frozen_module_names(config, [p.meta for p, _ in batch])
    adam_step(params, state, skip=skip)
    return float(total.data), acc


def evaluate(
    params: Dict,
    items: Sequence[Item],
    mode: str = "plain",
    batch_size: int = 64,
) -> MetricsRecord:
    """Forward-only accuracy, overall and per configuration."""
    if not items:
        raise TooFew("cannot evaluate an empty dataset")
    by_config: Dict[Config, List[Item]] = {}
    for it in items:
        by_config.setdefault(it[0].config, []).append(it)
    hits: Dict[str, int] = {}
    counts: Dict[str, int] = {}
    for config in sorted(by_config, key=lambda c: c.value):
        group = by_config[config]
        h = 0
        for lo in range(0, len(group), batch_size):
            chunk = group[lo : lo + batch_size]
            x = np.stack([r for _, r in chunk])
            y = np.array([p.label for p, _ in chunk])
            anns = [p.annotation for p, _ in chunk] if mode == "meta" else None
            bs = forward_scores(params, x, config, mode, anns)
            h += int((bs.s.data.argmax(axis=1) == y).sum())
        hits[config.value] = h
        counts[config.value] = len(group)
    total = sum(counts.values())
    return MetricsRecord(
        accuracy=sum(hits.values()) / total,
        per_config={k: hits[k] / counts[k] for k in sorted(counts)},
        count=total,
    )


def train(
    cfg: TrainConfig,
    train_items: Sequence[Item],
    val_items: Sequence[Item],
    log_path: Optional[str] = None,
    checkpoint_path: Optional[str] = None,
) -> Tuple[Dict, List[Dict]]:
    """Train from scratch; returns (best-val params, per-epoch history)."""
    if not train_items:
        raise TooFew("no training items")
    params = init_params(cfg.seed)
    state = AdamState(lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2)
    history: List[Dict] = []
    best_acc = -1.0
    best_data: Optional[Dict[str, np.ndarray]] = None
    since_best = 0
    log = open(log_path, "w") if log_path else None
    try:
        for epoch in range(cfg.epochs):
            t0 = time.time()
            rng = np.random.Generator(
                np.random.PCG64(derive_seed(cfg.seed, 10_000 + epoch))
            )
            losses, accs = [], []
            for batch in iter_batches(train_items, cfg.batch_size, rng):
                lv, acc = train_step(params, state, batch, cfg)
                losses.append(lv)
                accs.append(acc)
            val = evaluate(params, val_items, cfg.mode) if val_items else None
            rec = {
                "epoch": epoch,
                "loss": float(np.mean(losses)),
                "train_acc": float(np.mean(accs)),
                "val_acc": None if val is None else val.accuracy,
                "seconds": round(time.time() - t0, 3),
            }
            history.append(rec)
            if log:
                log.write(json.dumps(rec) + "\n")
                log.flush()
            if val is not None and val.accuracy > best_acc:
                best_acc = val.accuracy
                best_data = {k: p.data.copy() for k, p in params.items()}
                since_best = 0
            else:
                since_best += 1
            if cfg.early_stop_acc is not None and val is not None and val.accuracy >= cfg.early_stop_acc:
                break
            if cfg.patience is not None and since_best > cfg.patience:
                break
    finally:
        if log:
            log.close()
    if best_data is not None:
        for k, p in params.items():
            p.data = best_data[k]
    if checkpoint_path:
        save_tensors(checkpoint_path, params)
    return params, history
