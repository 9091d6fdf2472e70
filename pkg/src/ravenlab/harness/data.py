"""Corpus construction and split/filter utilities.

An item is a (Puzzle, rasters) pair with rasters the (16,H,W) uint8 stack.
Corpora are fully determined by (configs, n_per_config, master_seed,
image_size): instance seeds are derived from the master with a splitmix64
mix, so corpora with different masters are effectively disjoint.
"""
from __future__ import annotations

from typing import Iterable, List, Sequence, Tuple

import numpy as np

from ..errors import EmptyAfterFilter, TooFew
from ..puzzles.generator import generate_puzzle
from ..puzzles.types import Config, Puzzle, RuleFamily
from ..render import render_puzzle

__all__ = [
    "Item",
    "derive_seed",
    "build_corpus",
    "split_dataset",
    "annotation_contains",
    "filter_by_family",
]

Item = Tuple[Puzzle, np.ndarray]

_MASK64 = (1 << 64) - 1


def derive_seed(master: int, index: int) -> int:
    """splitmix64 of master + index*golden-gamma; decorrelates seed streams."""
    z = (master + 0x9E3779B97F4A7C15 * (index + 1)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def build_corpus(
    configs: Sequence[Config],
    n_per_config: int,
    master_seed: int,
    image_size: int = 40,
) -> List[Item]:
    """n_per_config rendered instances of each configuration, interleaved."""
    items: List[Item] = []
    counter = 0
    for i in range(n_per_config):
        for cfg in configs:
            seed = derive_seed(master_seed, counter)
            counter += 1
            p = generate_puzzle(cfg, seed)
            items.append((p, render_puzzle(p, image_size)))
    return items


def split_dataset(
    items: Sequence[Item], seed: int
) -> Tuple[List[Item], List[Item], List[Item]]:
    """Shuffled 60/20/20 split (floor/floor/rest)."""
    n = len(items)
    if n < 5:
        raise TooFew(f"need at least 5 items to split, got {n}")
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(n)
    n_train = int(0.6 * n)
    n_val = int(0.2 * n)
    train = [items[i] for i in order[:n_train]]
    val = [items[i] for i in order[n_train : n_train + n_val]]
    test = [items[i] for i in order[n_train + n_val :]]
    return train, val, test


def annotation_contains(puzzle: Puzzle, family: RuleFamily) -> bool:
    return any(s.rule.family is family for s in puzzle.annotation.rules)


def filter_by_family(
    items: Sequence[Item], family: RuleFamily, keep: bool
) -> List[Item]:
    """Items whose annotation does (keep=True) / does not use the family."""
    out = [it for it in items if annotation_contains(it[0], family) == keep]
    if not out:
        raise EmptyAfterFilter(
            f"no instances with {family.label} {'present' if keep else 'absent'}"
        )
    return out
