"""Adam with bias correction and a shared step counter.

Two behaviors matter for module freezing:

* params named in ``skip`` are untouched: no moment update, no step;
* params whose gradient is exactly all-zero are likewise untouched, so
  "zero gradient in, identical parameter out" holds bit-for-bit even
  mid-run (moment decay would otherwise keep nudging them).

Any other tracked parameter with a missing gradient raises MissingGrad:
a silently skipped encoder is a bug, not a feature.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Tuple

import numpy as np

from ..errors import MissingGrad
from .tensor import Tensor

__all__ = ["AdamState", "adam_step"]


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(
    params: Dict[str, Tensor],
    state: AdamState,
    skip: Iterable[str] = (),
) -> Tuple[str, ...]:
    """One update over all params; returns names actually updated."""
    skip = frozenset(skip)
    unknown = skip - params.keys()
    if unknown:
        raise KeyError(f"skip names not in params: {sorted(unknown)}")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    updated = []
    for name, p in params.items():
        if name in skip:
            p.grad = None
            continue
        g = p.grad
        if g is None:
            raise MissingGrad(f"parameter {name!r} has no gradient")
        if not g.any():
            p.grad = None
            continue
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p.data -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        p.grad = None
        updated.append(name)
    return tuple(updated)
