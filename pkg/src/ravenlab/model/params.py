"""Parameter initialization and naming for the modular network.

One flat dict name -> Tensor, insertion order fixed, so checkpoints are
reproducible byte-for-byte.  Shapes:

    enc{1,3,6}.c1.w   (3, 3, C_in, 16)   conv stride 2, pad 1
    enc{1,3,6}.c2.w   (3, 3, 16, 32)     conv stride 2, pad 1
    enc{1,3,6}.fc.w   (32, D)            after global mean pool
    rel.g1.w          (2D, 128)          pair MLP
    rel.g2.w          (128, D)
    rel.f.w           (D, D)             post-sum linear
    mod{slot}.{attr}.w1  (D, 64)         per-attribute head
    mod{slot}.{attr}.w2  (64, DT)
    rule_table        (4, DT)            orthonormal rows, one per family

plus matching ".b" biases (zeros).  D = 64 feature width, DT = 32
attribute-vector width.
"""
from __future__ import annotations

from typing import Dict, Tuple

import numpy as np

from ..autograd import Tensor
from ..puzzles.types import Attribute

__all__ = [
    "D_FEAT",
    "D_ATTR",
    "ENC_CHANNELS",
    "init_params",
    "module_param_names",
    "orthonormal_rows",
]

D_FEAT = 64
D_ATTR = 32
ENC_CHANNELS = {"enc1": 1, "enc3": 3, "enc6": 6}
_REL_HIDDEN = 128
_MOD_HIDDEN = 64


def orthonormal_rows(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    """Gram-Schmidt on Gaussian rows; n <= d."""
    if n > d:
        raise ValueError(f"cannot fit {n} orthonormal rows in dimension {d}")
    out = np.zeros((n, d))
    for i in range(n):
        while True:
            v = rng.standard_normal(d)
            for j in range(i):
                v -= (v @ out[j]) * out[j]
            norm = np.linalg.norm(v)
            if norm > 1e-6:
                out[i] = v / norm
                break
    return out


def _he_uniform(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


def module_param_names(slot: int, attr: Attribute) -> Tuple[str, ...]:
    base = f"mod{slot}.{attr.label}"
    return (f"{base}.w1", f"{base}.b1", f"{base}.w2", f"{base}.b2")


def init_params(seed: int, d: int = D_FEAT, dt: int = D_ATTR) -> Dict[str, Tensor]:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 0x70617261))))
    p: Dict[str, np.ndarray] = {}

    for enc, cin in ENC_CHANNELS.items():
        p[f"{enc}.c1.w"] = _he_uniform(rng, (3, 3, cin, 16), 9 * cin)
        p[f"{enc}.c1.b"] = np.zeros(16)
        p[f"{enc}.c2.w"] = _he_uniform(rng, (3, 3, 16, 32), 9 * 16)
        p[f"{enc}.c2.b"] = np.zeros(32)
        p[f"{enc}.fc.w"] = _he_uniform(rng, (32, d), 32)
        p[f"{enc}.fc.b"] = np.zeros(d)

    p["rel.g1.w"] = _he_uniform(rng, (2 * d, _REL_HIDDEN), 2 * d)
    p["rel.g1.b"] = np.zeros(_REL_HIDDEN)
    p["rel.g2.w"] = _he_uniform(rng, (_REL_HIDDEN, d), _REL_HIDDEN)
    p["rel.g2.b"] = np.zeros(d)
    p["rel.f.w"] = _he_uniform(rng, (d, d), d)
    p["rel.f.b"] = np.zeros(d)

    for slot in range(2):
        for attr in Attribute:
            w1, b1, w2, b2 = module_param_names(slot, attr)
            p[w1] = _he_uniform(rng, (d, _MOD_HIDDEN), d)
            p[b1] = np.zeros(_MOD_HIDDEN)
            p[w2] = _he_uniform(rng, (_MOD_HIDDEN, dt), _MOD_HIDDEN)
            p[b2] = np.zeros(dt)

    p["rule_table"] = orthonormal_rows(rng, 4, dt)

    return {name: Tensor(arr, requires_grad=True, name=name) for name, arr in p.items()}
