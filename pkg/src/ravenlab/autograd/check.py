"""Finite-difference gradient checking.

gradient_check perturbs input elements with central differences and
compares against the reverse-mode gradient, returning the worst relative
error  |g - fd| / max(|g|, |fd|, 1e-8).  By default every element of every
input is probed; for large inputs pass ``sample`` to probe that many
randomly chosen coordinates per input instead.  The function under test
must map its tensor inputs to a scalar tensor and must not cache state
between calls.

Graphs containing relu are piecewise linear: a finite step occasionally
brackets a kink, making the central difference wrong even though the
gradient is right.  Passing ``fallback_h`` re-probes any coordinate whose
error reaches ``fallback_tol`` with that (much smaller) step and keeps the
better estimate; a bracketing artifact collapses with the step while a
genuinely wrong gradient keeps failing at every step size.
"""
from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .tensor import Tape, Tensor, backward, zero_grads

__all__ = ["gradient_check"]


def gradient_check(
    f: Callable[..., Tensor],
    inputs: Sequence[Tensor],
    h: float = 1e-5,
    sample: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    fallback_h: Optional[float] = None,
    fallback_tol: float = 1e-3,
) -> float:
    """Worst-case relative error between reverse mode and central differences."""
    zero_grads(inputs)
    with Tape() as tape:
        out = f(*inputs)
        backward(out, tape)
    grads = [
        np.zeros_like(t.data) if t.grad is None else np.array(t.grad)
        for t in inputs
    ]
    if sample is not None and rng is None:
        rng = np.random.default_rng(0)
    worst = 0.0
    for t, g in zip(inputs, grads):
        flat = t.data.reshape(-1)
        gflat = g.reshape(-1)
        if sample is None or flat.size <= sample:
            coords = range(flat.size)
        else:
            coords = rng.choice(flat.size, size=sample, replace=False)

        def probe(i: int, step: float) -> float:
            orig = flat[i]
            flat[i] = orig + step
            fp = float(f(*inputs).data)
            flat[i] = orig - step
            fm = float(f(*inputs).data)
            flat[i] = orig
            fd = (fp - fm) / (2.0 * step)
            return abs(gflat[i] - fd) / max(abs(gflat[i]), abs(fd), 1e-8)

        for i in coords:
            err = probe(i, h)
            if fallback_h is not None and err >= fallback_tol:
                err = min(err, probe(i, fallback_h))
            worst = max(worst, err)
    zero_grads(inputs)
    return worst
