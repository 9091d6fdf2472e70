"""Reverse-mode engine core: Tensor values and the recording Tape.

Design choices, in brief:

* float64 everywhere; values are plain numpy arrays.
* A Tape is an explicit context manager.  Ops record themselves only while
  a tape is active, so running the same code outside a tape is "eval mode"
  with zero graph overhead.
* backward() replays the tape in reverse execution order.  There is no
  topological sort because the tape *is* a topological order.
* No implicit broadcasting: elementwise ops demand equal shapes (or a
  Python scalar); explicit expansion goes through ops.broadcast_to.
* Each node stores a vjp callback taking (out_grad, needs) where needs
  flags which parents want a gradient, letting expensive pieces (conv
  input gradients for leaf images) be skipped.
"""
from __future__ import annotations

from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import NotScalar

__all__ = ["Tensor", "Tape", "backward", "active_tape"]

_ACTIVE: Optional["Tape"] = None


def active_tape() -> Optional["Tape"]:
    return _ACTIVE


class Tape:
    """Ordered record of tensors created while the tape was active."""

    __slots__ = ("nodes",)

    def __init__(self):
        self.nodes: List[Tensor] = []

    def __enter__(self) -> "Tape":
        global _ACTIVE
        if _ACTIVE is not None:
            raise RuntimeError("a tape is already active; tapes do not nest")
        _ACTIVE = self
        return self

    def __exit__(self, *exc):
        global _ACTIVE
        _ACTIVE = None
        return False

    def record(self, t: "Tensor") -> None:
        self.nodes.append(t)


class Tensor:
    """A float64 array plus the bookkeeping reverse mode needs."""

    __slots__ = ("data", "grad", "requires_grad", "parents", "vjp", "name")

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = bool(requires_grad)
        self.parents: Tuple[Tensor, ...] = ()
        self.vjp: Optional[Callable] = None
        self.name = name

    # --- introspection -------------------------------------------------
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.data.shape}{tag})"

    # Does anything upstream of this tensor want gradients?
    def tracked(self) -> bool:
        return self.requires_grad or bool(self.parents)

    # --- small conveniences (ops live in ops.py) -----------------------
    def sum(self, axis=None):
        from .ops import reduce_sum

        return reduce_sum(self, axis=axis)

    def mean(self, axis=None):
        from .ops import reduce_mean

        return reduce_mean(self, axis=axis)

    def __add__(self, other):
        from .ops import add

        return add(self, other)

    def __sub__(self, other):
        from .ops import sub

        return sub(self, other)

    def __mul__(self, other):
        from .ops import mul

        return mul(self, other)


def make_node(
    data: np.ndarray,
    parents: Sequence[Tensor],
    vjp: Callable,
) -> Tensor:
    """Wrap an op result; record on the active tape when one is listening."""
    out = Tensor(data)
    tape = _ACTIVE
    if tape is not None and any(p.tracked() for p in parents):
        out.parents = tuple(parents)
        out.vjp = vjp
        tape.record(out)
    return out


def backward(root: Tensor, tape: Optional[Tape] = None) -> None:
    """Accumulate gradients of a scalar root into every tracked tensor."""
    if root.size != 1:
        raise NotScalar(f"backward needs a scalar, got shape {root.shape}")
    tape = tape if tape is not None else _ACTIVE
    if tape is None:
        raise RuntimeError("backward() needs an active (or explicit) tape")
    nodes = tape.nodes
    try:
        stop = len(nodes) - 1 - nodes[::-1].index(root)
    except ValueError:
        raise RuntimeError("root tensor was not recorded on this tape") from None
    root.grad = np.ones_like(root.data)
    for node in reversed(nodes[: stop + 1]):
        if node.grad is None or node.vjp is None:
            continue
        needs = tuple(p.tracked() for p in node.parents)
        grads = node.vjp(node.grad, needs)
        for parent, g, wanted in zip(node.parents, grads, needs):
            if g is None or not wanted:
                continue
            if parent.grad is None:
                parent.grad = g.copy() if g.base is not None or g is node.grad else g
            else:
                parent.grad = parent.grad + g


def zero_grads(tensors) -> None:
    vals = tensors.values() if hasattr(tensors, "values") else tensors
    for t in vals:
        t.grad = None
