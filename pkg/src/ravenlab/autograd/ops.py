"""Differentiable operations.

Every op validates shapes eagerly (ShapeMismatch/BadAxis/BadIndex), computes
the forward value with numpy, and registers a vjp closure via make_node.
vjps receive (out_grad, needs) where needs[i] says whether parent i is
tracked; expensive gradients are skipped when nobody wants them.

Elementwise ops accept a Python scalar on either side but never broadcast
arrays implicitly; use broadcast_to to be explicit about expansion.
"""
from __future__ import annotations

import math
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import BadAxis, BadIndex, ShapeMismatch
from .tensor import Tensor, make_node

__all__ = [
    "constant",
    "add",
    "sub",
    "mul",
    "scale",
    "relu",
    "matmul",
    "conv2d",
    "conv2d_nhwc",
    "reduce_sum",
    "reduce_mean",
    "reshape",
    "transpose",
    "concat",
    "stack",
    "gather",
    "select_index",
    "broadcast_to",
    "bias_add",
    "cosine_similarity",
    "softmax_cross_entropy",
    "dropout",
    "EPS_COSINE",
]

EPS_COSINE = 1e-8

ArrayLike = Union[Tensor, np.ndarray, float, int]


def constant(x) -> Tensor:
    """Wrap a value as an untracked tensor (alias for Tensor(x))."""
    return x if isinstance(x, Tensor) else Tensor(x)


def _as_pair(a: ArrayLike, b: ArrayLike, opname: str):
    """Coerce operands of a binary elementwise op; scalars stay scalars."""
    a_t = isinstance(a, Tensor)
    b_t = isinstance(b, Tensor)
    if not a_t and not b_t:
        raise TypeError(f"{opname}: at least one Tensor operand required")
    if a_t and b_t:
        if a.shape != b.shape:
            raise ShapeMismatch(f"{opname}: {a.shape} vs {b.shape}")
        return a, b, None
    # one side is a plain number
    scalar = b if a_t else a
    if not np.isscalar(scalar):
        raise ShapeMismatch(
            f"{opname}: non-tensor operand must be a scalar, got {type(scalar)!r}"
        )
    return (a, b, float(scalar)) if a_t else (b, a, float(scalar))


def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    x, y, scalar = _as_pair(a, b, "add")
    if scalar is None:
        out = x.data + y.data
        return make_node(out, (x, y), lambda g, needs: (g, g))
    return make_node(x.data + scalar, (x,), lambda g, needs: (g,))


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    if isinstance(a, Tensor) and isinstance(b, Tensor):
        if a.shape != b.shape:
            raise ShapeMismatch(f"sub: {a.shape} vs {b.shape}")
        return make_node(a.data - b.data, (a, b), lambda g, needs: (g, -g))
    if isinstance(a, Tensor):  # a - scalar
        s = float(b)
        return make_node(a.data - s, (a,), lambda g, needs: (g,))
    s = float(a)  # scalar - b
    return make_node(s - b.data, (b,), lambda g, needs: (-g,))


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    x, y, scalar = _as_pair(a, b, "mul")
    if scalar is None:
        out = x.data * y.data

        def vjp(g, needs):
            return (
                g * y.data if needs[0] else None,
                g * x.data if needs[1] else None,
            )

        return make_node(out, (x, y), vjp)
    return make_node(x.data * scalar, (x,), lambda g, needs: (g * scalar,))


def scale(a: Tensor, k: float) -> Tensor:
    return mul(a, float(k))


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return make_node(
        np.where(mask, a.data, 0.0), (a,), lambda g, needs: (g * mask,)
    )


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeMismatch(f"matmul wants 2-D operands, got {a.shape} @ {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"matmul: inner dims differ, {a.shape} @ {b.shape}")

    def vjp(g, needs):
        return (
            g @ b.data.T if needs[0] else None,
            a.data.T @ g if needs[1] else None,
        )

    return make_node(a.data @ b.data, (a, b), vjp)


# ---------------------------------------------------------------------------
# convolution (NHWC internal layout, channel-last weights)
# ---------------------------------------------------------------------------

def _conv_geometry(h, w, kh, kw, stride, pad):
    if h + 2 * pad < kh or w + 2 * pad < kw:
        raise ShapeMismatch(
            f"conv2d: kernel {kh}x{kw} larger than padded input {h}x{w} (pad {pad})"
        )
    # floor semantics: trailing rows/cols that do not fit a window are unused
    return (h + 2 * pad - kh) // stride + 1, (w + 2 * pad - kw) // stride + 1


def _im2col(xp: np.ndarray, kh: int, kw: int, stride: int, ho: int, wo: int) -> np.ndarray:
    n, _, _, c = xp.shape
    cols = np.empty((n, ho, wo, kh * kw * c), dtype=np.float64)
    for i in range(kh):
        for j in range(kw):
            block = xp[:, i : i + stride * ho : stride, j : j + stride * wo : stride, :]
            cols[..., (i * kw + j) * c : (i * kw + j + 1) * c] = block
    return cols


def conv2d_nhwc(
    x: Tensor, w: Tensor, b: Optional[Tensor] = None, stride: int = 1, pad: int = 0
) -> Tensor:
    """x: (N,H,W,C), w: (kh,kw,C,O), optional bias (O,) -> (N,H',W',O)."""
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeMismatch(f"conv2d: x {x.shape}, w {w.shape}")
    n, h, wd, c = x.shape
    kh, kw, cin, cout = w.shape
    if cin != c:
        raise ShapeMismatch(f"conv2d: {c} input channels vs kernel {cin}")
    if b is not None and b.shape != (cout,):
        raise ShapeMismatch(f"conv2d: bias {b.shape} vs {cout} filters")
    ho, wo = _conv_geometry(h, wd, kh, kw, stride, pad)

    xp = (
        np.pad(x.data, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
        if pad
        else x.data
    )
    cols = _im2col(xp, kh, kw, stride, ho, wo)
    cols2 = cols.reshape(-1, kh * kw * c)
    w2 = w.data.reshape(kh * kw * c, cout)
    out2 = cols2 @ w2
    if b is not None:
        out2 += b.data
    out = out2.reshape(n, ho, wo, cout)
    parents = (x, w) if b is None else (x, w, b)

    def vjp(g, needs):
        g2 = g.reshape(-1, cout)
        dw = (cols2.T @ g2).reshape(kh, kw, c, cout) if needs[1] else None
        db = g2.sum(axis=0) if b is not None and needs[2] else None
        dx = None
        if needs[0]:
            dcols = (g2 @ w2.T).reshape(n, ho, wo, kh, kw, c)
            dxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    dxp[
                        :, i : i + stride * ho : stride, j : j + stride * wo : stride, :
                    ] += dcols[:, :, :, i, j, :]
            dx = dxp[:, pad : pad + h, pad : pad + wd, :] if pad else dxp
        return (dx, dw) if b is None else (dx, dw, db)

    return make_node(out, parents, vjp)


def conv2d(
    x: Tensor, w: Tensor, b: Optional[Tensor] = None, stride: int = 1, pad: int = 0
) -> Tensor:
    """Channel-first convenience: x (N,C,H,W) or (C,H,W), w (O,C,kh,kw)."""
    squeeze = x.ndim == 3
    if squeeze:
        x = reshape(x, (1,) + x.shape)
    if x.ndim != 4 or w.ndim != 4:
        raise ShapeMismatch(f"conv2d: x {x.shape}, w {w.shape}")
    xn = transpose(x, (0, 2, 3, 1))
    wn = transpose(w, (2, 3, 1, 0))
    yn = conv2d_nhwc(xn, wn, b, stride=stride, pad=pad)
    y = transpose(yn, (0, 3, 1, 2))
    if squeeze:
        y = reshape(y, y.shape[1:])
    return y


# ---------------------------------------------------------------------------
# reductions and structure
# ---------------------------------------------------------------------------

def _norm_axes(axis, ndim, opname) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    out = []
    for ax in axes:
        if not -ndim <= ax < ndim:
            raise BadAxis(f"{opname}: axis {ax} out of range for ndim {ndim}")
        out.append(ax % ndim)
    if len(set(out)) != len(out):
        raise BadAxis(f"{opname}: repeated axis in {axes}")
    return tuple(sorted(out))


def reduce_sum(a: Tensor, axis=None) -> Tensor:
    axes = _norm_axes(axis, a.ndim, "reduce_sum")
    out = a.data.sum(axis=axes if axis is not None else None)

    def vjp(g, needs):
        ge = g
        for ax in axes:
            ge = np.expand_dims(ge, ax)
        return (np.broadcast_to(ge, a.shape),)

    return make_node(np.asarray(out), (a,), vjp)


def reduce_mean(a: Tensor, axis=None) -> Tensor:
    axes = _norm_axes(axis, a.ndim, "reduce_mean")
    count = 1
    for ax in axes:
        count *= a.shape[ax]
    out = a.data.mean(axis=axes if axis is not None else None)

    def vjp(g, needs):
        ge = g / count
        for ax in axes:
            ge = np.expand_dims(ge, ax)
        return (np.broadcast_to(ge, a.shape),)

    return make_node(np.asarray(out), (a,), vjp)


def reshape(a: Tensor, shape) -> Tensor:
    shape = tuple(int(s) for s in shape)
    if math.prod(shape) != a.size:
        raise ShapeMismatch(f"reshape: {a.shape} -> {shape}")
    return make_node(
        a.data.reshape(shape), (a,), lambda g, needs: (g.reshape(a.shape),)
    )


def transpose(a: Tensor, axes) -> Tensor:
    axes = tuple(int(ax) for ax in axes)
    if sorted(axes) != list(range(a.ndim)):
        raise BadAxis(f"transpose: axes {axes} invalid for ndim {a.ndim}")
    inv = tuple(int(i) for i in np.argsort(axes))
    out = np.ascontiguousarray(a.data.transpose(axes))
    return make_node(out, (a,), lambda g, needs: (g.transpose(inv),))


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ShapeMismatch("concat: need at least one tensor")
    nd = tensors[0].ndim
    if not -nd <= axis < nd:
        raise BadAxis(f"concat: axis {axis} out of range for ndim {nd}")
    axis = axis % nd
    base = list(tensors[0].shape)
    for t in tensors[1:]:
        other = list(t.shape)
        if len(other) != nd or any(
            i != axis and other[i] != base[i] for i in range(nd)
        ):
            raise ShapeMismatch(f"concat: {tensors[0].shape} vs {t.shape}")
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]
    out = np.concatenate([t.data for t in tensors], axis=axis)

    def vjp(g, needs):
        pieces = np.split(g, splits, axis=axis)
        return tuple(pieces)

    return make_node(out, tuple(tensors), vjp)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ShapeMismatch("stack: need at least one tensor")
    shp = tensors[0].shape
    for t in tensors[1:]:
        if t.shape != shp:
            raise ShapeMismatch(f"stack: {shp} vs {t.shape}")
    nd = len(shp) + 1
    if not -nd <= axis < nd:
        raise BadAxis(f"stack: axis {axis} out of range")
    axis = axis % nd
    out = np.stack([t.data for t in tensors], axis=axis)

    def vjp(g, needs):
        moved = np.moveaxis(g, axis, 0)
        return tuple(moved[i] for i in range(len(tensors)))

    return make_node(out, tuple(tensors), vjp)


def gather(a: Tensor, indices, axis: int = 0) -> Tensor:
    if not -a.ndim <= axis < a.ndim:
        raise BadAxis(f"gather: axis {axis} out of range for ndim {a.ndim}")
    axis = axis % a.ndim
    idx = np.asarray(indices, dtype=np.int64)
    if idx.ndim != 1:
        raise BadIndex(f"gather: indices must be 1-D, got shape {idx.shape}")
    k = a.shape[axis]
    if idx.size and (idx.min() < 0 or idx.max() >= k):
        raise BadIndex(f"gather: index out of range for axis size {k}")
    out = np.take(a.data, idx, axis=axis)

    def vjp(g, needs):
        buf = np.zeros_like(a.data)
        np.add.at(np.moveaxis(buf, axis, 0), idx, np.moveaxis(g, axis, 0))
        return (buf,)

    return make_node(out, (a,), vjp)


def select_index(a: Tensor, indices) -> Tensor:
    """Per-row pick: a (B, K, ...), indices (B,) ints -> (B, ...)."""
    if a.ndim < 2:
        raise ShapeMismatch(f"select_index: need rank >= 2, got {a.shape}")
    idx = np.asarray(indices, dtype=np.int64)
    b, k = a.shape[0], a.shape[1]
    if idx.shape != (b,):
        raise BadIndex(f"select_index: indices shape {idx.shape}, expected ({b},)")
    if idx.size and (idx.min() < 0 or idx.max() >= k):
        raise BadIndex(f"select_index: index out of range for {k} choices")
    rows = np.arange(b)
    out = a.data[rows, idx]

    def vjp(g, needs):
        buf = np.zeros_like(a.data)
        buf[rows, idx] = g
        return (buf,)

    return make_node(out, (a,), vjp)


def broadcast_to(a: Tensor, shape) -> Tensor:
    shape = tuple(int(s) for s in shape)
    if len(shape) != a.ndim:
        raise ShapeMismatch(
            f"broadcast_to: rank must match ({a.shape} -> {shape}); "
            "reshape first to add axes"
        )
    expanded = []
    for ax, (have, want) in enumerate(zip(a.shape, shape)):
        if have == want:
            continue
        if have == 1:
            expanded.append(ax)
        else:
            raise ShapeMismatch(f"broadcast_to: {a.shape} -> {shape}")
    out = np.broadcast_to(a.data, shape)

    def vjp(g, needs):
        return (g.sum(axis=tuple(expanded), keepdims=True) if expanded else g,)

    return make_node(out.copy(), (a,), vjp)


def bias_add(x: Tensor, b: Tensor) -> Tensor:
    if b.ndim != 1 or x.shape[-1] != b.shape[0]:
        raise ShapeMismatch(f"bias_add: x {x.shape}, b {b.shape}")
    lead = tuple(range(x.ndim - 1))

    def vjp(g, needs):
        return (g, g.sum(axis=lead) if needs[1] else None)

    return make_node(x.data + b.data, (x, b), vjp)


# ---------------------------------------------------------------------------
# fused numerics
# ---------------------------------------------------------------------------

def cosine_similarity(a: Tensor, b: Tensor, eps: float = EPS_COSINE) -> Tensor:
    """Cosine along the last axis; norms clamped at eps so zeros stay finite."""
    if a.shape != b.shape:
        raise ShapeMismatch(f"cosine_similarity: {a.shape} vs {b.shape}")
    if a.ndim < 1:
        raise ShapeMismatch("cosine_similarity: needs at least 1 axis")
    ad, bd = a.data, b.data
    dot = np.einsum("...i,...i->...", ad, bd)
    na = np.sqrt(np.einsum("...i,...i->...", ad, ad))
    nb = np.sqrt(np.einsum("...i,...i->...", bd, bd))
    ca = np.maximum(na, eps)
    cb = np.maximum(nb, eps)
    c = dot / (ca * cb)

    def vjp(g, needs):
        inv = 1.0 / (ca * cb)
        da = db = None
        if needs[0]:
            term = bd * inv[..., None]
            corr = np.where(na > eps, c / np.maximum(ca, eps) ** 2, 0.0)
            da = (term - ad * corr[..., None]) * g[..., None]
        if needs[1]:
            term = ad * inv[..., None]
            corr = np.where(nb > eps, c / np.maximum(cb, eps) ** 2, 0.0)
            db = (term - bd * corr[..., None]) * g[..., None]
        return (da, db)

    return make_node(c, (a, b), vjp)


def softmax_cross_entropy(scores: Tensor, target) -> Tensor:
    """Stable CE.  (K,) + int -> scalar; (B,K) + (B,) ints -> (B,) losses."""
    if scores.ndim == 1:
        t = int(target)
        k = scores.shape[0]
        if not 0 <= t < k:
            raise BadIndex(f"target {t} out of range for {k} classes")
        z = scores.data - scores.data.max()
        lse = math.log(np.exp(z).sum())
        out = lse - z[t]
        p = np.exp(z - lse)

        def vjp(g, needs):
            d = p.copy()
            d[t] -= 1.0
            return (d * g,)

        return make_node(np.asarray(out), (scores,), vjp)
    if scores.ndim != 2:
        raise ShapeMismatch(f"softmax_cross_entropy: scores {scores.shape}")
    tgt = np.asarray(target, dtype=np.int64)
    b, k = scores.shape
    if tgt.shape != (b,):
        raise BadIndex(f"targets shape {tgt.shape}, expected ({b},)")
    if tgt.size and (tgt.min() < 0 or tgt.max() >= k):
        raise BadIndex(f"target out of range for {k} classes")
    z = scores.data - scores.data.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(b)
    out = lse - z[rows, tgt]
    p = np.exp(z - lse[:, None])

    def vjp(g, needs):
        d = p.copy()
        d[rows, tgt] -= 1.0
        return (d * g[:, None],)

    return make_node(out, (scores,), vjp)


def dropout(
    x: Tensor, rate: float, rng: Optional[np.random.Generator] = None,
    train: bool = False,
) -> Tensor:
    """Inverted dropout; identity unless train=True."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate {rate} outside [0, 1)")
    if not train or rate == 0.0:
        return make_node(x.data.copy(), (x,), lambda g, needs: (g,))
    if rng is None:
        raise ValueError("training-mode dropout needs an rng")
    keep = 1.0 - rate
    mask = (rng.random(x.shape) < keep) / keep
    return make_node(x.data * mask, (x,), lambda g, needs: (g * mask,))
