"""Reverse-mode engine: per-op finite differences, exact identities,
optimizer bookkeeping, and tensor file round trips."""
import math
import struct

import numpy as np
import pytest

from ravenlab.autograd import (
    AdamState,
    MAGIC,
    Tape,
    Tensor,
    adam_step,
    add,
    backward,
    bias_add,
    broadcast_to,
    concat,
    conv2d,
    conv2d_nhwc,
    cosine_similarity,
    dropout,
    gather,
    gradient_check,
    load_tensors,
    matmul,
    mul,
    reduce_mean,
    reduce_sum,
    relu,
    reshape,
    save_tensors,
    scale,
    select_index,
    softmax_cross_entropy,
    stack,
    sub,
    transpose,
    zero_grads,
)
from ravenlab.errors import (
    BadAxis,
    BadIndex,
    FormatError,
    MissingGrad,
    NotScalar,
    ShapeMismatch,
)

TOL = 1e-6


def t(rng, *shape):
    return Tensor(rng.standard_normal(shape), requires_grad=True)


# ------------------------------------------------------------- op gradients

def test_elementwise_gradients():
    rng = np.random.default_rng(0)
    a, b = t(rng, 4, 3), t(rng, 4, 3)
    assert gradient_check(lambda x, y: reduce_sum(mul(add(x, y), sub(x, y))), [a, b]) < TOL
    assert gradient_check(lambda x: reduce_sum(scale(x, -2.5)), [a]) < TOL
    assert gradient_check(lambda x: reduce_sum(relu(x)), [t(rng, 5, 5)]) < TOL


def test_matmul_gradient():
    rng = np.random.default_rng(1)
    assert gradient_check(
        lambda x, y: reduce_sum(matmul(x, y)), [t(rng, 3, 4), t(rng, 4, 2)]
    ) < TOL


def test_conv_gradients_nhwc_and_chw():
    rng = np.random.default_rng(2)
    x, w, b = t(rng, 2, 5, 5, 2), t(rng, 3, 3, 2, 3), t(rng, 3)
    for stride, pad in ((1, 0), (1, 1), (2, 1)):
        assert gradient_check(
            lambda x, w, b: reduce_sum(conv2d_nhwc(x, w, b, stride=stride, pad=pad)),
            [x, w, b],
        ) < TOL
    xc, wc = t(rng, 2, 2, 5, 5), t(rng, 3, 2, 3, 3)
    assert gradient_check(
        lambda x, w, b: reduce_sum(conv2d(x, w, b, stride=2, pad=1)), [xc, wc, b]
    ) < TOL


def test_conv_without_bias():
    rng = np.random.default_rng(3)
    x, w = t(rng, 1, 4, 4, 1), t(rng, 3, 3, 1, 2)
    assert gradient_check(
        lambda x, w: reduce_sum(conv2d_nhwc(x, w, stride=1, pad=1)), [x, w]
    ) < TOL


def test_reduction_gradients():
    rng = np.random.default_rng(4)
    a = t(rng, 3, 4, 5)
    assert gradient_check(lambda x: reduce_sum(x), [a]) < TOL
    assert gradient_check(lambda x: reduce_sum(reduce_mean(x, axis=(1, 2))), [a]) < TOL
    assert gradient_check(
        lambda x: reduce_sum(mul(reduce_sum(x, axis=0), reduce_sum(x, axis=0))), [a]
    ) < TOL


def test_shape_op_gradients():
    rng = np.random.default_rng(5)
    a = t(rng, 2, 6)
    assert gradient_check(
        lambda x: reduce_sum(mul(reshape(x, (3, 4)), reshape(x, (3, 4)))), [a]
    ) < TOL
    assert gradient_check(
        lambda x: reduce_sum(mul(transpose(x, (1, 0)), transpose(x, (1, 0)))), [a]
    ) < TOL
    b = t(rng, 2, 3)
    assert gradient_check(
        lambda x, y: reduce_sum(mul(concat([x, y], axis=0), concat([y, x], axis=0))),
        [b, t(rng, 2, 3)],
    ) < TOL
    assert gradient_check(
        lambda x, y: reduce_sum(mul(stack([x, y], axis=1), stack([y, x], axis=1))),
        [b, t(rng, 2, 3)],
    ) < TOL


def test_gather_gradient_accumulates_duplicates():
    rng = np.random.default_rng(6)
    a = t(rng, 4, 3)
    idx = np.array([0, 0, 2, 0])
    assert gradient_check(
        lambda x: reduce_sum(mul(gather(x, idx, axis=0), gather(x, idx, axis=0))), [a]
    ) < TOL
    x = Tensor(np.ones(3), requires_grad=True)
    with Tape() as tape:
        out = reduce_sum(gather(x, np.array([0, 0]), axis=0))
        backward(out, tape)
    np.testing.assert_array_equal(x.grad, [2.0, 0.0, 0.0])


def test_select_index_gradient():
    rng = np.random.default_rng(7)
    a = t(rng, 3, 8)
    idx = np.array([1, 6, 0])
    assert gradient_check(
        lambda x: reduce_sum(mul(select_index(x, idx), select_index(x, idx))), [a]
    ) < TOL


def test_broadcast_and_bias_gradients():
    rng = np.random.default_rng(8)
    a, b = t(rng, 1, 4), t(rng, 4)
    assert gradient_check(
        lambda x: reduce_sum(mul(broadcast_to(x, (5, 4)), broadcast_to(x, (5, 4)))), [a]
    ) < TOL
    assert gradient_check(
        lambda x, y: reduce_sum(mul(bias_add(x, y), bias_add(x, y))),
        [t(rng, 5, 4), b],
    ) < TOL


def test_cosine_gradient():
    rng = np.random.default_rng(9)
    assert gradient_check(
        lambda x, y: reduce_sum(cosine_similarity(x, y)), [t(rng, 4, 6), t(rng, 4, 6)]
    ) < TOL


def test_softmax_ce_gradients():
    rng = np.random.default_rng(10)
    assert gradient_check(
        lambda s: softmax_cross_entropy(s, 2), [t(rng, 8)]
    ) < TOL
    assert gradient_check(
        lambda s: reduce_mean(softmax_cross_entropy(s, np.array([1, 0, 3]))),
        [t(rng, 3, 4)],
    ) < TOL


def test_dropout_is_identity_outside_training():
    rng = np.random.default_rng(11)
    a = t(rng, 4, 4)
    out = dropout(a, 0.5, train=False)
    np.testing.assert_array_equal(out.data, a.data)


# ------------------------------------------------------------- exact values

def test_cosine_of_swapped_pair():
    # (3,4).(4,3) = 24, |.|^2 = 25 -> exactly 0.96
    a = Tensor(np.array([3.0, 4.0]))
    b = Tensor(np.array([4.0, 3.0]))
    c = cosine_similarity(reshape(a, (1, 2)), reshape(b, (1, 2)))
    assert abs(float(c.data[0]) - 0.96) < 1e-12


def test_uniform_cross_entropy_is_log8():
    loss = softmax_cross_entropy(Tensor(np.zeros(8)), 3)
    assert abs(float(loss.data) - math.log(8.0)) < 1e-9


def test_relu_clips_negatives():
    out = relu(Tensor(np.array([-2.0, 0.0, 1.5])))
    np.testing.assert_array_equal(out.data, [0.0, 0.0, 1.5])


# ------------------------------------------------------------- error paths

def test_shape_mismatch_rejected():
    with pytest.raises(ShapeMismatch):
        add(Tensor(np.zeros((2, 3))), Tensor(np.zeros((3, 2))))
    with pytest.raises(ShapeMismatch):
        matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3, 4))))


def test_bad_axis_and_index():
    with pytest.raises(BadAxis):
        reduce_sum(Tensor(np.zeros((2, 3))), axis=5)
    with pytest.raises(BadIndex):
        gather(Tensor(np.zeros((3, 2))), np.array([0, 3]), axis=0)


def test_backward_requires_scalar():
    x = Tensor(np.zeros(3), requires_grad=True)
    with Tape() as tape:
        y = mul(x, x)
        with pytest.raises(NotScalar):
            backward(y, tape)


def test_no_recording_outside_tape():
    x = Tensor(np.ones(3), requires_grad=True)
    y = reduce_sum(mul(x, x))
    assert y.parents == ()


def test_zero_grads():
    x = Tensor(np.ones(3), requires_grad=True)
    with Tape() as tape:
        backward(reduce_sum(mul(x, x)), tape)
    assert x.grad is not None
    zero_grads([x])
    assert x.grad is None


# ------------------------------------------------- checker probing options

def test_sampled_coordinate_check_is_deterministic():
    rng = np.random.default_rng(3)
    a = t(rng, 40, 40)
    f = lambda x: reduce_sum(mul(x, x))
    e1 = gradient_check(f, [a], sample=5, rng=np.random.default_rng(11))
    e2 = gradient_check(f, [a], sample=5, rng=np.random.default_rng(11))
    assert e1 == e2 < TOL


def test_fallback_step_resolves_kink_bracketing():
    # the kink of relu(x - (1 - 2e-6)) sits 2e-6 from the probe point, so the
    # default step brackets it and the central difference reads 0.6 against a
    # true slope of 1; the tiny fallback step clears it
    x = Tensor(np.array([1.0]), requires_grad=True)
    f = lambda v: reduce_sum(relu(sub(v, 1.0 - 2e-6)))
    assert gradient_check(f, [x]) > 0.3
    assert gradient_check(f, [x], fallback_h=1e-8) < 1e-6


def test_fallback_step_does_not_mask_wrong_gradients():
    from ravenlab.autograd.tensor import make_node

    def doubled_grad(v):
        return make_node(v.data.copy(), (v,), lambda g, needs: (2.0 * g,))

    x = Tensor(np.array([0.7]), requires_grad=True)
    f = lambda v: reduce_sum(doubled_grad(v))
    assert gradient_check(f, [x]) > 0.4
    assert gradient_check(f, [x], fallback_h=1e-8) > 0.4


# ------------------------------------------------------------- optimizer

def test_adam_first_step_matches_closed_form():
    # after one step: m/(1-b1) = g, v/(1-b2) = g^2, so the update is exactly
    # lr * g / (|g| + eps), elementwise
    g = np.array([1.0, -2.0, 0.5])
    p = Tensor(np.zeros(3), requires_grad=True, name="p")
    p.grad = g.copy()
    state = AdamState(lr=1e-3)
    updated = adam_step({"p": p}, state)
    assert updated == ("p",)
    expect = -1e-3 * g / (np.abs(g) + 1e-8)
    np.testing.assert_allclose(p.data, expect, rtol=0, atol=1e-15)
    assert state.step == 1


def test_adam_skip_leaves_param_and_moments_untouched():
    p = Tensor(np.full(3, 7.0), requires_grad=True, name="p")
    q = Tensor(np.full(3, 9.0), requires_grad=True, name="q")
    p.grad = np.ones(3)
    before = q.data.tobytes()
    state = AdamState()
    updated = adam_step({"p": p, "q": q}, state, skip=("q",))
    assert updated == ("p",)
    assert q.data.tobytes() == before
    assert "q" not in state.m and "q" not in state.v


def test_adam_zero_gradient_is_identity():
    p = Tensor(np.full(3, 7.0), requires_grad=True, name="p")
    p.grad = np.zeros(3)
    before = p.data.tobytes()
    state = AdamState()
    adam_step({"p": p}, state)
    assert p.data.tobytes() == before
    assert "p" not in state.m


def test_adam_missing_grad_raises():
    p = Tensor(np.zeros(3), requires_grad=True, name="p")
    with pytest.raises(MissingGrad):
        adam_step({"p": p}, AdamState())


def test_adam_unknown_skip_name_raises():
    p = Tensor(np.zeros(3), requires_grad=True, name="p")
    p.grad = np.ones(3)
    with pytest.raises(KeyError):
        adam_step({"p": p}, AdamState(), skip=("typo",))


def test_adam_two_steps_decrease_simple_quadratic():
    p = Tensor(np.array([5.0]), requires_grad=True, name="p")
    state = AdamState(lr=0.1)
    for _ in range(50):
        with Tape() as tape:
            loss = reduce_sum(mul(p, p))
            backward(loss, tape)
        adam_step({"p": p}, state)
        zero_grads([p])
    assert abs(float(p.data[0])) < 5.0


# ------------------------------------------------------------- serialization

def test_tensor_file_roundtrip(tmp_path):
    rng = np.random.default_rng(12)
    tensors = {
        "a.w": rng.standard_normal((3, 4)),
        "b": rng.standard_normal(7),
        "scalarish": np.array(2.5),
    }
    path = str(tmp_path / "t.mmn")
    save_tensors(path, tensors)
    loaded = load_tensors(path)
    assert list(loaded) == list(tensors)
    for k in tensors:
        np.testing.assert_array_equal(loaded[k], tensors[k])
    save_tensors(str(tmp_path / "t2.mmn"), loaded)
    assert (tmp_path / "t.mmn").read_bytes() == (tmp_path / "t2.mmn").read_bytes()


def test_tensor_file_bad_magic(tmp_path):
    path = str(tmp_path / "bad.mmn")
    with open(path, "wb") as fh:
        fh.write(b"NOPE" + struct.pack("<I", 0))
    with pytest.raises(FormatError):
        load_tensors(path)


def test_tensor_file_truncation(tmp_path):
    path = str(tmp_path / "t.mmn")
    save_tensors(path, {"x": np.arange(5.0)})
    blob = open(path, "rb").read()
    open(path, "wb").write(blob[:-3])
    with pytest.raises(FormatError):
        load_tensors(path)


def test_tensor_file_trailing_garbage(tmp_path):
    path = str(tmp_path / "t.mmn")
    save_tensors(path, {"x": np.arange(5.0)})
    with open(path, "ab") as fh:
        fh.write(b"junk")
    with pytest.raises(FormatError):
        load_tensors(path)
