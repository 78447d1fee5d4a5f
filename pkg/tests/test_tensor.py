import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptdyn.numerics import (
    GraphError,
    ShapeError,
    Tensor,
    backward,
    concat,
    conv1d,
    dropout,
    grad_enabled,
    matmul,
    mean,
    no_grad,
    relu,
    sum_sq,
    tanh,
    topo_order,
)
from oracles import finite_diff_grad, rel_err


def _param(rng, shape):
    return Tensor(rng.standard_normal(shape), requires_grad=True)


def test_add_mul_grads_match_finite_differences():
    rng = np.random.default_rng(0)
    a = _param(rng, (3, 4))
    b = _param(rng, (3, 4))
    loss = mean((a + b) * a)
    backward(loss)

    def f_a(x):
        return float(((x + b.data) * x).mean())

    def f_b(x):
        return float(((a.data + x) * a.data).mean())

    assert rel_err(a.grad, finite_diff_grad(f_a, a.data.copy())) < 1e-4
    assert rel_err(b.grad, finite_diff_grad(f_b, b.data.copy())) < 1e-4


def test_matmul_grad_matches_finite_differences():
    rng = np.random.default_rng(1)
    W = _param(rng, (5, 3))
    x = _param(rng, (4, 5))
    loss = sum_sq(matmul(x, W))
    backward(loss)

    def f_w(w):
        return float(np.sum((x.data @ w) ** 2))

    def f_x(v):
        return float(np.sum((v @ W.data) ** 2))

    assert rel_err(W.grad, finite_diff_grad(f_w, W.data.copy())) < 1e-4
    assert rel_err(x.grad, finite_diff_grad(f_x, x.data.copy())) < 1e-4


def test_vector_matmul_grads():
    rng = np.random.default_rng(2)
    v = _param(rng, (4,))
    M = _param(rng, (4, 3))
    loss = sum_sq(matmul(v, M))
    backward(loss)

    def f_v(x):
        return float(np.sum((x @ M.data) ** 2))

    assert rel_err(v.grad, finite_diff_grad(f_v, v.data.copy())) < 1e-4


def test_tanh_relu_chain_grad():
    rng = np.random.default_rng(3)
    x = _param(rng, (6,))
    # keep relu inputs away from the kink so the FD oracle is valid
    x.data = x.data + np.sign(x.data) * 0.2
    loss = mean(relu(tanh(x) + 0.5))
    backward(loss)

    def f(v):
        return float(np.maximum(np.tanh(v) + 0.5, 0.0).mean())

    assert rel_err(x.grad, finite_diff_grad(f, x.data.copy())) < 1e-4


def test_concat_and_slice_route_gradients():
    rng = np.random.default_rng(4)
    a = _param(rng, (2, 3))
    b = _param(rng, (2, 2))
    joined = concat([a, b], axis=1)
    loss = sum_sq(joined[:, 1:4])
    backward(loss)

    def f_a(x):
        j = np.concatenate([x, b.data], axis=1)
        return float(np.sum(j[:, 1:4] ** 2))

    def f_b(x):
        j = np.concatenate([a.data, x], axis=1)
        return float(np.sum(j[:, 1:4] ** 2))

    assert rel_err(a.grad, finite_diff_grad(f_a, a.data.copy())) < 1e-4
    assert rel_err(b.grad, finite_diff_grad(f_b, b.data.copy())) < 1e-4


def test_broadcast_add_reduces_gradient():
    rng = np.random.default_rng(5)
    x = _param(rng, (4, 3))
    bias = _param(rng, (3,))
    loss = sum_sq(x + bias)
    backward(loss)
    assert bias.grad.shape == (3,)

    def f(bv):
        return float(np.sum((x.data + bv) ** 2))

    assert rel_err(bias.grad, finite_diff_grad(f, bias.data.copy())) < 1e-4


def test_conv1d_matches_finite_differences():
    rng = np.random.default_rng(6)
    x = _param(rng, (2, 3, 9))
    w = _param(rng, (4, 3, 5))
    b = _param(rng, (4,))
    loss = mean(conv1d(x, w, b))
    backward(loss)

    def run(xv, wv, bv):
        windows = np.lib.stride_tricks.sliding_window_view(xv, 5, axis=2)
        out = np.einsum("bclk,fck->bfl", windows, wv) + bv[None, :, None]
        return float(out.mean())

    assert rel_err(x.grad, finite_diff_grad(lambda v: run(v, w.data, b.data), x.data.copy())) < 1e-4
    assert rel_err(w.grad, finite_diff_grad(lambda v: run(x.data, v, b.data), w.data.copy())) < 1e-4
    assert rel_err(b.grad, finite_diff_grad(lambda v: run(x.data, w.data, v), b.data.copy())) < 1e-4


def test_dropout_identity_when_eval_and_scales_when_training():
    rng = np.random.default_rng(7)
    x = _param(rng, (2000,))
    out_eval = dropout(x, 0.4, np.random.default_rng(0), training=False)
    assert out_eval is x
    out_train = dropout(x, 0.4, np.random.default_rng(0), training=True)
    kept = out_train.data != 0.0
    # inverted scaling keeps the expected activation level
    assert abs(kept.mean() - 0.6) < 0.05
    np.testing.assert_allclose(out_train.data[kept], x.data[kept] / 0.6)


def test_shared_subexpression_accumulates_once_per_path():
    x = Tensor(np.array([2.0]), requires_grad=True)
    y = x * x  # two paths into x
    loss = mean(y)
    backward(loss)
    np.testing.assert_allclose(x.grad, [4.0])


def test_backward_twice_raises():
    x = Tensor(np.ones(3), requires_grad=True)
    loss = sum_sq(tanh(x))
    backward(loss)
    with pytest.raises(GraphError):
        backward(loss)


def test_reusing_consumed_intermediate_raises():
    x = Tensor(np.ones(3), requires_grad=True)
    hidden = tanh(x)
    backward(mean(hidden))
    with pytest.raises(GraphError):
        backward(mean(hidden * 2.0))


def test_backward_rejects_nonscalar_loss():
    x = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(GraphError):
        backward(x + 1.0)


def test_matmul_shape_mismatch_raises():
    a = Tensor(np.ones((2, 3)))
    b = Tensor(np.ones((4, 2)))
    with pytest.raises(ShapeError):
        matmul(a, b)


def test_elementwise_shape_mismatch_raises():
    with pytest.raises(ShapeError):
        Tensor(np.ones((2, 3))) + Tensor(np.ones((2, 4)))


def test_no_grad_blocks_recording():
    x = Tensor(np.ones(3), requires_grad=True)
    with no_grad():
        assert not grad_enabled()
        out = sum_sq(tanh(x) * 2.0)
    assert out._backward is None
    assert grad_enabled()


def test_topo_order_parents_before_children():
    x = Tensor(np.ones(2), requires_grad=True)
    y = tanh(x)
    z = y * y
    loss = mean(z)
    order = topo_order(loss)
    pos = {id(t): i for i, t in enumerate(order)}
    assert pos[id(x)] < pos[id(y)] < pos[id(z)] < pos[id(loss)]


def test_graph_is_deterministic_for_identical_seeds():
    def build_and_grad(seed):
        rng = np.random.default_rng(seed)
        w = Tensor(rng.standard_normal((4, 4)), requires_grad=True)
        x = Tensor(rng.standard_normal((8, 4)))
        backward(mean(relu(matmul(x, w))))
        return w.grad.copy()

    np.testing.assert_array_equal(build_and_grad(42), build_and_grad(42))


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=6), st.integers(min_value=1, max_value=6),
       st.integers(min_value=0, max_value=2**31 - 1))
def test_mlp_like_composite_grad_property(rows, hidden, seed):
    rng = np.random.default_rng(seed)
    x = Tensor(rng.standard_normal((rows, 3)))
    w1 = _param(rng, (3, hidden))
    b1 = _param(rng, (hidden,))
    w2 = _param(rng, (hidden, 2))
    h_pre = matmul(x, w1) + b1
    # rejection keeps relu inputs off the kink so FD stays a valid oracle
    if np.min(np.abs(h_pre.data)) < 1e-3:
        return
    loss = sum_sq(matmul(relu(h_pre), w2))
    backward(loss)

    def f(flat):
        w1v = flat[: w1.data.size].reshape(w1.shape)
        b1v = flat[w1.data.size : w1.data.size + b1.data.size]
        w2v = flat[w1.data.size + b1.data.size :].reshape(w2.shape)
        h = np.maximum(x.data @ w1v + b1v, 0.0)
        return float(np.sum((h @ w2v) ** 2))

    flat = np.concatenate([w1.data.ravel(), b1.data.ravel(), w2.data.ravel()])
    got = np.concatenate([w1.grad.ravel(), b1.grad.ravel(), w2.grad.ravel()])
    assert rel_err(got, finite_diff_grad(f, flat)) < 1e-4
