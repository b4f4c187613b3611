"""Backward-pass behavior: analytic trivia, accumulation semantics, and
finite-difference checks on every differentiable op."""

import numpy as np
import pytest

from iternet.tensor import (
    Parameter,
    Rng,
    Tensor,
    concat,
    conv2d,
    cross_entropy,
    grad_check,
    layer_norm,
    matmul,
    nll_from_probs,
    no_grad,
    sigmoid,
    softmax,
    standardize,
    upsample,
)


def test_backward_of_sum_is_ones():
    p = Parameter(Rng(0).normal((3, 4)))
    p.sum().backward()
    np.testing.assert_array_equal(p.grad, np.ones((3, 4)))


def test_backward_of_sum_of_squares():
    p = Parameter(np.array([3.0]))
    (p * p).sum().backward()
    np.testing.assert_allclose(p.grad, [6.0])


def test_backward_requires_scalar_root():
    p = Parameter(np.ones((2, 2)))
    with pytest.raises(ValueError):
        (p * 2.0).backward()


def test_backward_accumulates_until_zeroed():
    p = Parameter(np.array([2.0]))
    loss = (p * p).sum()
    loss.backward()
    loss.backward()
    np.testing.assert_allclose(p.grad, [8.0])
    p.zero_grad()
    np.testing.assert_allclose(p.grad, [0.0])


def test_shared_parameter_used_twice_sums_contributions():
    p = Parameter(np.array([[1.0, 2.0]]))
    ((p * p) + p).sum().backward()
    np.testing.assert_allclose(p.grad, [[3.0, 5.0]])


def test_no_grad_blocks_recording():
    p = Parameter(np.array([1.0]))
    with no_grad():
        out = (p * 3.0).sum()
    assert out._parents == () and not out.requires_grad


def test_grad_check_quadratic():
    p = Parameter(np.array([3.0]))
    err = grad_check(lambda: (p * p).sum(), [p], eps=1e-4)
    assert err < 1e-7


def test_grad_check_linear_is_exact():
    p = Parameter(Rng(1).normal((4,)))
    w = Rng(2).normal((4,))
    err = grad_check(lambda: (p * Tensor(w)).sum(), [p], eps=1e-4)
    assert err < 1e-10


def test_grad_check_eps_range_enforced():
    p = Parameter(np.array([1.0]))
    with pytest.raises(ValueError):
        grad_check(lambda: (p * p).sum(), [p], eps=1e-2)


def _check(f, params, tol=1e-4, eps=1e-5):
    err = grad_check(f, params, eps=eps)
    assert err < tol, f"max relative error {err}"


def test_grads_elementwise_ops():
    rng = Rng(20)
    a = Parameter(rng.normal((3, 4)))
    b = Parameter(rng.normal((3, 4)))
    _check(lambda: ((a * b) + (a - b)).sum(), [a, b])
    _check(lambda: (a / (b * b + 3.0)).sum(), [a, b])
    _check(lambda: (-a).sum(), [a])
    _check(lambda: (a**3.0).sum(), [a])


def test_grads_broadcasting():
    rng = Rng(21)
    a = Parameter(rng.normal((2, 3, 4)))
    b = Parameter(rng.normal((4,)))
    c = Parameter(rng.normal((3, 1)))
    _check(lambda: ((a + b) * c).sum(), [a, b, c])


def test_grads_unary_ops():
    rng = Rng(22)
    a = Parameter(rng.normal((5, 3)) + 0.05)
    _check(lambda: a.relu().sum(), [a])
    _check(lambda: sigmoid(a).sum(), [a])
    p = Parameter(np.abs(rng.normal((4, 2))) + 0.5)
    _check(lambda: p.log().sum(), [p])


def test_grads_reshape_transpose_concat():
    rng = Rng(23)
    a = Parameter(rng.normal((2, 6)))
    b = Parameter(rng.normal((3, 4)))
    _check(lambda: (a.reshape(3, 4) * b).sum(), [a, b])
    _check(lambda: (a.reshape(2, 3, 2).transpose(2, 0, 1)).sum(), [a])
    _check(lambda: (concat([a, a * 2.0], axis=1) ** 2.0).sum(), [a])


def test_grads_reductions():
    rng = Rng(24)
    a = Parameter(rng.normal((3, 4, 2)))
    _check(lambda: (a.mean(axis=1) ** 2.0).sum(), [a])
    _check(lambda: (a.sum(axis=(0, 2)) ** 2.0).sum(), [a])
    _check(lambda: (a.mean(axis=0, keepdims=True) * a).sum(), [a])


def test_grads_matmul():
    rng = Rng(25)
    a = Parameter(rng.normal((4, 5)))
    b = Parameter(rng.normal((5, 6)))
    w = Tensor(rng.normal((4, 6)))
    _check(lambda: (matmul(a, b) * w).sum(), [a, b])


def test_grads_matmul_broadcast():
    rng = Rng(26)
    a = Parameter(rng.normal((3, 2, 4)))
    b = Parameter(rng.normal((4, 5)))
    q = Parameter(rng.normal((2, 4)))
    _check(lambda: (matmul(a, b) ** 2.0).sum(), [a, b])
    _check(lambda: (matmul(q, a.transpose(0, 2, 1)) ** 2.0).sum(), [a, q])


def test_grads_softmax():
    rng = Rng(27)
    a = Parameter(rng.normal((3, 6)))
    w = Tensor(rng.normal((3, 6)))
    _check(lambda: (softmax(a, axis=-1) * w).sum(), [a])


def test_grads_softmax_excluded():
    rng = Rng(28)
    a = Parameter(rng.normal((4, 4)))
    excl = np.eye(4, dtype=bool)
    w = Tensor(rng.normal((4, 4)))
    _check(lambda: (softmax(a, axis=-1, exclude=excl) * w).sum(), [a])


def test_grads_standardize_and_layer_norm():
    rng = Rng(29)
    a = Parameter(rng.normal((4, 6)))
    gamma = Parameter(rng.normal((6,)))
    beta = Parameter(rng.normal((6,)))
    _check(lambda: (standardize(a, 1e-5) ** 2.0).sum(), [a])
    _check(lambda: (layer_norm(a, gamma, beta, 1e-5) ** 2.0).sum(), [a, gamma, beta])


def test_grads_conv2d():
    rng = Rng(30)
    x = Parameter(rng.normal((2, 5, 6)))
    k = Parameter(rng.normal((3, 2, 3, 3)))
    w = Tensor(rng.normal((3, 3, 3)))
    _check(lambda: (conv2d(x, k, stride=2, pad=1) * w).sum(), [x, k])


def test_grads_conv2d_batched():
    rng = Rng(31)
    x = Parameter(rng.normal((2, 2, 4, 4)))
    k = Parameter(rng.normal((2, 2, 3, 3)))
    _check(lambda: (conv2d(x, k, stride=1, pad=1) ** 2.0).sum(), [x, k])


def test_grads_upsample():
    rng = Rng(32)
    x = Parameter(rng.normal((2, 3, 4)))
    w = Tensor(rng.normal((2, 6, 8)))
    _check(lambda: (upsample(x, 2) * w).sum(), [x])


def test_grads_cross_entropy():
    rng = Rng(33)
    logits = Parameter(rng.normal((5, 7)))
    t = np.array([0, 2, 4, 6, 1])
    mask = np.array([True, True, True, False, True])
    _check(lambda: cross_entropy(logits, t, mask), [logits])


def test_grads_nll_from_probs():
    rng = Rng(34)
    raw = Parameter(rng.normal((4, 5)))
    t = np.array([1, 0, 3, 2])
    _check(lambda: nll_from_probs(softmax(raw, axis=-1), t), [raw])


def test_grads_composite_conv_softmax_ce():
    rng = Rng(35)
    x = Tensor(rng.normal((1, 6, 8)))
    k = Parameter(rng.normal((4, 1, 3, 3), std=0.5))
    t = np.array([1, 3])
    sel = np.zeros((2, 12))  # picks two spatial positions as sequence steps
    sel[0, 0] = 1.0
    sel[1, 7] = 1.0

    def f():
        fm = conv2d(x, k, stride=2, pad=1)  # [4, 3, 4]
        rows = matmul(Tensor(sel), fm.reshape(4, 12).transpose(1, 0))
        return cross_entropy(rows, t)

    _check(f, [k])
