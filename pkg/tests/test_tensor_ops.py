"""Forward-value checks of the tensor kernels against independent oracles.

The oracles are deliberately naive: triple loops for matmul, nested loops for
conv2d, mpmath at 30+ significant digits for softmax/cross-entropy.  They
never share code with the kernels they check.
"""

import math

import mpmath
import numpy as np
import pytest

from iternet.tensor import (
    ShapeError,
    Tensor,
    Rng,
    conv2d,
    cross_entropy,
    layer_norm,
    matmul,
    softmax,
    upsample,
)

mpmath.mp.dps = 40


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------


def matmul_oracle(a, b):
    m, k = a.shape
    k2, n = b.shape
    assert k == k2
    out = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for l in range(k):
                acc += a[i, l] * b[l, j]
            out[i, j] = acc
    return out


def conv2d_oracle(x, k, stride, pad):
    ci, h, w = x.shape
    co, ci2, kh, kw = k.shape
    assert ci == ci2
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (w + 2 * pad - kw) // stride + 1
    xp = np.zeros((ci, h + 2 * pad, w + 2 * pad))
    xp[:, pad : pad + h, pad : pad + w] = x
    out = np.zeros((co, ho, wo))
    for o in range(co):
        for y in range(ho):
            for z in range(wo):
                acc = 0.0
                for c in range(ci):
                    for i in range(kh):
                        for j in range(kw):
                            acc += xp[c, y * stride + i, z * stride + j] * k[o, c, i, j]
                out[o, y, z] = acc
    return out


def softmax_oracle_row(row):
    vals = [mpmath.mpf(float(v)) for v in row]
    exps = [mpmath.e**v for v in vals]
    s = mpmath.fsum(exps)
    return np.array([float(e / s) for e in exps])


def cross_entropy_oracle(logits, targets):
    total = mpmath.mpf(0)
    for row, t in zip(logits, targets):
        vals = [mpmath.mpf(float(v)) for v in row]
        s = mpmath.fsum([mpmath.e**v for v in vals])
        total += mpmath.log(s) - vals[t]
    return float(total / len(targets))


# ---------------------------------------------------------------------------
# matmul
# ---------------------------------------------------------------------------


def test_matmul_identity():
    b = np.arange(12.0).reshape(3, 4)
    out = matmul(Tensor(np.eye(3)), Tensor(b))
    np.testing.assert_array_equal(out.data, b)


def test_matmul_zeros():
    out = matmul(Tensor(np.zeros((2, 3))), Tensor(np.ones((3, 4))))
    np.testing.assert_array_equal(out.data, np.zeros((2, 4)))


def test_matmul_against_triple_loop():
    rng = Rng(101)
    for _ in range(100):
        m, k, n = (int(rng.integers(1, 7)) for _ in range(3))
        a = rng.normal((m, k))
        b = rng.normal((k, n))
        got = matmul(Tensor(a), Tensor(b)).data
        want = matmul_oracle(a, b)
        assert np.abs(got - want).max() < 1e-12


def test_matmul_4x5_5x6_case():
    rng = Rng(7)
    a = rng.normal((4, 5))
    b = rng.normal((5, 6))
    got = matmul(Tensor(a), Tensor(b)).data
    assert np.abs(got - matmul_oracle(a, b)).max() < 1e-12


def test_matmul_shape_error_names_both_shapes():
    with pytest.raises(ShapeError) as ei:
        matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 5))))
    assert "(2, 3)" in str(ei.value) and "(4, 5)" in str(ei.value)


def test_matmul_broadcast_batch():
    rng = Rng(11)
    a = rng.normal((3, 2, 4))
    b = rng.normal((4, 5))
    got = matmul(Tensor(a), Tensor(b)).data
    for i in range(3):
        assert np.abs(got[i] - matmul_oracle(a[i], b)).max() < 1e-12


# ---------------------------------------------------------------------------
# conv2d
# ---------------------------------------------------------------------------


def test_conv2d_1x1_identity_kernel():
    rng = Rng(3)
    x = rng.normal((1, 4, 6))
    k = np.ones((1, 1, 1, 1))
    out = conv2d(Tensor(x), Tensor(k), stride=1, pad=0)
    np.testing.assert_array_equal(out.data, x)


def test_conv2d_zero_kernel():
    rng = Rng(4)
    x = rng.normal((2, 5, 5))
    k = np.zeros((3, 2, 3, 3))
    out = conv2d(Tensor(x), Tensor(k), stride=1, pad=1)
    np.testing.assert_array_equal(out.data, np.zeros((3, 5, 5)))


def test_conv2d_strided_padded_case_vs_loop():
    rng = Rng(5)
    x = rng.normal((2, 5, 5))
    k = rng.normal((3, 2, 3, 3))
    got = conv2d(Tensor(x), Tensor(k), stride=2, pad=1).data
    want = conv2d_oracle(x, k, 2, 1)
    assert got.shape == want.shape == (3, 3, 3)
    assert np.abs(got - want).max() < 1e-12


def test_conv2d_against_nested_loop_random():
    rng = Rng(6)
    for _ in range(100):
        ci = int(rng.integers(1, 4))
        co = int(rng.integers(1, 4))
        h = int(rng.integers(3, 8))
        w = int(rng.integers(3, 8))
        kh = int(rng.integers(0, 2)) * 2 + 1
        kw = int(rng.integers(0, 2)) * 2 + 1
        stride = int(rng.integers(1, 3))
        pad = int(rng.integers(0, 2))
        if (h + 2 * pad - kh) < 0 or (w + 2 * pad - kw) < 0:
            continue
        x = rng.normal((ci, h, w))
        k = rng.normal((co, ci, kh, kw))
        got = conv2d(Tensor(x), Tensor(k), stride=stride, pad=pad).data
        want = conv2d_oracle(x, k, stride, pad)
        assert np.abs(got - want).max() < 1e-12


def test_conv2d_batched_matches_per_sample():
    rng = Rng(8)
    x = rng.normal((4, 2, 6, 6))
    k = rng.normal((3, 2, 3, 3))
    got = conv2d(Tensor(x), Tensor(k), stride=1, pad=1).data
    for i in range(4):
        single = conv2d(Tensor(x[i]), Tensor(k), stride=1, pad=1).data
        np.testing.assert_array_equal(got[i], single)


def test_conv2d_empty_output_is_shape_error():
    with pytest.raises(ShapeError):
        conv2d(Tensor(np.zeros((1, 2, 2))), Tensor(np.zeros((1, 1, 5, 5))), 1, 0)


def test_conv2d_even_kernel_rejected():
    with pytest.raises(ValueError):
        conv2d(Tensor(np.zeros((1, 4, 4))), Tensor(np.zeros((1, 1, 2, 2))), 1, 0)


# ---------------------------------------------------------------------------
# softmax
# ---------------------------------------------------------------------------


def test_softmax_uniform():
    out = softmax(Tensor([0.0, 0.0, 0.0, 0.0]), axis=-1)
    np.testing.assert_allclose(out.data, [0.25] * 4, rtol=0, atol=0)


def test_softmax_shift_invariance():
    rng = Rng(9)
    x = rng.normal((5, 7))
    a = softmax(Tensor(x), axis=-1).data
    b = softmax(Tensor(x + 13.75), axis=-1).data
    assert np.abs(a - b).max() < 1e-12


def test_softmax_123_vs_extended_precision():
    got = softmax(Tensor([1.0, 2.0, 3.0]), axis=-1).data
    want = softmax_oracle_row([1.0, 2.0, 3.0])
    assert np.abs(got - want).max() < 1e-15


def test_softmax_rows_sum_to_one_and_positive():
    rng = Rng(10)
    for _ in range(50):
        x = rng.normal((4, 9), std=5.0)
        s = softmax(Tensor(x), axis=-1).data
        assert np.abs(s.sum(-1) - 1.0).max() < 1e-12
        assert (s > 0).all()


def test_softmax_vs_extended_precision_random():
    rng = Rng(12)
    for _ in range(100):
        x = rng.normal((6,), std=3.0)
        got = softmax(Tensor(x), axis=-1).data
        want = softmax_oracle_row(x)
        assert np.abs(got - want).max() < 1e-14


def test_softmax_exclude_zeroes_entries():
    x = Tensor([[1.0, 2.0, 3.0]])
    excl = np.array([[False, True, False]])
    s = softmax(x, axis=-1, exclude=excl).data
    assert s[0, 1] == 0.0
    assert abs(s.sum() - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# layer_norm
# ---------------------------------------------------------------------------


def test_layer_norm_constant_row_degenerate_variance():
    x = Tensor(np.full((8,), 3.3))
    out = layer_norm(x, Tensor(np.ones(8)), Tensor(np.zeros(8)), eps=1e-5)
    assert np.abs(out.data).max() <= math.sqrt(1e-5)


def test_layer_norm_already_normalized_row():
    out = layer_norm(
        Tensor([1.0, -1.0]), Tensor(np.ones(2)), Tensor(np.zeros(2)), eps=1e-12
    )
    np.testing.assert_allclose(out.data, [1.0, -1.0], atol=1e-6)


def test_layer_norm_vs_direct_formula():
    rng = Rng(13)
    for _ in range(100):
        x = rng.normal((3, 8), std=2.0)
        gamma = rng.normal((8,))
        beta = rng.normal((8,))
        eps = 1e-5
        got = layer_norm(Tensor(x), Tensor(gamma), Tensor(beta), eps).data
        mu = x.mean(-1, keepdims=True)
        var = x.var(-1, keepdims=True)
        want = (x - mu) / np.sqrt(var + eps) * gamma + beta
        assert np.abs(got - want).max() < 1e-10


def test_layer_norm_shape_mismatch():
    with pytest.raises(ShapeError):
        layer_norm(Tensor(np.zeros((2, 4))), Tensor(np.ones(3)), Tensor(np.zeros(3)))


# ---------------------------------------------------------------------------
# upsample
# ---------------------------------------------------------------------------


def test_upsample_factor_one_is_identity():
    x = Rng(14).normal((2, 3, 4))
    out = upsample(Tensor(x), 1)
    np.testing.assert_array_equal(out.data, x)


def test_upsample_replicates_cells():
    x = Tensor(np.array([[[1.0, 2.0], [3.0, 4.0]]]))
    out = upsample(x, 2).data[0]
    want = np.array(
        [[1, 1, 2, 2], [1, 1, 2, 2], [3, 3, 4, 4], [3, 3, 4, 4]], dtype=float
    )
    np.testing.assert_array_equal(out, want)


def test_upsample_gradient_sums_replicas():
    x = Tensor(np.array([[[1.0, 2.0], [3.0, 4.0]]]), requires_grad=True)
    upsample(x, 2).sum().backward()
    np.testing.assert_array_equal(x.grad, np.full((1, 2, 2), 4.0))


def test_upsample_bad_factor():
    with pytest.raises(ValueError):
        upsample(Tensor(np.zeros((1, 2, 2))), 0)


# ---------------------------------------------------------------------------
# cross_entropy
# ---------------------------------------------------------------------------


def test_cross_entropy_uniform_logits_is_log_d():
    logits = Tensor(np.zeros((5, 37)))
    loss = cross_entropy(logits, np.zeros(5, dtype=int))
    assert abs(loss.item() - math.log(37.0)) < 1e-12
    assert abs(loss.item() - 3.610918) < 1e-6


def test_cross_entropy_saturated_target():
    logits = np.zeros((3, 10))
    t = np.array([4, 1, 7])
    for i, ti in enumerate(t):
        logits[i, ti] = 30.0
    loss = cross_entropy(Tensor(logits), t)
    assert loss.item() < 1e-9


def test_cross_entropy_vs_extended_precision():
    rng = Rng(15)
    for _ in range(100):
        logits = rng.normal((4, 10), std=3.0)
        t = np.array([int(rng.integers(0, 10)) for _ in range(4)])
        got = cross_entropy(Tensor(logits), t).item()
        want = cross_entropy_oracle(logits, t)
        assert abs(got - want) < 1e-10


def test_cross_entropy_out_of_range_target():
    with pytest.raises(ValueError):
        cross_entropy(Tensor(np.zeros((2, 5))), np.array([1, 5]))


def test_cross_entropy_mask_excludes_positions():
    rng = Rng(16)
    logits = rng.normal((4, 6))
    t = np.array([0, 1, 2, 3])
    mask = np.array([True, True, False, False])
    got = cross_entropy(Tensor(logits), t, mask).item()
    want = cross_entropy_oracle(logits[:2], t[:2])
    assert abs(got - want) < 1e-10
