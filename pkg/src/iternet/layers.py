"""Reusable building blocks: affine layers, norms, attention, sinusoids."""

from __future__ import annotations

import math

import numpy as np

from .tensor import (
    Module,
    Parameter,
    Rng,
    Tensor,
    conv2d,
    layer_norm,
    matmul,
    softmax,
    standardize,
)


def sinusoid_table(n: int, dim: int) -> np.ndarray:
    """Sinusoidal position table: even columns sin, odd columns cos.

    Entry [p, 2i] = sin(p / 10000^(2i/dim)), entry [p, 2i+1] the matching cos.
    """
    if dim % 2 != 0:
        raise ValueError(f"sinusoid table needs an even dim, got {dim}")
    pos = np.arange(n, dtype=np.float64)[:, None]
    even = np.arange(0, dim, 2, dtype=np.float64)
    angles = pos / np.power(10000.0, even / dim)
    table = np.empty((n, dim))
    table[:, 0::2] = np.sin(angles)
    table[:, 1::2] = np.cos(angles)
    return table


def sinusoid_grid(grid_h: int, grid_w: int, dim: int) -> np.ndarray:
    """2-d positional table over a grid, flattened row-major to [h*w, dim].

    The first half of the channels encodes the row index, the second half the
    column index, each with the 1-d sinusoid table.
    """
    if dim % 4 != 0:
        raise ValueError(f"2-d sinusoid table needs dim divisible by 4, got {dim}")
    half = dim // 2
    rows = sinusoid_table(grid_h, half)
    cols = sinusoid_table(grid_w, half)
    out = np.empty((grid_h * grid_w, dim))
    out[:, :half] = np.repeat(rows, grid_w, axis=0)
    out[:, half:] = np.tile(cols, (grid_h, 1))
    return out


class Linear(Module):
    def __init__(self, d_in: int, d_out: int, rng: Rng, bias: bool = True):
        self.w = Parameter(rng.normal((d_in, d_out), std=math.sqrt(1.0 / d_in)), "w")
        self.b = Parameter(np.zeros(d_out), "b") if bias else None

    def forward(self, x):
        out = matmul(x, self.w)
        if self.b is not None:
            out = out + self.b
        return out


class Conv(Module):
    """3x3/1x1 convolution layer with bias, He-scaled init."""

    def __init__(self, c_in: int, c_out: int, k: int, stride: int, pad: int, rng: Rng):
        std = math.sqrt(2.0 / (c_in * k * k))
        self.w = Parameter(rng.normal((c_out, c_in, k, k), std=std), "w")
        self.b = Parameter(np.zeros(c_out), "b")
        self.stride = stride
        self.pad = pad

    def forward(self, x):
        out = conv2d(x, self.w, stride=self.stride, pad=self.pad)
        return out + self.b.reshape(-1, 1, 1)


class ChannelNorm(Module):
    """Normalize each channel's spatial map, then apply a per-channel affine."""

    def __init__(self, channels: int, eps: float = 1e-5):
        self.gamma = Parameter(np.ones(channels), "gamma")
        self.beta = Parameter(np.zeros(channels), "beta")
        self.eps = eps

    def forward(self, x):
        c, h, w = x.shape[-3], x.shape[-2], x.shape[-1]
        lead = x.shape[:-3]
        flat = x.reshape(*lead, c, h * w)
        normed = standardize(flat, self.eps).reshape(*lead, c, h, w)
        return normed * self.gamma.reshape(-1, 1, 1) + self.beta.reshape(-1, 1, 1)


class LayerNorm(Module):
    def __init__(self, dim: int, eps: float = 1e-5):
        self.gamma = Parameter(np.ones(dim), "gamma")
        self.beta = Parameter(np.zeros(dim), "beta")
        self.eps = eps

    def forward(self, x):
        return layer_norm(x, self.gamma, self.beta, self.eps)


class MultiHeadAttention(Module):
    """Scaled dot-product attention over [.., T, C] sequences.

    ``exclude`` is a boolean [T_q, T_kv] array of forbidden attention edges;
    excluded keys get exactly zero weight.
    """

    def __init__(self, dim: int, n_heads: int, rng: Rng):
        if dim % n_heads != 0:
            raise ValueError(f"dim {dim} not divisible by n_heads {n_heads}")
        self.n_heads = n_heads
        self.head_dim = dim // n_heads
        self.wq = Linear(dim, dim, rng.derive("q"))
        self.wk = Linear(dim, dim, rng.derive("k"))
        self.wv = Linear(dim, dim, rng.derive("v"))
        self.wo = Linear(dim, dim, rng.derive("o"))

    def _split(self, x):
        t, c = x.shape[-2], x.shape[-1]
        lead = x.shape[:-2]
        x = x.reshape(*lead, t, self.n_heads, self.head_dim)
        axes = tuple(range(len(lead))) + (
            len(lead) + 1,
            len(lead),
            len(lead) + 2,
        )
        return x.transpose(*axes)  # [.., heads, T, head_dim]

    def _merge(self, x):
        lead = x.shape[:-3]
        h, t, d = x.shape[-3], x.shape[-2], x.shape[-1]
        axes = tuple(range(len(lead))) + (len(lead) + 1, len(lead), len(lead) + 2)
        return x.transpose(*axes).reshape(*lead, t, h * d)

    def forward(self, q_in, kv_in, exclude=None):
        q = self._split(self.wq(q_in))
        k = self._split(self.wk(kv_in))
        v = self._split(self.wv(kv_in))
        kt = k.transpose(*range(k.ndim - 2), k.ndim - 1, k.ndim - 2)
        scores = matmul(q, kt) * (1.0 / math.sqrt(self.head_dim))
        attn = softmax(scores, axis=-1, exclude=exclude)
        out = self._merge(matmul(attn, v))
        return self.wo(out)


class FeedForward(Module):
    def __init__(self, dim: int, hidden: int, rng: Rng):
        self.lin1 = Linear(dim, hidden, rng.derive("ff1"))
        self.lin2 = Linear(hidden, dim, rng.derive("ff2"))

    def forward(self, x):
        return self.lin2(self.lin1(x).relu())


class TransformerUnit(Module):
    """Pre-norm self-attention block: attention then feed-forward, residual."""

    def __init__(self, dim: int, n_heads: int, rng: Rng, ffn_mult: int = 4):
        self.ln1 = LayerNorm(dim)
        self.attn = MultiHeadAttention(dim, n_heads, rng.derive("attn"))
        self.ln2 = LayerNorm(dim)
        self.ffn = FeedForward(dim, ffn_mult * dim, rng.derive("ffn"))

    def forward(self, x):
        n = self.ln1(x)
        x = x + self.attn(n, n)
        return x + self.ffn(self.ln2(x))
