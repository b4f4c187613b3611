"""Iterative language module: a weight-shared character-sequence refiner.

Each pass embeds the incoming character distributions (probability-weighted
embedding, so the whole path stays differentiable), runs a small stack of
cross-attention blocks whose queries are fixed positional encodings, and emits
fresh per-position distributions.  A sigmoid gate fuses each refinement with
the original vision prediction; iteration ``j`` feeds on fusion ``j-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .layers import FeedForward, LayerNorm, Linear, MultiHeadAttention, sinusoid_table
from .tensor import Module, Parameter, Rng, ShapeError, Tensor, concat, matmul, sigmoid, softmax


@dataclass
class LMConfig:
    max_len: int  # T
    n_classes: int  # D
    model_dim: int  # C
    n_blocks: int = 3
    n_iterations: int = 3  # M
    mask_self_position: bool = True
    n_heads: int = 4

    def __post_init__(self):
        if self.n_blocks < 1:
            raise ValueError("n_blocks must be >= 1")
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be >= 1")
        if self.model_dim % 2:
            raise ValueError("model_dim must be even for the sinusoid pairing")
        if self.model_dim % self.n_heads:
            raise ValueError("model_dim must be divisible by n_heads")


class LmBlock(Module):
    """Pre-norm cross-attention block; queries never attend to each other, so
    the self-position mask stays airtight across stacked blocks."""

    def __init__(self, dim: int, n_heads: int, rng: Rng):
        self.ln1 = LayerNorm(dim)
        self.attn = MultiHeadAttention(dim, n_heads, rng.derive("attn"))
        self.ln2 = LayerNorm(dim)
        self.ffn = FeedForward(dim, 4 * dim, rng.derive("ffn"))

    def forward(self, x, kv, exclude=None):
        x = x + self.attn(self.ln1(x), kv, exclude=exclude)
        return x + self.ffn(self.ln2(x))


class IterLm(Module):
    def __init__(self, cfg: LMConfig, rng: Rng):
        self.cfg = cfg
        self.embed = Parameter(rng.normal((cfg.n_classes, cfg.model_dim)), "embed")
        self.blocks = [
            LmBlock(cfg.model_dim, cfg.n_heads, rng.derive("block", i))
            for i in range(cfg.n_blocks)
        ]
        self.out = Linear(cfg.model_dim, cfg.n_classes, rng.derive("out"))
        self.gate = Linear(2 * cfg.n_classes, cfg.n_classes, rng.derive("gate"))
        self._pos = Tensor(sinusoid_table(cfg.max_len, cfg.model_dim))
        self._exclude = (
            np.eye(cfg.max_len, dtype=bool) if cfg.mask_self_position else None
        )

    def _check_rows(self, y, what: str) -> None:
        t, d = y.shape[-2], y.shape[-1]
        if t != self.cfg.max_len or d != self.cfg.n_classes:
            raise ShapeError(
                f"{what} shape {y.shape} does not match "
                f"[{self.cfg.max_len} x {self.cfg.n_classes}]"
            )
        drift = np.abs(y.data.sum(-1) - 1.0).max()
        if drift > 1e-6:
            raise ValueError(
                f"{what} rows must sum to 1 (max deviation {drift:.3g})"
            )

    def lm_forward(self, y_in):
        """Refine one distribution sequence; output rows sum to 1.

        With ``mask_self_position`` the output at position t is bitwise
        independent of the input row t: attention at t gives its own key
        exactly zero weight, and queries are fixed positional codes.
        """
        self._check_rows(y_in, "language module input")
        kv = matmul(y_in, self.embed) + self._pos
        x = self._pos
        for block in self.blocks:
            x = block(x, kv, exclude=self._exclude)
        return softmax(self.out(x), axis=-1)

    def fuse(self, y_l, y_v):
        """Gated convex combination of refinement and vision prediction."""
        if y_l.shape != y_v.shape:
            raise ShapeError(f"fusion inputs disagree: {y_l.shape} vs {y_v.shape}")
        g = sigmoid(self.gate(concat([y_v, y_l], axis=-1)))
        fused = g * y_v + (1.0 - g) * y_l
        return fused / fused.sum(axis=-1, keepdims=True)

    def refine(self, y_v, m: int | None = None):
        """Run ``m`` refinement passes; fusion always targets the original
        vision prediction.  Returns ([refined dists], [fused dists])."""
        if m is None:
            m = self.cfg.n_iterations
        if m < 1:
            raise ValueError(f"refinement count must be >= 1, got {m}")
        if m != self.cfg.n_iterations:
            raise ValueError(
                f"language module was built for {self.cfg.n_iterations} passes, got {m}"
            )
        refined, fused = [], []
        y_f = y_v
        for _ in range(m):
            y_l = self.lm_forward(y_f)
            y_f = self.fuse(y_l, y_v)
            refined.append(y_l)
            fused.append(y_f)
        return refined, fused

    iterlm_refine = refine
