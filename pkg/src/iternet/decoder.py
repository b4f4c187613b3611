"""Position-attention prediction layer.

Character-order sinusoids act as queries, a mini U-Net over the semantic
feature's spatial grid produces the keys, the semantic feature itself is the
value, and a single linear map projects the attended rows to class logits.
One decoder instance serves every encoder iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .layers import Conv, sinusoid_table
from .tensor import Module, Parameter, Rng, ShapeError, Tensor, matmul, softmax, upsample, concat


@dataclass
class DecoderConfig:
    max_len: int  # T, includes the end token position
    n_classes: int  # D
    model_dim: int  # C
    grid_h: int
    grid_w: int
    unet_depth: int = 2

    def __post_init__(self):
        if self.max_len < 2:
            raise ValueError("max_len must be >= 2")
        if self.n_classes < 2:
            raise ValueError("n_classes must be >= 2")
        if self.model_dim % 2:
            raise ValueError("model_dim must be even for the sinusoid pairing")
        div = 1 << self.unet_depth
        if self.grid_h % div or self.grid_w % div:
            raise ValueError(
                f"grid ({self.grid_h}x{self.grid_w}) not divisible by 2^{self.unet_depth}"
            )


def positional_encoding(max_len: int, dim: int) -> Tensor:
    """Fixed sinusoidal table of character orders, shape [max_len, dim]."""
    if dim % 2:
        raise ValueError(f"positional encoding needs an even dim, got {dim}")
    return Tensor(sinusoid_table(max_len, dim))


class MiniUnet(Module):
    """Small encoder-decoder over the spatial grid, output shaped like input.

    Down path: stride-2 convs; up path: nearest upsample + conv on the
    concatenation with the matching down-path input.  The final conv is
    linear so the key transform can represent zero exactly.
    """

    def __init__(self, dim: int, depth: int, rng: Rng):
        self.depth = depth
        self.down = [
            Conv(dim, dim, 3, 2, 1, rng.derive("down", i)) for i in range(depth)
        ]
        self.up = [
            Conv(2 * dim, dim, 3, 1, 1, rng.derive("up", i)) for i in range(depth)
        ]

    def forward(self, x):
        skips = []
        for conv in self.down:
            skips.append(x)
            x = conv(x).relu()
        for i, conv in enumerate(reversed(self.up)):
            x = conv(concat([upsample(x, 2), skips.pop()], axis=-3))
            if i < self.depth - 1:
                x = x.relu()
        return x


class PositionDecoder(Module):
    def __init__(self, cfg: DecoderConfig, rng: Rng):
        self.cfg = cfg
        self.q_table = positional_encoding(cfg.max_len, cfg.model_dim)
        self.unet = MiniUnet(cfg.model_dim, cfg.unet_depth, rng.derive("unet"))
        self.w_cls = Parameter(
            rng.normal(
                (cfg.model_dim, cfg.n_classes), std=math.sqrt(1.0 / cfg.model_dim)
            ),
            "w_cls",
        )

    def _to_grid(self, s):
        lead = s.shape[:-2]
        c = s.shape[-1]
        grid = s.reshape(*lead, self.cfg.grid_h, self.cfg.grid_w, c)
        axes = tuple(range(len(lead))) + (len(lead) + 2, len(lead), len(lead) + 1)
        return grid.transpose(*axes)

    def _to_rows(self, x):
        lead = x.shape[:-3]
        c, gh, gw = x.shape[-3], x.shape[-2], x.shape[-1]
        axes = tuple(range(len(lead))) + (len(lead) + 1, len(lead) + 2, len(lead))
        return x.transpose(*axes).reshape(*lead, gh * gw, c)

    def mini_unet(self, s):
        """Key transform: [.., L, C] -> [.., L, C] via the spatial U-Net."""
        expected = self.cfg.grid_h * self.cfg.grid_w
        if s.shape[-2] != expected or s.shape[-1] != self.cfg.model_dim:
            raise ShapeError(
                f"semantic feature {s.shape} does not match grid "
                f"({expected} rows x {self.cfg.model_dim})"
            )
        return self._to_rows(self.unet(self._to_grid(s)))

    def decode(self, s):
        """Class logits [.., T, D] for a semantic feature [.., L, C]."""
        return attend(s, self.q_table, self.mini_unet(s), self.w_cls)

    forward = decode


def attend(s, q, g_out, w):
    """Position attention: softmax(q @ g_out^T / sqrt(C)) @ s @ w.

    Returns pre-softmax class scores; probabilities are taken downstream
    where needed.
    """
    c = q.shape[-1]
    if s.shape[-1] != c or g_out.shape[-1] != c:
        raise ShapeError(
            f"model dims disagree: queries {q.shape}, keys {g_out.shape}, values {s.shape}"
        )
    if g_out.shape[-2] != s.shape[-2]:
        raise ShapeError(
            f"key rows {g_out.shape} do not match value rows {s.shape}"
        )
    kt = g_out.transpose(*range(g_out.ndim - 2), g_out.ndim - 1, g_out.ndim - 2)
    scores = matmul(q, kt) * (1.0 / math.sqrt(c))
    weights = softmax(scores, axis=-1)
    return matmul(matmul(weights, s), w)


def greedy_text(logits, vocab) -> str:
    """Argmax each position, cut at the first end token; ties pick the lowest
    class index."""
    data = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
    if data.ndim != 2 or data.shape[1] != vocab.n_classes:
        raise ShapeError(
            f"logits shape {data.shape} does not match vocab size {vocab.n_classes}"
        )
    chars = []
    for row in data:
        idx = int(np.argmax(row))
        if idx == vocab.end_index:
            break
        chars.append(vocab.chars[idx])
    return "".join(chars)
