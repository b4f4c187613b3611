"""Iterative vision encoder: stem, residual stages, transformer units, and
feedback injection of the previous pass's semantic feature into every stage.

The encoder maps an image [3, H, W] to a semantic feature [(H/4)*(W/4), C].
Resolution schedule: the stem keeps (H, W); stages 1-2 run at (H/2, W/2) after
stage 1's trailing stride-2 unit, stages 3-5 at (H/4, W/4) after stage 3's.
Running the encoder N times on the same image, feeding each pass the previous
semantic feature through per-site linear projections (upsampled to the site's
resolution), yields the iterative refinement behavior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .layers import ChannelNorm, Conv, TransformerUnit, sinusoid_grid
from .tensor import Module, Parameter, Rng, ShapeError, Tensor, matmul, upsample

# stages whose final residual unit halves the spatial resolution
_DOWNSAMPLE_STAGES = (1, 3)


@dataclass
class EncoderConfig:
    input_h: int = 16
    input_w: int = 64
    input_channels: int = 3
    stage_units: tuple = (2, 2, 3, 3, 2)
    stage_channels: tuple = (32, 64, 128, 256, 512)
    stem_channels: int | None = None
    model_dim: int = 512
    n_transformer_units: int = 2
    n_heads: int = 4
    n_iterations: int = 3
    share_encoder_weights: bool = True
    positional_encoding: bool = True

    def __post_init__(self):
        if len(self.stage_units) != 5 or len(self.stage_channels) != 5:
            raise ValueError("stage_units and stage_channels must list 5 stages")
        if self.stage_channels[4] != self.model_dim:
            raise ValueError(
                f"stage_channels[4] ({self.stage_channels[4]}) must equal "
                f"model_dim ({self.model_dim})"
            )
        if self.input_h % 4 or self.input_w % 4:
            raise ValueError("input_h and input_w must be divisible by 4")
        if self.n_iterations < 1:
            raise ValueError("n_iterations must be >= 1")
        if self.model_dim % 4:
            raise ValueError("model_dim must be divisible by 4")
        if self.model_dim % self.n_heads:
            raise ValueError("model_dim must be divisible by n_heads")
        if self.stem_channels is None:
            self.stem_channels = self.stage_channels[0]

    @property
    def grid_h(self) -> int:
        return self.input_h // 4

    @property
    def grid_w(self) -> int:
        return self.input_w // 4

    @property
    def seq_len(self) -> int:
        return self.grid_h * self.grid_w

    def site_channels(self, site) -> int:
        """Channel count of an injection site's input (stage k reads X_{k-1})."""
        if site == "transformer":
            return self.model_dim
        if site == 1:
            return self.stem_channels
        return self.stage_channels[site - 2]

    def site_upsample(self, site: int) -> int:
        return {1: 4, 2: 2, 3: 2, 4: 1, 5: 1}[site]


class ResidualUnit(Module):
    """conv-norm-relu-conv-norm, skip-added, relu; skip projects on change."""

    def __init__(self, c_in: int, c_out: int, stride: int, rng: Rng):
        self.conv1 = Conv(c_in, c_out, 3, stride, 1, rng.derive("c1"))
        self.norm1 = ChannelNorm(c_out)
        self.conv2 = Conv(c_out, c_out, 3, 1, 1, rng.derive("c2"))
        self.norm2 = ChannelNorm(c_out)
        if stride != 1 or c_in != c_out:
            self.proj = Conv(c_in, c_out, 1, stride, 0, rng.derive("proj"))
        else:
            self.proj = None

    def forward(self, x):
        h = self.norm1(self.conv1(x)).relu()
        h = self.norm2(self.conv2(h))
        skip = x if self.proj is None else self.proj(x)
        return (h + skip).relu()


class ResidualStage(Module):
    def __init__(self, c_in: int, c_out: int, n_units: int, downsample: bool, rng: Rng):
        units = []
        for i in range(n_units):
            stride = 2 if (downsample and i == n_units - 1) else 1
            units.append(ResidualUnit(c_in if i == 0 else c_out, c_out, stride, rng.derive(i)))
        self.units = units

    def forward(self, x):
        for unit in self.units:
            x = unit(x)
        return x


class EncoderWeights(Module):
    """One full parameter set: stem + five stages + transformer units."""

    def __init__(self, cfg: EncoderConfig, rng: Rng):
        self.stem_conv = Conv(
            cfg.input_channels, cfg.stem_channels, 3, 1, 1, rng.derive("stem")
        )
        stages = []
        c_prev = cfg.stem_channels
        for k in range(1, 6):
            c_out = cfg.stage_channels[k - 1]
            stages.append(
                ResidualStage(
                    c_prev,
                    c_out,
                    cfg.stage_units[k - 1],
                    k in _DOWNSAMPLE_STAGES,
                    rng.derive("stage", k),
                )
            )
            c_prev = c_out
        self.stages = stages
        self.units = [
            TransformerUnit(cfg.model_dim, cfg.n_heads, rng.derive("unit", i))
            for i in range(cfg.n_transformer_units)
        ]


class FeedbackProjector(Module):
    """Per-site linear maps aligning the semantic feature with stage inputs."""

    SITES = (1, 2, 3, 4, 5, "transformer")

    def __init__(self, cfg: EncoderConfig, rng: Rng):
        c = cfg.model_dim
        self.w1 = Parameter(rng.normal((c, cfg.site_channels(1)), std=math.sqrt(1.0 / c)), "w1")
        self.w2 = Parameter(rng.normal((c, cfg.site_channels(2)), std=math.sqrt(1.0 / c)), "w2")
        self.w3 = Parameter(rng.normal((c, cfg.site_channels(3)), std=math.sqrt(1.0 / c)), "w3")
        self.w4 = Parameter(rng.normal((c, cfg.site_channels(4)), std=math.sqrt(1.0 / c)), "w4")
        self.w5 = Parameter(rng.normal((c, cfg.site_channels(5)), std=math.sqrt(1.0 / c)), "w5")
        self.wt = Parameter(rng.normal((c, c), std=math.sqrt(1.0 / c)), "wt")
        self._grid = (cfg.grid_h, cfg.grid_w)
        self._factors = {k: cfg.site_upsample(k) for k in range(1, 6)}

    def weight(self, site):
        if site == "transformer":
            return self.wt
        return getattr(self, f"w{site}")


def feedback_inject(site, x, s_prev, proj: FeedbackProjector):
    """Add the projected previous-pass semantic feature to a site's input.

    For stage sites the projected rows are laid back onto the (H/4, W/4)
    grid, upsampled to the site's resolution, and added to the feature map.
    The transformer site adds the projection row-wise (its grid already
    matches), which is the same as adding to the flattened sequence.
    """
    if s_prev is None:
        raise ValueError("feedback injection is undefined on the first pass")
    if site not in FeedbackProjector.SITES:
        raise ValueError(f"unknown injection site {site!r}")
    w = proj.weight(site)
    gh, gw = proj._grid
    p = matmul(s_prev, w)  # [.., L, C_site]
    lead = p.shape[:-2]
    c_site = p.shape[-1]
    grid = p.reshape(*lead, gh, gw, c_site)
    axes = tuple(range(len(lead))) + (len(lead) + 2, len(lead), len(lead) + 1)
    spatial = grid.transpose(*axes)  # [.., C_site, gh, gw]
    if site != "transformer":
        spatial = upsample(spatial, proj._factors[site])
    if spatial.shape != x.shape:
        raise ShapeError(
            f"feedback for site {site} has shape {spatial.shape}, "
            f"site input has {x.shape}"
        )
    return x + spatial


class VisionEncoder(Module):
    """Encoder executed once per iteration, optionally with shared weights."""

    def __init__(self, cfg: EncoderConfig, rng: Rng):
        self.cfg = cfg
        n_sets = 1 if cfg.share_encoder_weights else cfg.n_iterations
        self.weights = [EncoderWeights(cfg, rng.derive("weights", i)) for i in range(n_sets)]
        if cfg.n_iterations > 1:
            n_proj = 1 if cfg.share_encoder_weights else cfg.n_iterations - 1
            self.projectors = [
                FeedbackProjector(cfg, rng.derive("feedback", i)) for i in range(n_proj)
            ]
        else:
            self.projectors = []
        self._pos = Tensor(sinusoid_grid(cfg.grid_h, cfg.grid_w, cfg.model_dim))

    # -- per-iteration pieces -------------------------------------------------

    def _set(self, iteration: int) -> EncoderWeights:
        return self.weights[0 if self.cfg.share_encoder_weights else iteration]

    def _proj(self, iteration: int) -> FeedbackProjector:
        return self.projectors[0 if self.cfg.share_encoder_weights else iteration - 1]

    def stem(self, image, iteration: int = 0):
        if image.shape[-3:] != (
            self.cfg.input_channels,
            self.cfg.input_h,
            self.cfg.input_w,
        ):
            raise ShapeError(
                f"image shape {image.shape} does not match configured input "
                f"{(self.cfg.input_channels, self.cfg.input_h, self.cfg.input_w)}"
            )
        return self._set(iteration).stem_conv(image).relu()

    def res_stage(self, k: int, x, iteration: int = 0):
        return self._set(iteration).stages[k - 1](x)

    def transformer_units(self, x, iteration: int = 0, add_position: bool | None = None):
        """Flatten a stage-5 feature map and run the self-attention stack."""
        c, gh, gw = x.shape[-3], x.shape[-2], x.shape[-1]
        if (gh, gw) != (self.cfg.grid_h, self.cfg.grid_w) or c != self.cfg.model_dim:
            raise ShapeError(
                f"transformer input {x.shape} does not match grid "
                f"({self.cfg.model_dim}, {self.cfg.grid_h}, {self.cfg.grid_w})"
            )
        seq = self.flatten_grid(x)
        if add_position is None:
            add_position = self.cfg.positional_encoding
        if add_position:
            seq = seq + self._pos
        for unit in self._set(iteration).units:
            seq = unit(seq)
        return seq

    @staticmethod
    def flatten_grid(x):
        """[.., C, gh, gw] -> [.., gh*gw, C], rows in row-major grid order."""
        lead = x.shape[:-3]
        c, gh, gw = x.shape[-3], x.shape[-2], x.shape[-1]
        axes = tuple(range(len(lead))) + (len(lead) + 1, len(lead) + 2, len(lead))
        return x.transpose(*axes).reshape(*lead, gh * gw, c)

    def encode_iteration(self, image, s_prev=None, iteration: int = 0):
        """One encoder pass; ``s_prev`` is absent exactly on the first pass."""
        proj = self._proj(iteration) if s_prev is not None else None
        x = self.stem(image, iteration)
        for k in range(1, 6):
            if s_prev is not None:
                x = feedback_inject(k, x, s_prev, proj)
            x = self.res_stage(k, x, iteration)
        if s_prev is not None:
            x = feedback_inject("transformer", x, s_prev, proj)
        return self.transformer_units(x, iteration)

    def forward(self, image, n: int | None = None):
        """Run ``n`` passes; returns the semantic features of every pass."""
        if n is None:
            n = self.cfg.n_iterations
        if n < 1:
            raise ValueError(f"iteration count must be >= 1, got {n}")
        if n != self.cfg.n_iterations:
            raise ValueError(
                f"encoder was built for {self.cfg.n_iterations} iterations, got {n}"
            )
        feats = []
        s = None
        for i in range(n):
            s = self.encode_iteration(image, s, iteration=i)
            feats.append(s)
        return feats

    itervm_forward = forward
