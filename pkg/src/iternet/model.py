"""Full recognizer assembly: iterative encoder + shared decoder (+ language
module), with one config object describing the whole architecture."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .data import DEFAULT_VOCAB
from .decoder import DecoderConfig, PositionDecoder
from .encoder import EncoderConfig, VisionEncoder
from .lm import IterLm, LMConfig
from .tensor import Module, Rng, softmax


@dataclass
class ModelConfig:
    """Complete architecture description; every layer is derived from it."""

    input_h: int = 16
    input_w: int = 64
    input_channels: int = 3
    stage_units: tuple = (2, 2, 3, 3, 2)
    stage_channels: tuple = (8, 16, 32, 48, 64)
    stem_channels: Optional[int] = None
    model_dim: int = 64
    n_transformer_units: int = 2
    n_heads: int = 4
    positional_encoding: bool = True
    iterations_vm: int = 3
    share_encoder_weights: bool = True
    max_len: int = 8
    n_classes: int = 37
    unet_depth: int = 2
    use_lm: bool = True
    lm_blocks: int = 2
    iterations_lm: int = 3
    mask_self_position: bool = True

    def __post_init__(self):
        self.stage_units = tuple(int(u) for u in self.stage_units)
        self.stage_channels = tuple(int(c) for c in self.stage_channels)
        # constructing the sub-configs runs their validation
        self.encoder_config()
        self.decoder_config()
        if self.use_lm:
            self.lm_config()

    @classmethod
    def paper_scale(cls) -> "ModelConfig":
        """The full-size architecture (32x128 input, width 512)."""
        return cls(
            input_h=32,
            input_w=128,
            stage_units=(2, 2, 3, 3, 2),
            stage_channels=(32, 64, 128, 256, 512),
            model_dim=512,
            n_transformer_units=3,
            n_heads=8,
            iterations_vm=3,
            max_len=26,
            lm_blocks=3,
            iterations_lm=3,
        )

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(
            input_h=self.input_h,
            input_w=self.input_w,
            input_channels=self.input_channels,
            stage_units=self.stage_units,
            stage_channels=self.stage_channels,
            stem_channels=self.stem_channels,
            model_dim=self.model_dim,
            n_transformer_units=self.n_transformer_units,
            n_heads=self.n_heads,
            n_iterations=self.iterations_vm,
            share_encoder_weights=self.share_encoder_weights,
            positional_encoding=self.positional_encoding,
        )

    def decoder_config(self) -> DecoderConfig:
        return DecoderConfig(
            max_len=self.max_len,
            n_classes=self.n_classes,
            model_dim=self.model_dim,
            grid_h=self.input_h // 4,
            grid_w=self.input_w // 4,
            unet_depth=self.unet_depth,
        )

    def lm_config(self) -> LMConfig:
        return LMConfig(
            max_len=self.max_len,
            n_classes=self.n_classes,
            model_dim=self.model_dim,
            n_blocks=self.lm_blocks,
            n_iterations=self.iterations_lm,
            mask_self_position=self.mask_self_position,
            n_heads=self.n_heads,
        )


class IterNet(Module):
    """Recognizer with an N-pass encoder, one shared decoder, optional LM."""

    def __init__(self, cfg: ModelConfig, rng: Rng | int = 0, vocab=DEFAULT_VOCAB):
        if cfg.n_classes != vocab.n_classes:
            raise ValueError(
                f"config expects {cfg.n_classes} classes, vocab has {vocab.n_classes}"
            )
        if not isinstance(rng, Rng):
            rng = Rng(rng)
        self.cfg = cfg
        self.vocab = vocab
        self.encoder = VisionEncoder(cfg.encoder_config(), rng.derive("encoder"))
        self.decoder = PositionDecoder(cfg.decoder_config(), rng.derive("decoder"))
        self.lm = IterLm(cfg.lm_config(), rng.derive("lm")) if cfg.use_lm else None

    def forward_train(self, images):
        """All supervision heads: logits for every encoder pass and, with an
        LM, the refined/fused distributions for every pass and refinement."""
        feats = self.encoder(images)
        vm_logits = [self.decoder.decode(s) for s in feats]
        lm_dists: list[list] = []
        fused_dists: list[list] = []
        if self.lm is not None:
            for logits in vm_logits:
                refined, fused = self.lm.refine(softmax(logits, axis=-1))
                lm_dists.append(refined)
                fused_dists.append(fused)
        return vm_logits, lm_dists, fused_dists

    def predict_vm(self, images):
        """Inference head of the vision path: decode only the last pass."""
        feats = self.encoder(images)
        return self.decoder.decode(feats[-1])

    def predict_full(self, images):
        """Vision pass + language refinement; returns (vm logits, final dist)."""
        if self.lm is None:
            raise ValueError("model was built without a language module")
        logits = self.predict_vm(images)
        _, fused = self.lm.refine(softmax(logits, axis=-1))
        return logits, fused[-1]
