"""Analytic multiply-accumulate and parameter accounting.

Counts mirror exactly what the runtime kernels execute for one unbatched
sample: convolutions contribute C_out*C_in*k^2*H'*W', matrix products m*k*n.
Elementwise work, normalizations and softmaxes are not MACs and are counted
nowhere, so the analytic numbers can be cross-checked against the counter
instrumented into conv2d/matmul.
"""

from __future__ import annotations

from .model import ModelConfig


def _conv_macs(c_in: int, c_out: int, k: int, pixels: int) -> int:
    return c_in * c_out * k * k * pixels


def _conv_params(c_in: int, c_out: int, k: int, bias: bool = True) -> int:
    return c_in * c_out * k * k + (c_out if bias else 0)


def _linear_params(d_in: int, d_out: int, bias: bool = True) -> int:
    return d_in * d_out + (d_out if bias else 0)


def _attention_macs(len_q: int, len_kv: int, dim: int) -> int:
    projections = 2 * len_q * dim * dim + 2 * len_kv * dim * dim
    scores = 2 * len_q * len_kv * dim
    return projections + scores


def _ffn_macs(length: int, dim: int) -> int:
    return 2 * length * dim * (4 * dim)


def _transformer_unit_macs(length: int, dim: int) -> int:
    return _attention_macs(length, length, dim) + _ffn_macs(length, dim)


def _transformer_unit_params(dim: int) -> int:
    norms = 2 * (2 * dim)
    attn = 4 * _linear_params(dim, dim)
    ffn = _linear_params(dim, 4 * dim) + _linear_params(4 * dim, dim)
    return norms + attn + ffn


def encoder_pass_counts(cfg: ModelConfig) -> tuple[int, int]:
    """(MACs, params) of one encoder pass / one encoder parameter set."""
    ec = cfg.encoder_config()
    h, w = ec.input_h, ec.input_w
    macs = _conv_macs(ec.input_channels, ec.stem_channels, 3, h * w)
    params = _conv_params(ec.input_channels, ec.stem_channels, 3)
    c_in = ec.stem_channels
    for k in range(1, 6):
        c_out = ec.stage_channels[k - 1]
        n_units = ec.stage_units[k - 1]
        for i in range(n_units):
            stride = 2 if (k in (1, 3) and i == n_units - 1) else 1
            if stride == 2:
                h //= 2
                w //= 2
            pixels = h * w
            c_unit_in = c_in if i == 0 else c_out
            macs += _conv_macs(c_unit_in, c_out, 3, pixels)
            macs += _conv_macs(c_out, c_out, 3, pixels)
            params += _conv_params(c_unit_in, c_out, 3) + _conv_params(c_out, c_out, 3)
            params += 2 * (2 * c_out)  # the two per-channel norms
            if stride != 1 or c_unit_in != c_out:
                macs += _conv_macs(c_unit_in, c_out, 1, pixels)
                params += _conv_params(c_unit_in, c_out, 1)
        c_in = c_out
    length, dim = ec.seq_len, ec.model_dim
    macs += ec.n_transformer_units * _transformer_unit_macs(length, dim)
    params += ec.n_transformer_units * _transformer_unit_params(dim)
    return macs, params


def feedback_counts(cfg: ModelConfig) -> tuple[int, int]:
    """(MACs per injected pass, params per projector set)."""
    ec = cfg.encoder_config()
    length, dim = ec.seq_len, ec.model_dim
    sites = [ec.site_channels(k) for k in (1, 2, 3, 4, 5, "transformer")]
    macs = sum(length * dim * c for c in sites)
    params = sum(dim * c for c in sites)
    return macs, params


def decoder_counts(cfg: ModelConfig) -> tuple[int, int]:
    """(MACs per decode, params) of the position-attention decoder."""
    dc = cfg.decoder_config()
    dim = dc.model_dim
    gh, gw = dc.grid_h, dc.grid_w
    macs = 0
    params = 0
    levels = [(gh, gw)]
    for _ in range(dc.unet_depth):
        gh //= 2
        gw //= 2
        macs += _conv_macs(dim, dim, 3, gh * gw)
        params += _conv_params(dim, dim, 3)
        levels.append((gh, gw))
    for i in reversed(range(dc.unet_depth)):
        ph, pw = levels[i]
        macs += _conv_macs(2 * dim, dim, 3, ph * pw)
        params += _conv_params(2 * dim, dim, 3)
    length = dc.grid_h * dc.grid_w
    t, d = dc.max_len, dc.n_classes
    macs += t * dim * length + t * length * dim + t * dim * d
    params += dim * d  # class projection, no bias
    return macs, params


def lm_counts(cfg: ModelConfig) -> tuple[int, int]:
    """(MACs of one full refinement run of M passes, params)."""
    lc = cfg.lm_config()
    t, d, dim = lc.max_len, lc.n_classes, lc.model_dim
    one_pass = t * d * dim
    one_pass += lc.n_blocks * (_attention_macs(t, t, dim) + _ffn_macs(t, dim))
    one_pass += t * dim * d
    fuse = t * (2 * d) * d
    macs = lc.n_iterations * (one_pass + fuse)
    params = d * dim
    params += lc.n_blocks * _transformer_unit_params(dim)
    params += _linear_params(dim, d)
    params += _linear_params(2 * d, d)
    return macs, params


def encoder_macs(cfg: ModelConfig, n: int) -> int:
    """N encoder passes; passes after the first pay the feedback projections."""
    pass_macs, _ = encoder_pass_counts(cfg)
    fb_macs, _ = feedback_counts(cfg)
    return n * pass_macs + (n - 1) * fb_macs


def count_flops_params(cfg: ModelConfig, n_iterations: int | None = None) -> dict:
    """Per-component MACs (vm-only inference path) and parameter counts."""
    n = cfg.iterations_vm if n_iterations is None else n_iterations
    if n < 1:
        raise ValueError("iteration count must be >= 1")
    pass_macs, pass_params = encoder_pass_counts(cfg)
    fb_macs, fb_params = feedback_counts(cfg)
    dec_macs, dec_params = decoder_counts(cfg)
    enc_sets = 1 if cfg.share_encoder_weights else n
    fb_sets = 0 if n == 1 else (1 if cfg.share_encoder_weights else n - 1)
    report = {
        "encoder": {"macs": n * pass_macs, "params": enc_sets * pass_params},
        "feedback": {"macs": (n - 1) * fb_macs, "params": fb_sets * fb_params},
        "decoder": {"macs": dec_macs, "params": dec_params},
    }
    if cfg.use_lm:
        lm_macs, lm_params = lm_counts(cfg)
        report["lm"] = {"macs": lm_macs, "params": lm_params}
    report["total"] = {
        "macs": sum(v["macs"] for v in report.values()),
        "params": sum(v["params"] for v in report.values()),
    }
    return report
