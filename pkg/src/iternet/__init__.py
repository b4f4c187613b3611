"""Iterative vision-modeling text recognizer on a from-scratch autodiff core."""

import os as _os

# Cap BLAS threads before numpy loads so ITERVM_THREADS is honored.  Only
# defaults are set; explicit user environment wins.
if "ITERVM_THREADS" in _os.environ:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _os.environ["ITERVM_THREADS"])

from .tensor import (  # noqa: E402
    Module,
    Parameter,
    Rng,
    ShapeError,
    Tensor,
    conv2d,
    count_macs,
    cross_entropy,
    grad_check,
    layer_norm,
    matmul,
    no_grad,
    softmax,
    upsample,
)

__all__ = [
    "Module",
    "Parameter",
    "Rng",
    "ShapeError",
    "Tensor",
    "conv2d",
    "count_macs",
    "cross_entropy",
    "grad_check",
    "layer_norm",
    "matmul",
    "no_grad",
    "softmax",
    "upsample",
]

__version__ = "0.1.0"
