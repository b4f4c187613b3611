"""Dense float64 tensors with reverse-mode automatic differentiation.

Every higher-level component (vision encoder, position decoder, language
module, training loop) is expressed in the operations defined here.  Tensors
wrap numpy arrays and are treated as immutable once produced by an op; each
op records a closure that maps the output gradient to the input gradients.
Calling ``backward()`` on a scalar accumulates into the ``.grad`` buffers of
every reachable tensor with ``requires_grad`` set, so gradients from several
losses add up until ``zero_grad`` is called explicitly.
"""

from __future__ import annotations

import contextlib
import hashlib
import math

import numpy as np


class ShapeError(ValueError):
    """Operand shapes violate an operation's contract."""


# ---------------------------------------------------------------------------
# global switches: gradient recording and multiply-accumulate counting
# ---------------------------------------------------------------------------

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording inside the block (inference-only forwards)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class MacCounter:
    """Accumulates multiply-accumulate counts of matmul/conv forwards."""

    def __init__(self):
        self.total = 0


_mac_counter: MacCounter | None = None


@contextlib.contextmanager
def count_macs():
    """Count the MACs of every matmul/conv2d forward run inside the block."""
    global _mac_counter
    prev = _mac_counter
    counter = MacCounter()
    _mac_counter = counter
    try:
        yield counter
    finally:
        _mac_counter = prev


def _macs(n: int) -> None:
    if _mac_counter is not None:
        _mac_counter.total += int(n)


# ---------------------------------------------------------------------------
# core tensor type
# ---------------------------------------------------------------------------


class Tensor:
    """A dense float64 array plus optional autodiff bookkeeping.

    ``_parents`` and ``_backward`` describe the recording: ``_backward(g)``
    returns one gradient array (or None) per parent.  ``requires_grad`` is
    true iff some leaf below this node wants a gradient.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = _parents
        self._backward = _backward

    # -- introspection ------------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- autodiff entry points ---------------------------------------------

    def backward(self) -> None:
        """Reverse-mode sweep from a scalar root.

        Accumulates into the ``.grad`` of every reachable tensor with
        ``requires_grad``; a second call without zeroing adds another full
        contribution.
        """
        if self.data.size != 1:
            raise ValueError(
                f"backward root must be a scalar, got shape {self.data.shape}"
            )
        topo = _toposort(self)
        grads = {id(self): np.ones_like(self.data)}
        for node in reversed(topo):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.requires_grad:
                if node.grad is None:
                    node.grad = np.zeros_like(node.data)
                node.grad = node.grad + g
            if node._backward is None:
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data) if self.requires_grad else None

    # -- operator sugar ------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __neg__(self):
        return neg(self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        return div(self, other)

    def __pow__(self, p):
        return power(self, p)

    def __matmul__(self, other):
        return matmul(self, other)

    def reshape(self, *shape):
        return reshape(self, shape[0] if len(shape) == 1 and isinstance(shape[0], (tuple, list)) else shape)

    def transpose(self, *axes):
        return transpose(self, axes if axes else None)

    def sum(self, axis=None, keepdims=False):
        return sum_(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean_(self, axis, keepdims)

    def relu(self):
        return relu(self)

    def sigmoid(self):
        return sigmoid(self)

    def log(self):
        return log(self)


class Parameter(Tensor):
    """A trainable leaf tensor with a persistent, zero-initialized gradient."""

    __slots__ = ("name",)

    def __init__(self, data, name: str = ""):
        super().__init__(data, requires_grad=True)
        self.grad = np.zeros_like(self.data)
        self.name = name


def _toposort(root: Tensor) -> list[Tensor]:
    # iterative postorder; graphs routinely exceed the recursion limit
    topo: list[Tensor] = []
    visited = {id(root)}
    stack: list[tuple[Tensor, int]] = [(root, 0)]
    while stack:
        node, i = stack.pop()
        parents = node._parents
        while i < len(parents):
            p = parents[i]
            i += 1
            if id(p) not in visited and p.requires_grad:
                visited.add(id(p))
                stack.append((node, i))
                stack.append((p, 0))
                break
        else:
            topo.append(node)
    return topo


def _wrap(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, backward) -> Tensor:
    if _grad_enabled and any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, _parents=parents, _backward=backward)
    return Tensor(data)


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``g`` down to ``shape`` along the axes numpy broadcast it over."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise and shape ops
# ---------------------------------------------------------------------------


def add(a, b):
    a, b = _wrap(a), _wrap(b)
    out = a.data + b.data

    def bw(g):
        ga = _unbroadcast(g, a.data.shape) if a.requires_grad else None
        gb = _unbroadcast(g, b.data.shape) if b.requires_grad else None
        return ga, gb

    return _make(out, (a, b), bw)


def sub(a, b):
    a, b = _wrap(a), _wrap(b)
    out = a.data - b.data

    def bw(g):
        ga = _unbroadcast(g, a.data.shape) if a.requires_grad else None
        gb = _unbroadcast(-g, b.data.shape) if b.requires_grad else None
        return ga, gb

    return _make(out, (a, b), bw)


def neg(a):
    a = _wrap(a)
    return _make(-a.data, (a,), lambda g: (-g,))


def mul(a, b):
    a, b = _wrap(a), _wrap(b)
    out = a.data * b.data

    def bw(g):
        ga = _unbroadcast(g * b.data, a.data.shape) if a.requires_grad else None
        gb = _unbroadcast(g * a.data, b.data.shape) if b.requires_grad else None
        return ga, gb

    return _make(out, (a, b), bw)


def div(a, b):
    a, b = _wrap(a), _wrap(b)
    out = a.data / b.data

    def bw(g):
        ga = _unbroadcast(g / b.data, a.data.shape) if a.requires_grad else None
        gb = (
            _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape)
            if b.requires_grad
            else None
        )
        return ga, gb

    return _make(out, (a, b), bw)


def power(a, p: float):
    a = _wrap(a)
    p = float(p)
    out = a.data**p

    def bw(g):
        return (g * p * a.data ** (p - 1.0),)

    return _make(out, (a,), bw)


def relu(a):
    a = _wrap(a)
    out = np.maximum(a.data, 0.0)

    def bw(g):
        return (g * (a.data > 0.0),)

    return _make(out, (a,), bw)


def sigmoid(a):
    a = _wrap(a)
    d = a.data
    out = np.empty_like(d)
    pos = d >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-d[pos]))
    e = np.exp(d[~pos])
    out[~pos] = e / (1.0 + e)

    def bw(g):
        return (g * out * (1.0 - out),)

    return _make(out, (a,), bw)


def log(a):
    a = _wrap(a)
    out = np.log(a.data)

    def bw(g):
        return (g / a.data,)

    return _make(out, (a,), bw)


def reshape(a, shape):
    a = _wrap(a)
    out = a.data.reshape(shape)

    def bw(g):
        return (g.reshape(a.data.shape),)

    return _make(out, (a,), bw)


def transpose(a, axes=None):
    a = _wrap(a)
    out = np.transpose(a.data, axes)
    if axes is None:
        inv = None
    else:
        inv = tuple(np.argsort(axes))

    def bw(g):
        return (np.transpose(g, inv),)

    return _make(out, (a,), bw)


def concat(tensors, axis: int):
    tensors = [_wrap(t) for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum(sizes)[:-1]

    def bw(g):
        pieces = np.split(g, offsets, axis=axis)
        return tuple(
            piece if t.requires_grad else None for piece, t in zip(pieces, tensors)
        )

    return _make(out, tuple(tensors), bw)


def sum_(a, axis=None, keepdims=False):
    a = _wrap(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def bw(g):
        gg = g
        if axis is not None and not keepdims:
            gg = np.expand_dims(g, axis)
        return (np.broadcast_to(gg, a.data.shape),)

    return _make(out, (a,), bw)


def mean_(a, axis=None, keepdims=False):
    a = _wrap(a)
    out = a.data.mean(axis=axis, keepdims=keepdims)
    n = a.data.size / out.size

    def bw(g):
        gg = g
        if axis is not None and not keepdims:
            gg = np.expand_dims(g, axis)
        return (np.broadcast_to(gg, a.data.shape) / n,)

    return _make(out, (a,), bw)


# ---------------------------------------------------------------------------
# linear algebra
# ---------------------------------------------------------------------------


def matmul(a, b):
    """Matrix product; leading dimensions broadcast numpy-style."""
    a, b = _wrap(a), _wrap(b)
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ShapeError(
            f"matmul operands must have >= 2 dims, got {a.data.shape} and {b.data.shape}"
        )
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ShapeError(
            f"matmul inner dimensions disagree: {a.data.shape} @ {b.data.shape}"
        )
    out = np.matmul(a.data, b.data)
    _macs(out.size * a.data.shape[-1])

    def bw(g):
        ga = gb = None
        if a.requires_grad:
            ga = _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.data.shape)
        if b.requires_grad:
            gb = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.data.shape)
        return ga, gb

    return _make(out, (a, b), bw)


# ---------------------------------------------------------------------------
# convolution and spatial ops
# ---------------------------------------------------------------------------


def _im2col(padded: np.ndarray, kh: int, kw: int, stride: int, ho: int, wo: int):
    win = np.lib.stride_tricks.sliding_window_view(padded, (kh, kw), axis=(2, 3))
    win = win[:, :, ::stride, ::stride]
    b, c = padded.shape[0], padded.shape[1]
    return win.transpose(0, 2, 3, 1, 4, 5).reshape(b * ho * wo, c * kh * kw)


def conv2d(x, kernel, stride: int = 1, pad: int = 0):
    """Cross-correlation of ``x`` ([C,H,W] or [B,C,H,W]) with [Co,Ci,kh,kw]."""
    x, kernel = _wrap(x), _wrap(kernel)
    if kernel.data.ndim != 4:
        raise ShapeError(f"conv2d kernel must be 4-d, got {kernel.data.shape}")
    if x.data.ndim not in (3, 4):
        raise ShapeError(f"conv2d input must be 3-d or 4-d, got {x.data.shape}")
    co, ci, kh, kw = kernel.data.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError(f"conv2d kernel dims must be odd, got {kh}x{kw}")
    if stride not in (1, 2):
        raise ValueError(f"conv2d stride must be 1 or 2, got {stride}")
    if pad < 0:
        raise ValueError(f"conv2d pad must be >= 0, got {pad}")
    batched = x.data.ndim == 4
    xd = x.data if batched else x.data[None]
    b, c, h, w = xd.shape
    if c != ci:
        raise ShapeError(
            f"conv2d channel mismatch: input {x.data.shape} vs kernel {kernel.data.shape}"
        )
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (w + 2 * pad - kw) // stride + 1
    if ho < 1 or wo < 1:
        raise ShapeError(
            f"conv2d output would be empty for input {x.data.shape}, "
            f"kernel {kernel.data.shape}, stride {stride}, pad {pad}"
        )
    padded = np.pad(xd, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    cols = _im2col(padded, kh, kw, stride, ho, wo)
    kmat = kernel.data.reshape(co, ci * kh * kw)
    out = (cols @ kmat.T).reshape(b, ho, wo, co).transpose(0, 3, 1, 2)
    _macs(b * ho * wo * ci * kh * kw * co)
    if not batched:
        out = out[0]

    def bw(g):
        gd = g if batched else g[None]
        g2 = gd.transpose(0, 2, 3, 1).reshape(b * ho * wo, co)
        gk = None
        if kernel.requires_grad:
            # rebuild the patch matrix instead of retaining it: trades one
            # extra copy in backward for much smaller live graphs
            cols_b = _im2col(padded, kh, kw, stride, ho, wo)
            gk = (g2.T @ cols_b).reshape(kernel.data.shape)
        gx = None
        if x.requires_grad:
            dcols = (g2 @ kmat).reshape(b, ho, wo, ci, kh, kw)
            gpad = np.zeros_like(padded)
            for i in range(kh):
                for j in range(kw):
                    gpad[
                        :, :, i : i + stride * ho : stride, j : j + stride * wo : stride
                    ] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
            gx = gpad[:, :, pad : pad + h, pad : pad + w]
            if not batched:
                gx = gx[0]
        return gx, gk

    return _make(out, (x, kernel), bw)


def upsample(x, factor: int):
    """Nearest-neighbor replication of the last two axes by ``factor``."""
    x = _wrap(x)
    if not isinstance(factor, (int, np.integer)) or factor < 1:
        raise ValueError(f"upsample factor must be an integer >= 1, got {factor!r}")
    factor = int(factor)
    if factor == 1:
        return _make(x.data, (x,), lambda g: (g,))
    out = np.repeat(np.repeat(x.data, factor, axis=-2), factor, axis=-1)
    h, w = x.data.shape[-2], x.data.shape[-1]

    def bw(g):
        lead = g.shape[:-2]
        return (g.reshape(*lead, h, factor, w, factor).sum(axis=(-3, -1)),)

    return _make(out, (x,), bw)


# ---------------------------------------------------------------------------
# normalizations, softmax, losses
# ---------------------------------------------------------------------------


def softmax(x, axis: int = -1, exclude=None):
    """Stable softmax along ``axis``.

    ``exclude`` is an optional boolean array (broadcastable to ``x``) marking
    entries that receive exactly zero probability and zero gradient.
    """
    x = _wrap(x)
    d = x.data
    if exclude is not None:
        d = np.where(exclude, -np.inf, d)
    m = np.max(d, axis=axis, keepdims=True)
    if exclude is not None:
        m = np.where(np.isfinite(m), m, 0.0)
    e = np.exp(d - m)
    s = e.sum(axis=axis, keepdims=True)
    if exclude is not None and not np.all(s > 0.0):
        raise ValueError("softmax: a slice had every entry excluded")
    out = e / s

    def bw(g):
        t = (g * out).sum(axis=axis, keepdims=True)
        return ((g - t) * out,)

    return _make(out, (x,), bw)


def standardize(x, eps: float):
    """Zero-mean, unit-variance normalization along the last axis."""
    x = _wrap(x)
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    d = x.data
    mu = d.mean(axis=-1, keepdims=True)
    xc = d - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    y = xc * inv

    def bw(g):
        gm = g.mean(axis=-1, keepdims=True)
        gy = (g * y).mean(axis=-1, keepdims=True)
        return (inv * (g - gm - y * gy),)

    return _make(y, (x,), bw)


def layer_norm(x, gamma, beta, eps: float = 1e-5):
    """Per-row normalization over the last axis followed by an affine map."""
    x, gamma, beta = _wrap(x), _wrap(gamma), _wrap(beta)
    c = x.data.shape[-1]
    if gamma.data.shape != (c,) or beta.data.shape != (c,):
        raise ShapeError(
            f"layer_norm affine shapes {gamma.data.shape}/{beta.data.shape} "
            f"do not match last dim {c}"
        )
    return standardize(x, eps) * gamma + beta


def cross_entropy(logits, targets, mask=None):
    """Mean negative log-softmax of the target class over unmasked positions.

    ``logits`` is [..., D]; ``targets`` an integer array of the leading shape;
    ``mask`` (optional, same shape as ``targets``) selects the positions that
    contribute to the mean.
    """
    logits = _wrap(logits)
    d = logits.data
    nd = d.shape[-1]
    t = np.asarray(targets)
    if t.shape != d.shape[:-1]:
        raise ShapeError(
            f"cross_entropy target shape {t.shape} does not match logits {d.shape}"
        )
    if t.size and ((t < 0).any() or (t >= nd).any()):
        raise ValueError(f"cross_entropy target index out of range [0, {nd})")
    msk = np.ones(t.shape, bool) if mask is None else np.asarray(mask, bool)
    if msk.shape != t.shape:
        raise ShapeError(f"mask shape {msk.shape} does not match targets {t.shape}")
    n = int(msk.sum())
    if n == 0:
        raise ValueError("cross_entropy mask excludes every position")
    m = d.max(axis=-1, keepdims=True)
    z = d - m
    lse = np.log(np.exp(z).sum(axis=-1))
    picked = np.take_along_axis(z, t[..., None], -1)[..., 0]
    loss = ((lse - picked) * msk).sum() / n

    def bw(g):
        p = np.exp(z - lse[..., None])
        w = msk * (float(g) / n)
        gl = p * w[..., None]
        flat = gl.reshape(-1, nd)
        flat[np.arange(flat.shape[0]), t.reshape(-1)] -= w.reshape(-1)
        return (gl,)

    return _make(loss, (logits,), bw)


def nll_from_probs(probs, targets, mask=None):
    """Mean negative log of the target-class probability (inputs already sum to 1)."""
    probs = _wrap(probs)
    p = probs.data
    nd = p.shape[-1]
    t = np.asarray(targets)
    if t.shape != p.shape[:-1]:
        raise ShapeError(
            f"nll target shape {t.shape} does not match probabilities {p.shape}"
        )
    if t.size and ((t < 0).any() or (t >= nd).any()):
        raise ValueError(f"nll target index out of range [0, {nd})")
    msk = np.ones(t.shape, bool) if mask is None else np.asarray(mask, bool)
    n = int(msk.sum())
    if n == 0:
        raise ValueError("nll mask excludes every position")
    picked = np.take_along_axis(p, t[..., None], -1)[..., 0]
    with np.errstate(divide="ignore"):
        loss = -(np.log(picked) * msk).sum() / n

    def bw(g):
        with np.errstate(divide="ignore"):
            gp_at = -(msk * (float(g) / n)) / picked
        gp = np.zeros_like(p)
        np.put_along_axis(gp, t[..., None], gp_at[..., None], -1)
        return (gp,)

    return _make(loss, (probs,), bw)


# ---------------------------------------------------------------------------
# randomness
# ---------------------------------------------------------------------------


def _key_to_int(k) -> int:
    if isinstance(k, (int, np.integer)):
        return int(k)
    if isinstance(k, str):
        return int.from_bytes(hashlib.blake2s(k.encode(), digest_size=8).digest(), "little")
    raise TypeError(f"rng stream key must be int or str, got {type(k).__name__}")


class Rng:
    """Deterministic random stream.

    Identical seed and call sequence produce bit-identical outputs.
    ``derive`` spawns an independent child stream keyed by ints/strings, so
    parallel consumers (e.g. per-sample rendering) stay reproducible.
    """

    def __init__(self, seed: int, _key: tuple = ()):
        self.seed = int(seed)
        self._key = tuple(_key)
        self._gen = np.random.Generator(
            np.random.PCG64(np.random.SeedSequence((self.seed, *self._key)))
        )

    def derive(self, *key) -> "Rng":
        return Rng(self.seed, self._key + tuple(_key_to_int(k) for k in key))

    def normal(self, shape, std: float = 1.0, mean: float = 0.0) -> np.ndarray:
        return self._gen.normal(mean, std, size=shape)

    def uniform(self, low: float, high: float, shape=None) -> np.ndarray:
        return self._gen.uniform(low, high, size=shape)

    def integers(self, low: int, high: int, size=None):
        return self._gen.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def choice_index(self, n: int) -> int:
        return int(self._gen.integers(0, n))


# ---------------------------------------------------------------------------
# parameter containers
# ---------------------------------------------------------------------------


class Module:
    """Minimal parameter container; submodules/parameters are attributes.

    ``named_parameters`` walks attributes (and lists/tuples of them) in
    definition order, which keeps parameter enumeration deterministic for
    optimizers and checkpoints.
    """

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def named_parameters(self):
        out: list[tuple[str, Parameter]] = []
        seen: set[int] = set()
        _collect_params("", self, out, seen)
        return out

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def zero_grad(self):
        for p in self.parameters():
            p.grad = np.zeros_like(p.data)

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        params = dict(self.named_parameters())
        for name in state:
            if name not in params:
                raise KeyError(f"no parameter named '{name}' in this model")
        for name, p in params.items():
            if name not in state:
                raise KeyError(f"missing value for parameter '{name}'")
            arr = np.asarray(state[name], dtype=np.float64)
            if arr.shape != p.data.shape:
                raise ShapeError(
                    f"parameter '{name}' has shape {p.data.shape}, got {arr.shape}"
                )
            p.data = arr.copy()


def _collect_params(prefix, obj, out, seen):
    if isinstance(obj, Parameter):
        if id(obj) not in seen:
            seen.add(id(obj))
            out.append((prefix, obj))
        return
    if isinstance(obj, Module):
        if id(obj) in seen:
            return
        seen.add(id(obj))
        for attr, val in vars(obj).items():
            name = f"{prefix}.{attr}" if prefix else attr
            _collect_params(name, val, out, seen)
        return
    if isinstance(obj, (list, tuple)):
        for i, val in enumerate(obj):
            _collect_params(f"{prefix}.{i}", val, out, seen)


# ---------------------------------------------------------------------------
# finite-difference verification
# ---------------------------------------------------------------------------


def grad_check(f, params, eps: float = 1e-5, coords_per_param=None, rng=None) -> float:
    """Compare autodiff gradients of ``f()`` against central differences.

    ``f`` must be a deterministic zero-argument callable returning a scalar
    Tensor built from the given parameters.  Returns the maximum relative
    error ``|a - n| / max(1, |a|, |n|)`` over the checked coordinates; when
    ``coords_per_param`` is set, that many coordinates per parameter are
    sampled (seeded via ``rng``) instead of sweeping every entry.
    """
    if not (1e-6 <= eps <= 1e-3):
        raise ValueError(f"eps must lie in [1e-6, 1e-3], got {eps}")
    params = list(params)
    for p in params:
        p.grad = np.zeros_like(p.data)
    f().backward()
    analytic = [p.grad.copy() for p in params]
    if coords_per_param is not None and rng is None:
        rng = Rng(0)
    max_rel = 0.0
    for p, a in zip(params, analytic):
        flat = p.data.reshape(-1)
        aflat = a.reshape(-1)
        if coords_per_param is None or coords_per_param >= flat.size:
            idxs = range(flat.size)
        else:
            idxs = sorted(
                set(int(i) for i in rng.integers(0, flat.size, coords_per_param))
            )
        for i in idxs:
            v = flat[i]
            with no_grad():
                flat[i] = v + eps
                f1 = float(f().data)
                flat[i] = v - eps
                f2 = float(f().data)
            flat[i] = v
            numeric = (f1 - f2) / (2.0 * eps)
            rel = abs(aflat[i] - numeric) / max(1.0, abs(aflat[i]), abs(numeric))
            max_rel = max(max_rel, rel)
    return max_rel
