"""Multi-task training: per-iteration supervision, Adam schedule, evaluation.

The total objective sums cross-entropy over every encoder pass plus, when the
language module is attached, the refined and fused distributions of every
(pass, refinement) pair — N*(1+2M) unit-weighted terms.  Dropping the
intermediate passes (supervising only the last) is the ablation switch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import DEFAULT_VOCAB, Sample, Vocab
from .decoder import greedy_text
from .errors import TrainingDiverged
from .tensor import (
    Module,
    Parameter,
    Rng,
    Tensor,
    cross_entropy,
    nll_from_probs,
    no_grad,
    softmax,
)


@dataclass
class TrainConfig:
    batch_size: int = 32
    lr_initial: float = 1e-4
    lr_after_decay: float = 1e-5
    decay_epoch: int = 6
    total_epochs: int = 8
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    grad_clip: float | None = 5.0
    intermediate_supervision: bool = True

    def __post_init__(self):
        if self.lr_after_decay >= self.lr_initial:
            raise ValueError("lr_after_decay must be < lr_initial")
        if self.decay_epoch >= self.total_epochs:
            raise ValueError("decay_epoch must be < total_epochs")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.grad_clip is not None and self.grad_clip <= 0:
            raise ValueError("grad_clip must be positive (or null to disable)")

    def lr_at(self, epoch: int) -> float:
        return self.lr_initial if epoch < self.decay_epoch else self.lr_after_decay


def encode_labels(text: str, vocab: Vocab, max_len: int):
    """Class indices plus supervision mask: characters, end token, padding.

    The mask covers the characters and the end token; padding positions share
    the end class but never contribute to the loss.
    """
    if len(text) > max_len - 1:
        raise ValueError(
            f"label {text!r} is longer than {max_len - 1} characters"
        )
    ids = np.full(max_len, vocab.end_index, dtype=np.int64)
    for i, ch in enumerate(text):
        ids[i] = vocab.index(ch)
    mask = np.zeros(max_len, dtype=bool)
    mask[: len(text) + 1] = True
    return ids, mask


def batch_labels(texts, vocab: Vocab, max_len: int):
    ids = np.empty((len(texts), max_len), dtype=np.int64)
    mask = np.empty((len(texts), max_len), dtype=bool)
    for i, t in enumerate(texts):
        ids[i], mask[i] = encode_labels(t, vocab, max_len)
    return ids, mask


@dataclass
class LossBreakdown:
    """Named scalar terms plus their unit-weighted sum (still on the graph)."""

    terms: dict[str, Tensor]
    total: Tensor = field(init=False)

    def __post_init__(self):
        if not self.terms:
            raise ValueError("a loss needs at least one term")
        it = iter(self.terms.values())
        total = next(it)
        for t in it:
            total = total + t
        self.total = total

    def values(self) -> dict[str, float]:
        return {k: v.item() for k, v in self.terms.items()}


def loss_vm(logits_per_iter, targets, mask=None, intermediate: bool = True) -> LossBreakdown:
    """Per-pass cross-entropy, summed with unit weights."""
    n = len(logits_per_iter)
    if n < 1:
        raise ValueError("need logits for at least one pass")
    terms = {}
    for i, logits in enumerate(logits_per_iter, start=1):
        if not intermediate and i != n:
            continue
        terms[f"Lv_{i}"] = cross_entropy(logits, targets, mask)
    return LossBreakdown(terms)


def loss_full(
    vm_logits,
    lm_dists,
    fused_dists,
    targets,
    mask=None,
    intermediate: bool = True,
) -> LossBreakdown:
    """The complete objective over every pass and refinement.

    Vision terms score logits; language/fusion terms score the emitted
    distributions through their log.  With ``intermediate`` off, only the
    last pass's terms (all three families) survive.
    """
    n = len(vm_logits)
    if n < 1:
        raise ValueError("need logits for at least one pass")
    if len(lm_dists) != n or len(fused_dists) != n:
        raise ValueError(
            f"refinements for {len(lm_dists)}/{len(fused_dists)} passes, expected {n}"
        )
    m = len(lm_dists[0])
    terms = {}
    for i in range(1, n + 1):
        if len(lm_dists[i - 1]) != m or len(fused_dists[i - 1]) != m:
            raise ValueError(f"pass {i} is missing refinement terms")
        if not intermediate and i != n:
            continue
        terms[f"Lv_{i}"] = cross_entropy(vm_logits[i - 1], targets, mask)
        for j in range(1, m + 1):
            terms[f"Ll_{i}_{j}"] = nll_from_probs(lm_dists[i - 1][j - 1], targets, mask)
            terms[f"Lf_{i}_{j}"] = nll_from_probs(fused_dists[i - 1][j - 1], targets, mask)
    return LossBreakdown(terms)


class Adam:
    """Adam with bias correction; step size may change per step."""

    def __init__(self, params, lr=1e-4, betas=(0.9, 0.999), eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self, lr: float | None = None) -> None:
        if lr is None:
            lr = self.lr
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            p.data = p.data - lr * (m / c1) / (np.sqrt(v / c2) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = np.zeros_like(p.data)


def clip_grad_norm(params, max_norm: float) -> float:
    """Scale gradients so their global L2 norm is at most ``max_norm``."""
    total = math.sqrt(sum(float((p.grad * p.grad).sum()) for p in params))
    if total > max_norm:
        scale = max_norm / total
        for p in params:
            p.grad = p.grad * scale
    return total


def _batches(order: np.ndarray, size: int):
    for start in range(0, len(order), size):
        yield order[start : start + size]


def _fmt(x: float) -> str:
    return repr(float(x))


def train(
    model,
    samples: list[Sample],
    cfg: TrainConfig,
    metrics_out=None,
    on_epoch=None,
) -> list[dict]:
    """Seeded epoch loop; returns per-epoch summaries.

    ``metrics_out`` (a writable text stream) receives one tab-separated line
    per step: step, epoch, lr, total loss, then every named term.  A
    non-finite loss aborts with the offending term named.
    """
    vocab = model.vocab
    max_len = model.cfg.max_len
    targets, masks = batch_labels([s.text for s in samples], vocab, max_len)
    images = np.stack([s.image for s in samples])
    opt = Adam(
        model.parameters(),
        lr=cfg.lr_initial,
        betas=(cfg.adam_beta1, cfg.adam_beta2),
        eps=cfg.adam_eps,
    )
    rng = Rng(cfg.seed)
    step = 0
    header_written = False
    history = []
    for epoch in range(cfg.total_epochs):
        lr = cfg.lr_at(epoch)
        order = rng.derive("shuffle", epoch).permutation(len(samples))
        epoch_loss = 0.0
        n_batches = 0
        for batch in _batches(order, cfg.batch_size):
            x = Tensor(images[batch])
            t = targets[batch]
            msk = masks[batch]
            vm_logits, lm_dists, fused_dists = model.forward_train(x)
            if model.lm is not None:
                breakdown = loss_full(
                    vm_logits, lm_dists, fused_dists, t, msk,
                    intermediate=cfg.intermediate_supervision,
                )
            else:
                breakdown = loss_vm(
                    vm_logits, t, msk, intermediate=cfg.intermediate_supervision
                )
            for name, term in breakdown.terms.items():
                if not math.isfinite(term.item()):
                    raise TrainingDiverged(
                        f"non-finite loss in term {name} at step {step}"
                    )
            model.zero_grad()
            breakdown.total.backward()
            if cfg.grad_clip is not None:
                clip_grad_norm(opt.params, cfg.grad_clip)
            opt.step(lr)
            if metrics_out is not None:
                if not header_written:
                    names = "\t".join(breakdown.terms.keys())
                    metrics_out.write(f"step\tepoch\tlr\ttotal\t{names}\n")
                    header_written = True
                vals = "\t".join(_fmt(v) for v in breakdown.values().values())
                metrics_out.write(
                    f"{step}\t{epoch}\t{_fmt(lr)}\t{_fmt(breakdown.total.item())}\t{vals}\n"
                )
            epoch_loss += breakdown.total.item()
            n_batches += 1
            step += 1
        summary = {
            "epoch": epoch,
            "lr": lr,
            "mean_loss": epoch_loss / max(n_batches, 1),
        }
        history.append(summary)
        if on_epoch is not None:
            on_epoch(summary)
    return history


def trace_samples(model, samples: list[Sample], batch_size: int = 64) -> list[dict]:
    """Decode every encoder pass and every fused refinement per sample.

    Inference normally skips the intermediate decodes; this runs them anyway
    so refinement behavior can be inspected pass by pass.
    """
    vocab = model.vocab
    rows: list[dict] = []
    for start in range(0, len(samples), batch_size):
        chunk = samples[start : start + batch_size]
        x = Tensor(np.stack([s.image for s in chunk]))
        with no_grad():
            feats = model.encoder(x)
            per_iter_logits = [model.decoder.decode(s) for s in feats]
            fused_dists = []
            if model.lm is not None:
                _, fused_dists = model.lm.refine(
                    softmax(per_iter_logits[-1], axis=-1)
                )
        for b, s in enumerate(chunk):
            vm_texts = [greedy_text(lg.data[b], vocab) for lg in per_iter_logits]
            fused_texts = [greedy_text(d.data[b], vocab) for d in fused_dists]
            final = fused_texts[-1] if fused_texts else vm_texts[-1]
            rows.append(
                {
                    "vm": vm_texts,
                    "fused": fused_texts,
                    "final": final,
                    "truth": s.text,
                }
            )
    return rows


@dataclass
class EvalReport:
    n_samples: int
    n_correct: int
    per_severity: dict[float, tuple[int, int]]  # severity -> (n, correct)
    per_sample: list[dict] | None = None
    per_iteration: list[float] | None = None

    @property
    def accuracy(self) -> float:
        return self.n_correct / self.n_samples if self.n_samples else 0.0

    def severity_accuracy(self, severity: float) -> float:
        n, c = self.per_severity[severity]
        return c / n if n else 0.0


def evaluate(
    model,
    samples: list[Sample],
    mode: str = "vm-only",
    batch_size: int = 64,
    collect_per_sample: bool = False,
    per_iteration: bool = False,
) -> EvalReport:
    """Lexicon-free scoring: lowercase alphanumeric exact match.

    ``vm-only`` decodes just the last encoder pass; ``full`` additionally
    refines that prediction with the language module and scores the final
    fusion.  Per-pass accuracies are computed only on request (they require
    decoding intermediate passes, which inference otherwise skips).
    """
    if mode not in ("vm-only", "full"):
        raise ValueError(f"mode must be 'vm-only' or 'full', got {mode!r}")
    if mode == "full" and model.lm is None:
        raise ValueError("model has no language module; use mode='vm-only'")
    vocab = model.vocab
    n_correct = 0
    per_sev: dict[float, list[int]] = {}
    per_sample = [] if collect_per_sample else None
    iter_correct = None
    for start in range(0, len(samples), batch_size):
        chunk = samples[start : start + batch_size]
        x = Tensor(np.stack([s.image for s in chunk]))
        with no_grad():
            if per_iteration:
                feats = model.encoder(x)
                all_logits = [model.decoder.decode(s) for s in feats]
                logits = all_logits[-1]
                if iter_correct is None:
                    iter_correct = [0] * len(all_logits)
                for i, lg in enumerate(all_logits):
                    for b, s in enumerate(chunk):
                        pred = greedy_text(lg.data[b], vocab)
                        if vocab.normalize(pred) == vocab.normalize(s.text):
                            iter_correct[i] += 1
            else:
                logits = model.predict_vm(x)
            if mode == "full":
                _, final = model.lm.refine(softmax(logits, axis=-1))
                final = final[-1]
                scored = final.data
            else:
                scored = logits.data
        for b, s in enumerate(chunk):
            pred = greedy_text(scored[b], vocab)
            ok = vocab.normalize(pred) == vocab.normalize(s.text)
            n_correct += int(ok)
            sev = per_sev.setdefault(s.severity, [0, 0])
            sev[0] += 1
            sev[1] += int(ok)
            if per_sample is not None:
                per_sample.append(
                    {
                        "label": s.text,
                        "prediction": pred,
                        "correct": ok,
                        "severity": s.severity,
                    }
                )
    return EvalReport(
        n_samples=len(samples),
        n_correct=n_correct,
        per_severity={k: (v[0], v[1]) for k, v in sorted(per_sev.items())},
        per_sample=per_sample,
        per_iteration=(
            [c / len(samples) for c in iter_correct] if iter_correct else None
        ),
    )
