"""Synthetic degraded-text dataset: rendering, on-disk layout, loading.

A dataset directory holds one binary PPM (P6, maxval 255) per sample plus a
``manifest.tsv`` (filename, label, severity, seed) and an optional
``manifest.sha`` with sha256 checksums.  Rendering is fully deterministic:
sample ``i`` of a dataset seeded ``s`` draws from its own stream derived from
``(s, i)``, so parallel and serial generation produce identical bytes.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import FormatError
from .glyphs import GLYPH_COLS, GLYPH_ROWS, GLYPHS, WORDS
from .tensor import Rng

_INK = 0.08
_BACKGROUND = 0.92


@dataclass(frozen=True)
class Vocab:
    """Recognized characters plus the end-of-sequence class.

    Padding positions reuse the end class and are masked out of the loss, so
    the class count is len(chars) + 1.
    """

    chars: str = "abcdefghijklmnopqrstuvwxyz0123456789"

    def __post_init__(self):
        if len(set(self.chars)) != len(self.chars):
            raise ValueError("vocab characters must be unique")
        if not all(c.isalnum() and c == c.lower() for c in self.chars):
            raise ValueError("vocab must be lowercase alphanumeric")

    @property
    def end_index(self) -> int:
        return len(self.chars)

    @property
    def n_classes(self) -> int:
        return len(self.chars) + 1

    def index(self, ch: str) -> int:
        i = self.chars.find(ch)
        if i < 0:
            raise ValueError(f"character {ch!r} is not in the vocabulary")
        return i

    @staticmethod
    def normalize(text: str) -> str:
        """Lowercase and keep alphanumerics only (the scoring projection)."""
        return "".join(c for c in text.lower() if c.isalnum())


DEFAULT_VOCAB = Vocab()


class GlyphAtlas:
    """Bitmap glyphs for every vocab character, as boolean arrays."""

    def __init__(self, vocab: Vocab = DEFAULT_VOCAB):
        self.vocab = vocab
        self._bitmaps = {}
        for ch in vocab.chars:
            if ch not in GLYPHS:
                raise ValueError(f"no committed glyph for character {ch!r}")
            rows = GLYPHS[ch]
            if len(rows) != GLYPH_ROWS or any(len(r) != GLYPH_COLS for r in rows):
                raise ValueError(f"glyph for {ch!r} is not {GLYPH_ROWS}x{GLYPH_COLS}")
            self._bitmaps[ch] = np.array(
                [[cell == "#" for cell in row] for row in rows], dtype=bool
            )

    def bitmap(self, ch: str) -> np.ndarray:
        return self._bitmaps[ch]


_DEFAULT_ATLAS = GlyphAtlas()


@dataclass
class RenderConfig:
    height: int = 16
    width: int = 64
    channels: int = 3
    severity: float = 0.0
    ref_len: int = 7  # glyph pitch is fixed for this length, text left-aligned

    def __post_init__(self):
        if self.channels != 3:
            raise ValueError("only 3-channel renders are supported")
        if not 0.0 <= self.severity <= 1.0:
            raise ValueError(f"severity must lie in [0, 1], got {self.severity}")
        if self.height < 8 or self.width < 8:
            raise ValueError("image must be at least 8x8")
        if self.ref_len < 1:
            raise ValueError("ref_len must be >= 1")


@dataclass
class Sample:
    image: np.ndarray  # [3, h, w] float64 in [0, 1]
    text: str
    severity: float
    seed: int


def _scale_bitmap(bitmap: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    rows = np.minimum((np.arange(out_h) * GLYPH_ROWS) // out_h, GLYPH_ROWS - 1)
    cols = np.minimum((np.arange(out_w) * GLYPH_COLS) // out_w, GLYPH_COLS - 1)
    return bitmap[np.ix_(rows, cols)]


def _box_blur(img: np.ndarray, radius: int) -> np.ndarray:
    if radius < 1:
        return img
    k = 2 * radius + 1
    padded = np.pad(img, ((radius, radius), (radius, radius)), mode="edge")
    win = np.lib.stride_tricks.sliding_window_view(padded, (k, k))
    return win.mean(axis=(-1, -2))


def render(text: str, cfg: RenderConfig, rng: Rng, atlas: GlyphAtlas | None = None) -> Sample:
    """Rasterize ``text`` dark-on-light and corrupt it per ``cfg.severity``.

    Corruption steps in fixed order: per-glyph horizontal jitter, occluding
    rectangles, box blur, Gaussian noise, brightness shift.  Severity zero
    renders are exact functions of the text alone.
    """
    atlas = atlas or _DEFAULT_ATLAS
    if not text:
        raise ValueError("cannot render an empty label")
    for ch in text:
        atlas.vocab.index(ch)
    h, w = cfg.height, cfg.width
    sev = cfg.severity
    img = np.full((h, w), _BACKGROUND)

    # fixed pitch for ref_len characters, left-aligned: character order k
    # always lands near the same column regardless of the label's length
    n = len(text)
    scale = min((h - 2) / GLYPH_ROWS, (w - 2) / (6.0 * max(cfg.ref_len, n) - 1.0))
    glyph_h = max(int(round(GLYPH_ROWS * scale)), GLYPH_ROWS // 2 + 1)
    glyph_w = max(int(round(GLYPH_COLS * scale)), GLYPH_COLS // 2 + 1)
    advance = glyph_w + max(int(round(scale)), 1)
    x0 = 1
    y0 = (h - glyph_h) // 2
    for i, ch in enumerate(text):
        x = x0 + i * advance
        if sev > 0:
            x += int(round(rng.uniform(-1.0, 1.0) * sev * 1.5 * scale))
        x = min(max(x, 0), w - glyph_w)
        bitmap = _scale_bitmap(atlas.bitmap(ch), glyph_h, glyph_w)
        region = img[y0 : y0 + glyph_h, x : x + glyph_w]
        region[bitmap] = _INK

    if sev > 0:
        for _ in range(int(round(3 * sev))):
            rw = int(rng.integers(2, max(w // 10, 3) + 1))
            rh = int(rng.integers(2, max(h // 3, 3) + 1))
            rx = int(rng.integers(0, w - rw + 1))
            ry = int(rng.integers(0, h - rh + 1))
            img[ry : ry + rh, rx : rx + rw] = rng.uniform(0.0, 1.0)
        img = _box_blur(img, int(round(1.2 * sev)))
        img = img + rng.normal(img.shape) * (0.25 * sev)
        img = img + rng.uniform(-0.25, 0.25) * sev
    img = np.clip(img, 0.0, 1.0)
    image = np.broadcast_to(img, (3, h, w)).copy()
    return Sample(image=image, text=text, severity=sev, seed=rng.seed)


# ---------------------------------------------------------------------------
# PPM + manifest input/output
# ---------------------------------------------------------------------------


def write_ppm(path: Path, image: np.ndarray) -> None:
    arr = np.clip(np.round(image * 255.0), 0, 255).astype(np.uint8)
    _, h, w = arr.shape
    header = f"P6\n{w} {h}\n255\n".encode()
    path.write_bytes(header + arr.transpose(1, 2, 0).tobytes())


def read_ppm(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if not raw.startswith(b"P6"):
        raise FormatError(f"{path}: not a binary PPM (P6) file")
    fields: list[bytes] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PPM header")
        fields.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        w, h, maxval = (int(f) for f in fields)
    except ValueError:
        raise FormatError(f"{path}: malformed PPM header") from None
    if maxval != 255:
        raise FormatError(f"{path}: unsupported maxval {maxval}")
    body = raw[pos:]
    if len(body) != w * h * 3:
        raise FormatError(
            f"{path}: truncated image data ({len(body)} bytes for {w}x{h})"
        )
    arr = np.frombuffer(body, dtype=np.uint8).reshape(h, w, 3)
    return arr.transpose(2, 0, 1).astype(np.float64) / 255.0


def sample_seed(dataset_seed: int, index: int) -> int:
    """Per-sample integer seed; stable across platforms and processes."""
    return int(
        np.random.SeedSequence((int(dataset_seed), int(index))).generate_state(
            1, np.uint64
        )[0]
    )


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def generate_dataset(
    out_dir,
    n: int,
    *,
    seed: int = 0,
    min_len: int = 3,
    max_len: int = 7,
    severities=(0.3, 0.6, 0.9),
    word_fraction: float = 0.7,
    split: str | None = None,
    render_cfg: RenderConfig | None = None,
    vocab: Vocab = DEFAULT_VOCAB,
    write_checksums: bool = True,
) -> list[dict]:
    """Render ``n`` samples into ``out_dir`` and return the manifest rows.

    Labels are drawn from the committed word list with probability
    ``word_fraction`` (fully random strings otherwise, so character statistics
    stay learnable but not trivial).  ``split`` of ``"train"``/``"test"``
    restricts words to disjoint halves of the list.
    """
    if n < 1:
        raise ValueError("dataset size must be >= 1")
    if not 1 <= min_len <= max_len:
        raise ValueError(f"bad length range [{min_len}, {max_len}]")
    if not severities:
        raise ValueError("severities must be non-empty")
    cfg = render_cfg or RenderConfig()
    atlas = GlyphAtlas(vocab)
    words = [w for w in WORDS if min_len <= len(w) <= max_len]
    if split == "train":
        words = words[0::2]
    elif split == "test":
        words = words[1::2]
    elif split is not None:
        raise ValueError(f"split must be 'train', 'test' or None, got {split!r}")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(n):
        s_seed = sample_seed(seed, i)
        rng = Rng(s_seed)
        if words and rng.uniform(0.0, 1.0) < word_fraction:
            label = words[rng.choice_index(len(words))]
        else:
            length = int(rng.integers(min_len, max_len + 1))
            label = "".join(
                vocab.chars[rng.choice_index(len(vocab.chars))] for _ in range(length)
            )
        severity = float(severities[rng.choice_index(len(severities))])
        sample = render(label, replace(cfg, severity=severity), rng, atlas)
        filename = f"img_{i:05d}.ppm"
        write_ppm(out / filename, sample.image)
        rows.append(
            {"filename": filename, "label": label, "severity": severity, "seed": s_seed}
        )

    manifest = out / "manifest.tsv"
    lines = ["filename\tlabel\tseverity\tseed"]
    for r in rows:
        lines.append(f"{r['filename']}\t{r['label']}\t{r['severity']!r}\t{r['seed']}")
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    if write_checksums:
        sha_lines = [f"{_sha256(out / r['filename'])}\t{r['filename']}" for r in rows]
        sha_lines.append(f"{_sha256(manifest)}\tmanifest.tsv")
        (out / "manifest.sha").write_text(
            "\n".join(sha_lines) + "\n", encoding="utf-8", newline="\n"
        )
    return rows


def load_dataset(path) -> list[Sample]:
    """Read a dataset directory back into samples, in manifest order."""
    root = Path(path)
    manifest = root / "manifest.tsv"
    if not manifest.is_file():
        raise FormatError(f"{manifest}: manifest not found")
    sha_file = root / "manifest.sha"
    checksums = {}
    if sha_file.is_file():
        for line in sha_file.read_text(encoding="utf-8").splitlines():
            if line.strip():
                digest, name = line.split("\t")
                checksums[name] = digest
        if "manifest.tsv" in checksums:
            if _sha256(manifest) != checksums["manifest.tsv"]:
                raise FormatError(f"{manifest}: checksum mismatch")
    lines = manifest.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].split("\t") != ["filename", "label", "severity", "seed"]:
        raise FormatError(f"{manifest}: unexpected manifest header")
    samples = []
    for line in lines[1:]:
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise FormatError(f"{manifest}: malformed row {line!r}")
        filename, label, severity, seed = parts
        img_path = root / filename
        if not img_path.is_file():
            raise FormatError(f"{img_path}: image listed in manifest is missing")
        if filename in checksums and _sha256(img_path) != checksums[filename]:
            raise FormatError(f"{img_path}: checksum mismatch")
        image = read_ppm(img_path)
        samples.append(
            Sample(
                image=image,
                text=label,
                severity=float(severity),
                seed=int(seed),
            )
        )
    return samples
