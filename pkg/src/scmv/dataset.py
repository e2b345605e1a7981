"""Two-view datasets: container, TSV reader/writer, synthetic generator, splits.

Row ``i`` of ``x1`` and row ``i`` of ``x2`` describe the same document in
two views.  The first ``l`` rows carry labels in {-1, +1}; the remaining rows
are unlabeled but still take part in co-regularization.

Each row also carries an origin tag: ``"o"`` when the view-2 features come
from an original target-language document, ``"t"`` when they were produced by
translation.  The SCMV trainer ignores the tag; the TB/TSB baselines use it to
pick their training rows.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import DatasetFormatError, ValidationError

TSV_MAGIC = "#scmv-tsv"
TSV_VERSION = "v1"

ORIGINAL = "o"
TRANSLATED = "t"


def _frozen(a, dtype=np.float64):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TwoViewDataset:
    """Parallel view matrices with a labeled prefix.

    Arrays are copied and made read-only on construction.
    """

    x1: np.ndarray
    x2: np.ndarray
    y: np.ndarray
    origin: Optional[np.ndarray] = None
    vocab: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        x1 = _frozen(self.x1)
        x2 = _frozen(self.x2)
        y = _frozen(self.y).reshape(-1)
        if x1.ndim != 2 or x2.ndim != 2:
            raise ValidationError("x1 and x2 must be 2-D")
        if x1.shape[0] != x2.shape[0]:
            raise ValidationError(
                f"views have different row counts: {x1.shape[0]} vs {x2.shape[0]}"
            )
        n = x1.shape[0]
        if not 1 <= y.shape[0] <= n:
            raise ValidationError(f"need 1 <= l <= n, got l={y.shape[0]}, n={n}")
        if not np.all((y == 1.0) | (y == -1.0)):
            raise ValidationError("labels must be exactly -1 or +1")
        if not (np.all(np.isfinite(x1)) and np.all(np.isfinite(x2))):
            raise ValidationError("feature values must be finite")
        if self.origin is None:
            origin = np.full(n, ORIGINAL)
        else:
            origin = np.asarray(self.origin, dtype="<U1")
            if origin.shape != (n,):
                raise ValidationError("origin must have one tag per row")
            if not np.all((origin == ORIGINAL) | (origin == TRANSLATED)):
                raise ValidationError("origin tags must be 'o' or 't'")
        origin = _frozen(origin, dtype="<U1")
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "origin", origin)

    @property
    def n(self) -> int:
        return self.x1.shape[0]

    @property
    def l(self) -> int:  # noqa: E743
        return self.y.shape[0]

    @property
    def d1(self) -> int:
        return self.x1.shape[1]

    @property
    def d2(self) -> int:
        return self.x2.shape[1]

    @property
    def x1_labeled(self) -> np.ndarray:
        return self.x1[: self.l]

    @property
    def x2_labeled(self) -> np.ndarray:
        return self.x2[: self.l]

    def labeled_rows(self, origin: Optional[str] = None) -> np.ndarray:
        """Indices of labeled rows, optionally restricted to one origin tag."""
        idx = np.arange(self.l)
        if origin is None:
            return idx
        return idx[self.origin[: self.l] == origin]

    def equals(self, other: "TwoViewDataset") -> bool:
        return (
            np.array_equal(self.x1, other.x1)
            and np.array_equal(self.x2, other.x2)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.origin, other.origin)
        )


class LabeledRows(NamedTuple):
    """Held-out rows with both views and their labels."""

    x1: np.ndarray
    x2: np.ndarray
    y: np.ndarray
    origin: np.ndarray

    def __len__(self):
        return self.y.shape[0]


# --------------------------------------------------------------------------
# TSV reader / writer


def _parse_label(tok, lineno):
    try:
        val = int(tok)
    except ValueError:
        raise DatasetFormatError(f"label {tok!r} is not an integer", lineno) from None
    if val not in (-1, 0, 1):
        raise DatasetFormatError(f"label {tok!r} not in {{-1, 0, +1}}", lineno)
    return val


def _parse_view(text, d, lineno, which):
    row = np.zeros(d)
    seen = set()
    for pair in text.split():
        idx_s, sep, val_s = pair.partition(":")
        if not sep:
            raise DatasetFormatError(f"view {which}: expected index:value, got {pair!r}", lineno)
        try:
            idx = int(idx_s)
            val = float(val_s)
        except ValueError:
            raise DatasetFormatError(f"view {which}: non-numeric entry {pair!r}", lineno) from None
        if not 0 <= idx < d:
            raise DatasetFormatError(f"view {which}: index {idx} outside [0, {d})", lineno)
        if idx in seen:
            raise DatasetFormatError(f"view {which}: duplicate index {idx}", lineno)
        if not math.isfinite(val):
            raise DatasetFormatError(f"view {which}: non-finite value {val_s!r}", lineno)
        seen.add(idx)
        row[idx] = val
    return row


def _parse_header(line):
    parts = line.split()
    if len(parts) != 4 or parts[0] != TSV_MAGIC:
        raise DatasetFormatError(f"expected header '{TSV_MAGIC} v1 d1=<int> d2=<int>'", 1)
    if parts[1] != TSV_VERSION:
        raise DatasetFormatError(
            f"unsupported format version {parts[1]!r} (expected {TSV_VERSION!r})", 1
        )
    dims = {}
    for p in parts[2:]:
        key, _, val = p.partition("=")
        try:
            dims[key] = int(val)
        except ValueError:
            raise DatasetFormatError(f"bad dimension field {p!r}", 1) from None
    if set(dims) != {"d1", "d2"} or dims["d1"] < 1 or dims["d2"] < 1:
        raise DatasetFormatError("header must declare positive d1= and d2=", 1)
    return dims["d1"], dims["d2"]


def read_tsv(path):
    """Parse a two-view TSV file into (labels, x1, x2, origin) in file order.

    Labels of 0 mark unlabeled rows.  Used by :func:`load_dataset` and by the
    CLI when unlabeled rows must be kept in place (prediction).
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if not lines or not lines[0].strip():
        raise DatasetFormatError("empty file", 1)
    d1, d2 = _parse_header(lines[0])
    labels, rows1, rows2, origin = [], [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) not in (3, 4):
            raise DatasetFormatError(f"expected 3 or 4 tab-separated columns, got {len(cols)}", lineno)
        labels.append(_parse_label(cols[0].strip(), lineno))
        rows1.append(_parse_view(cols[1], d1, lineno, 1))
        rows2.append(_parse_view(cols[2], d2, lineno, 2))
        tag = cols[3].strip() if len(cols) == 4 else ORIGINAL
        if tag not in (ORIGINAL, TRANSLATED):
            raise DatasetFormatError(f"origin tag {tag!r} not in {{o, t}}", lineno)
        origin.append(tag)
    x1 = np.array(rows1).reshape(len(rows1), d1)
    x2 = np.array(rows2).reshape(len(rows2), d2)
    return np.array(labels, dtype=int), x1, x2, np.array(origin, dtype="<U1")


def load_dataset(path) -> TwoViewDataset:
    """Load a two-view TSV file; labeled lines are moved (stably) to the front."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"dataset file not found: {path}")
    labels, x1, x2, origin = read_tsv(path)
    labeled = np.flatnonzero(labels != 0)
    if labeled.size == 0:
        raise DatasetFormatError("no labeled rows")
    order = np.concatenate([labeled, np.flatnonzero(labels == 0)])
    return TwoViewDataset(
        x1=x1[order], x2=x2[order], y=labels[labeled].astype(float), origin=origin[order]
    )


def _format_view(row):
    nz = np.flatnonzero(row)
    return " ".join(f"{i}:{float(row[i])!r}" for i in nz)


def format_label(v) -> str:
    v = int(v)
    return "+1" if v > 0 else ("-1" if v < 0 else "0")


def write_tsv(path, labels, x1, x2, origin=None):
    """Write rows in the given order; ``labels`` uses 0 for unlabeled rows."""
    d1, d2 = x1.shape[1], x2.shape[1]
    with_origin = origin is not None and bool(np.any(np.asarray(origin) != ORIGINAL))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{TSV_MAGIC} {TSV_VERSION} d1={d1} d2={d2}\n")
        for i in range(x1.shape[0]):
            cols = [format_label(labels[i]), _format_view(x1[i]), _format_view(x2[i])]
            if with_origin:
                cols.append(str(origin[i]))
            fh.write("\t".join(cols) + "\n")


def save_dataset(ds: TwoViewDataset, path):
    labels = np.zeros(ds.n, dtype=int)
    labels[: ds.l] = ds.y.astype(int)
    write_tsv(path, labels, ds.x1, ds.x2, ds.origin)


# --------------------------------------------------------------------------
# Synthetic data


@dataclass(frozen=True)
class SynthConfig:
    n: int = 800
    l: int = 100  # noqa: E741
    d1: int = 40
    d2: int = 40
    m_true: int = 5
    noise_sigma: float = 0.5
    seed: int = 0
    # labeled rows tagged as original target documents; the rest are "t"
    l_target: Optional[int] = None

    def validate(self):
        if min(self.n, self.l, self.d1, self.d2, self.m_true) < 1:
            raise ValidationError("n, l, d1, d2 and m_true must be positive")
        if self.l > self.n:
            raise ValidationError(f"l={self.l} exceeds n={self.n}")
        if self.m_true > min(self.d1, self.d2):
            raise ValidationError(f"m_true={self.m_true} exceeds min(d1, d2)")
        if self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be non-negative")
        if self.seed < 0 or self.seed >= 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if self.l_target is not None and not 0 <= self.l_target <= self.l:
            raise ValidationError("l_target must lie in [0, l]")


def _row_orthonormal(rng, m, d):
    q, r = np.linalg.qr(rng.standard_normal((d, m)))
    q *= np.sign(np.diag(r))
    return q.T


class SynthParts(NamedTuple):
    latent: np.ndarray
    map1: np.ndarray
    map2: np.ndarray
    direction: np.ndarray
    dataset: TwoViewDataset


def synth_parts(cfg: SynthConfig) -> SynthParts:
    """Generate a synthetic dataset and return it with its latent factors."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    u = rng.standard_normal((cfg.n, cfg.m_true))
    a1 = _row_orthonormal(rng, cfg.m_true, cfg.d1)
    a2 = _row_orthonormal(rng, cfg.m_true, cfg.d2)
    x1 = u @ a1 + cfg.noise_sigma * rng.standard_normal((cfg.n, cfg.d1))
    x2 = u @ a2 + cfg.noise_sigma * rng.standard_normal((cfg.n, cfg.d2))
    for _ in range(100):
        v = rng.standard_normal(cfg.m_true)
        s = u[: cfg.l] @ v
        if np.any(s == 0.0):
            continue
        y = np.sign(s)
        if np.any(y > 0) and np.any(y < 0):
            break
    else:
        raise ValidationError("synthetic labels stayed single-class after 100 redraws")
    origin = np.full(cfg.n, ORIGINAL)
    if cfg.l_target is not None:
        origin[cfg.l_target : cfg.l] = TRANSLATED
    ds = TwoViewDataset(x1=x1, x2=x2, y=y, origin=origin)
    return SynthParts(u, a1, a2, v, ds)


def synth_generate(cfg: SynthConfig) -> TwoViewDataset:
    return synth_parts(cfg).dataset


# --------------------------------------------------------------------------
# Splits


def split_train_test(ds: TwoViewDataset, test_count: int, seed) -> tuple[TwoViewDataset, LabeledRows]:
    """Hold out ``test_count`` labeled rows chosen by ``seed``.

    The training set keeps the remaining labeled rows (in their original
    order) followed by every unlabeled row.
    """
    if test_count < 0 or test_count >= ds.l:
        raise ValidationError(f"test_count must satisfy 0 <= test_count < l={ds.l}, got {test_count}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(ds.l)
    test_idx = np.sort(perm[:test_count])
    keep = np.ones(ds.n, dtype=bool)
    keep[test_idx] = False
    train = TwoViewDataset(
        x1=ds.x1[keep],
        x2=ds.x2[keep],
        y=ds.y[np.sort(perm[test_count:])],
        origin=ds.origin[keep],
        vocab=ds.vocab,
    )
    test = LabeledRows(
        x1=ds.x1[test_idx].copy(),
        x2=ds.x2[test_idx].copy(),
        y=ds.y[test_idx].copy(),
        origin=ds.origin[test_idx].copy(),
    )
    return train, test
