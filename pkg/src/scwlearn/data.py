"""Datasets: LIBSVM text I/O, label normalisation, a synthetic generator, and seeded permutations.

All randomness goes through ``numpy.random.Generator(PCG64(seed))``, which
produces the same stream on every platform for a given seed.
"""

from __future__ import annotations

import gzip
import hashlib
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .core import ConfigError, Example, InputError


class ParseError(InputError):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class EmptyDatasetError(InputError):
    pass


class MappingError(InputError):
    pass


class ChecksumError(InputError):
    pass


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass
class Dataset:
    examples: List[Example]
    dim: int
    name: str = ""

    def __post_init__(self):
        need = max((ex.min_dim for ex in self.examples), default=0)
        if self.dim < max(1, need):
            raise InputError(f"dimension {self.dim} too small for feature index {need - 1}")

    def __len__(self):
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def __getitem__(self, i):
        return self.examples[i]

    @property
    def labels(self) -> np.ndarray:
        return np.array([ex.label for ex in self.examples], dtype=np.int64)

    def subset(self, order: Sequence[int], name: Optional[str] = None) -> "Dataset":
        return Dataset([self.examples[i] for i in order], self.dim,
                       self.name if name is None else name)

    def to_dense(self) -> Tuple[np.ndarray, np.ndarray]:
        X = np.zeros((len(self.examples), self.dim))
        for row, ex in enumerate(self.examples):
            X[row, ex.indices] = ex.values
        return X, self.labels


# --- label normalisation ----------------------------------------------------

@dataclass(frozen=True)
class LabelMapping:
    """``auto``, ``ova`` (one target vs the rest) or ``pair`` (a -> +1, b -> -1)."""

    mode: str = "auto"
    target: Optional[float] = None
    other: Optional[float] = None

    @classmethod
    def parse(cls, text: str) -> "LabelMapping":
        text = text.strip().lower()
        if text == "auto":
            return cls()
        kind, _, rest = text.partition(":")
        try:
            if kind == "ova":
                return cls("ova", float(rest))
            if kind == "pair":
                a, b = rest.split(",")
                return cls("pair", float(a), float(b))
        except ValueError:
            pass
        raise ConfigError(f"bad label mapping {text!r}; use auto, ova:<label> or pair:<a>,<b>")


def normalize_labels(raw_labels: Sequence[float], mapping: LabelMapping = LabelMapping()):
    """Map raw labels to {-1, +1}.

    Returns ``(labels, keep)`` where ``keep`` is the index list of retained
    examples (only ``pair`` drops any).

    ``auto`` leaves labels already in {-1, +1} alone; otherwise it needs exactly
    two distinct values and maps the smaller to -1.
    """
    raw = np.asarray(raw_labels, dtype=np.float64)
    if mapping.mode == "auto":
        distinct = np.unique(raw)
        if np.all(np.isin(distinct, (-1.0, 1.0))):
            return raw.astype(np.int64), np.arange(raw.size)
        if distinct.size != 2:
            raise MappingError(f"auto label mapping needs exactly two classes, found {distinct.size}")
        return np.where(raw == distinct[1], 1, -1).astype(np.int64), np.arange(raw.size)
    if mapping.mode == "ova":
        if not np.any(raw == mapping.target):
            raise MappingError(f"target class {mapping.target:g} not present")
        return np.where(raw == mapping.target, 1, -1).astype(np.int64), np.arange(raw.size)
    if mapping.mode == "pair":
        for cls in (mapping.target, mapping.other):
            if not np.any(raw == cls):
                raise MappingError(f"class {cls:g} not present")
        keep = np.flatnonzero((raw == mapping.target) | (raw == mapping.other))
        return np.where(raw[keep] == mapping.target, 1, -1).astype(np.int64), keep
    raise MappingError(f"unknown mapping mode {mapping.mode!r}")


# --- LIBSVM text format -----------------------------------------------------

def _parse_line(line: str, lineno: int):
    tokens = line.split()
    try:
        label = float(tokens[0])
    except ValueError:
        raise ParseError(f"non-numeric label {tokens[0]!r}", lineno) from None
    if not math.isfinite(label):
        raise ParseError(f"non-finite label {tokens[0]!r}", lineno)
    indices, values = [], []
    prev = 0
    for tok in tokens[1:]:
        key, sep, val = tok.partition(":")
        if not sep:
            raise ParseError(f"malformed token {tok!r}", lineno)
        try:
            idx = int(key)
            value = float(val)
        except ValueError:
            raise ParseError(f"malformed token {tok!r}", lineno) from None
        if idx < 1:
            raise ParseError(f"feature index must be >= 1, got {idx}", lineno)
        if idx <= prev:
            raise ParseError(f"feature index {idx} not ascending", lineno)
        if not math.isfinite(value):
            raise ParseError(f"non-finite value in {tok!r}", lineno)
        prev = idx
        indices.append(idx - 1)
        values.append(value)
    return label, indices, values


def parse_libsvm(lines: Iterable[str], mapping: LabelMapping = LabelMapping(),
                 name: str = "", dim: Optional[int] = None) -> Dataset:
    """Parse ``<label> <idx>:<val> ...`` lines with 1-based ascending indices.

    Blank lines and ``#`` comments are skipped. ``dim`` may raise the
    dimensionality above ``max index``, never lower it.
    """
    raw_labels, rows = [], []
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        label, idx, val = _parse_line(line, lineno)
        raw_labels.append(label)
        rows.append((idx, val))
    if not rows:
        raise EmptyDatasetError(f"dataset {name!r} has no examples")
    labels, keep = normalize_labels(raw_labels, mapping)
    examples = [Example(np.array(rows[k][0], dtype=np.int64),
                        np.array(rows[k][1], dtype=np.float64), int(lab))
                for k, lab in zip(keep, labels)]
    max_dim = max([1] + [idx[-1] + 1 for idx, _ in rows if idx])
    if dim is not None:
        if dim < max_dim:
            raise InputError(f"declared dimension {dim} below max feature index {max_dim}")
        max_dim = dim
    return Dataset(examples, max_dim, name)


def _open_text(path: Path):
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return open(path, encoding="utf-8")


def load_libsvm(path: Union[str, Path], mapping: LabelMapping = LabelMapping(),
                dim: Optional[int] = None) -> Dataset:
    path = Path(path)
    name = Path(path.name[:-3] if path.suffix == ".gz" else path.name).stem
    with _open_text(path) as fh:
        return parse_libsvm(fh, mapping, name=name, dim=dim)


def serialize_libsvm(dataset: Dataset) -> str:
    out = []
    for ex in dataset:
        feats = " ".join(f"{i + 1}:{v:.17g}" for i, v in zip(ex.indices, ex.values))
        out.append(f"{ex.label:+d} {feats}".rstrip())
    return "\n".join(out) + "\n"


def save_libsvm(dataset: Dataset, path: Union[str, Path]) -> None:
    path = Path(path)
    text = serialize_libsvm(dataset)
    if path.suffix == ".gz":
        with gzip.open(path, "wt", encoding="utf-8") as fh:
            fh.write(text)
    else:
        path.write_text(text, encoding="utf-8")


# --- manifest of public datasets ----------------------------------------------

MANIFEST_PATH = Path(__file__).with_name("datasets.json")


def load_manifest(path: Union[str, Path] = MANIFEST_PATH) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def sha256sum(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def verify_dataset(path: Union[str, Path], entry: dict) -> bool:
    """Check a file against its manifest entry.

    Returns False when the entry carries no checksum (nothing to verify);
    raises :class:`ChecksumError` on a mismatch.
    """
    expected = entry.get("sha256")
    if not expected:
        return False
    actual = sha256sum(path)
    if actual != expected:
        raise ChecksumError(f"{path}: sha256 {actual} does not match manifest {expected}")
    return True


# --- synthetic data -----------------------------------------------------------

@dataclass(frozen=True)
class SyntheticSpec:
    n: int = 5000
    d: int = 20
    noise_rate: float = 0.0
    seed: int = 0
    min_margin: float = 0.01
    scale_range: Tuple[float, float] = (0.1, 10.0)

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("synthetic n must be >= 1")
        if self.d < 2:
            raise ConfigError("synthetic d must be >= 2")
        if not 0.0 <= self.noise_rate < 0.5:
            raise ConfigError("noise rate must lie in [0, 0.5)")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    @classmethod
    def parse(cls, text: str) -> "SyntheticSpec":
        """Parse ``n=5000,d=20,noise=0.1,seed=7``."""
        kwargs = {}
        names = {"n": ("n", int), "d": ("d", int), "noise": ("noise_rate", float),
                 "noise_rate": ("noise_rate", float), "seed": ("seed", int)}
        for part in filter(None, (p.strip() for p in text.split(","))):
            key, sep, val = part.partition("=")
            if not sep or key.strip() not in names:
                raise ConfigError(f"bad synthetic spec item {part!r}")
            field_name, conv = names[key.strip()]
            try:
                kwargs[field_name] = conv(val)
            except ValueError:
                raise ConfigError(f"bad synthetic spec value {part!r}") from None
        return cls(**kwargs)

    @property
    def name(self) -> str:
        return f"synthetic-n{self.n}-d{self.d}-noise{self.noise_rate:g}-seed{self.seed}"


def generate_synthetic(spec: SyntheticSpec, *, return_truth: bool = False):
    """Linearly separable Gaussian data with anisotropic feature scales, then label flips.

    A unit vector ``w*`` drawn uniformly from the sphere labels each point by
    ``sign(w*.x)``; coordinates are zero-mean Gaussians whose standard
    deviations are log-spaced over ``scale_range``. Points with
    ``|w*.x| < min_margin`` are redrawn. Each label is then flipped
    independently with probability ``noise_rate``.

    With ``return_truth=True`` also returns ``(w_star, clean_labels, flip_mask)``.
    """
    rng = rng_for(spec.seed)
    w = rng.standard_normal(spec.d)
    w /= np.linalg.norm(w)
    scales = np.logspace(np.log10(spec.scale_range[0]), np.log10(spec.scale_range[1]), spec.d)

    X = np.empty((spec.n, spec.d))
    filled = 0
    while filled < spec.n:
        batch = rng.standard_normal((spec.n - filled, spec.d)) * scales
        ok = batch[np.abs(batch @ w) >= spec.min_margin]
        X[filled:filled + len(ok)] = ok
        filled += len(ok)
    clean = np.where(X @ w > 0, 1, -1)
    flips = rng.random(spec.n) < spec.noise_rate
    labels = np.where(flips, -clean, clean)

    examples = [Example(np.arange(spec.d), row, int(lab)) for row, lab in zip(X, labels)]
    data = Dataset(examples, spec.d, spec.name)
    if return_truth:
        return data, (w, clean, flips)
    return data


def permute(dataset: Dataset, seed: int) -> Dataset:
    """Seeded shuffle (Fisher-Yates via ``Generator.permutation``)."""
    order = rng_for(seed).permutation(len(dataset))
    return dataset.subset(order)
