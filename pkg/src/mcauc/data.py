"""Synthetic Gaussian benchmarks, CSV datasets and min-max normalisation."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# class mix of the broadcast-audio benchmark (fg music, bg music, no music)
DEFAULT_PROPORTIONS = (0.1660, 0.3445, 0.4894)


class DatasetParseError(ValueError):
    pass


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: list[str] = field(default_factory=list)
    class_names: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.labels.shape != (self.features.shape[0],):
            raise ValueError("features must be N x D with N labels")
        if not self.feature_names:
            self.feature_names = [f"f{k}" for k in range(self.features.shape[1])]
        if not self.class_names:
            c = int(self.labels.max()) + 1 if self.labels.size else 0
            self.class_names = [str(k) for k in range(c)]
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= len(self.class_names)):
            raise ValueError("labels outside [0, c)")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)


@dataclass(frozen=True)
class SyntheticSpec:
    """Isotropic Gaussian blobs, one per class.

    ``sizes`` holds the total example count of the train, val and test
    splits; each is divided among classes by ``proportions`` (uniform when
    ``None``).  Without explicit ``class_means`` the classes sit at
    ``separation`` times the first ``c`` unit vectors.
    """

    c: int = 3
    dims: int = 8
    sizes: tuple[int, int, int] = (300, 300, 1500)
    proportions: tuple[float, ...] | None = DEFAULT_PROPORTIONS
    class_means: tuple[tuple[float, ...], ...] | None = None
    separation: float = 1.0
    spread: float = 1.0
    seed: int = 0

    def means(self) -> np.ndarray:
        if self.class_means is not None:
            m = np.asarray(self.class_means, dtype=np.float64)
            if m.shape != (self.c, self.dims):
                raise ValueError(f"class_means must be {self.c} x {self.dims}")
            return m
        if self.dims < self.c:
            raise ValueError("default means need dims >= c")
        m = np.zeros((self.c, self.dims))
        m[np.arange(self.c), np.arange(self.c)] = self.separation
        return m

    def class_counts(self, total: int) -> np.ndarray:
        """Largest-remainder split of ``total`` examples by the class proportions."""
        p = np.full(self.c, 1.0 / self.c) if self.proportions is None else np.asarray(self.proportions, float)
        raw = p * total
        counts = np.floor(raw).astype(int)
        short = total - counts.sum()
        counts[np.argsort(-(raw - counts), kind="stable")[:short]] += 1
        return counts


def _validate(spec: SyntheticSpec) -> None:
    if spec.c < 2:
        raise ValueError("need at least 2 classes")
    if spec.dims < 1:
        raise ValueError("need at least one feature")
    if not spec.spread > 0:
        raise ValueError("spread must be positive")
    if spec.proportions is not None:
        p = np.asarray(spec.proportions, float)
        if p.shape != (spec.c,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-3:
            raise ValueError(f"proportions must be {spec.c} non-negative values summing to 1")
    if len(spec.sizes) != 3 or min(spec.sizes) < spec.c:
        raise ValueError("each split needs at least c examples")


def gen_synthetic(spec: SyntheticSpec) -> tuple[Dataset, Dataset, Dataset]:
    """Draw independent train, validation and test splits."""
    _validate(spec)
    rng = np.random.default_rng(spec.seed)
    means = spec.means()
    splits = []
    for total in spec.sizes:
        counts = spec.class_counts(total)
        if np.any(counts == 0):
            raise ValueError(f"split of {total} examples leaves a class empty")
        y = np.repeat(np.arange(spec.c), counts)
        x = means[y] + spec.spread * rng.standard_normal((total, spec.dims))
        perm = rng.permutation(total)
        splits.append(Dataset(x[perm], y[perm], class_names=[str(k) for k in range(spec.c)]))
    return tuple(splits)


def save_dataset(ds: Dataset, path) -> None:
    """CSV with header ``f0,...,f{D-1},label``; floats written with ``repr``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*ds.feature_names, "label"])
        for row, lab in zip(ds.features.tolist(), ds.labels.tolist()):
            w.writerow([repr(v) for v in row] + [lab])


def load_dataset(path, n_classes: int | None = None) -> Dataset:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if not header or header[-1] != "label":
        raise DatasetParseError(f"{path}: missing 'label' column (last header column must be 'label')")
    width = len(header)
    feats, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != width:
            raise DatasetParseError(f"{path}:{lineno}: expected {width} cells, got {len(row)}")
        try:
            values = [float(v) for v in row[:-1]]
        except ValueError:
            raise DatasetParseError(f"{path}:{lineno}: non-numeric feature value") from None
        if not np.all(np.isfinite(values)):
            raise DatasetParseError(f"{path}:{lineno}: non-finite feature value")
        try:
            lab = int(row[-1])
        except ValueError:
            raise DatasetParseError(f"{path}:{lineno}: label {row[-1]!r} is not an integer") from None
        if lab < 0:
            raise DatasetParseError(f"{path}:{lineno}: negative label {lab}")
        feats.append(values)
        labels.append(lab)
    if not labels:
        raise DatasetParseError(f"{path}: no data rows")
    c = n_classes if n_classes is not None else max(labels) + 1
    return Dataset(
        np.array(feats, dtype=np.float64).reshape(len(labels), width - 1),
        np.array(labels, dtype=np.int64),
        feature_names=header[:-1],
        class_names=[str(k) for k in range(c)],
    )


@dataclass(frozen=True)
class NormalizationParams:
    minimum: np.ndarray
    maximum: np.ndarray


def fit_minmax(train: Dataset) -> NormalizationParams:
    x = train.features
    return NormalizationParams(x.min(axis=0), x.max(axis=0))


def apply_minmax(params: NormalizationParams, ds: Dataset) -> Dataset:
    """Scale to [0, 1] by the fitted range, clamping; constant features become 0."""
    span = params.maximum - params.minimum
    safe = np.where(span > 0, span, 1.0)
    x = np.where(span > 0, (ds.features - params.minimum) / safe, 0.0)
    x = np.clip(x, 0.0, 1.0)
    return Dataset(x, ds.labels.copy(), list(ds.feature_names), list(ds.class_names))
