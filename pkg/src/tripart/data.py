"""Synthetic datasets with controllable class overlap, CSV I/O and stratified splits."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


@dataclass
class LabeledDataset:
    features: np.ndarray
    true_labels: np.ndarray
    given_labels: np.ndarray
    sample_ids: np.ndarray
    n_classes: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.true_labels = np.asarray(self.true_labels, dtype=np.int64)
        self.given_labels = np.asarray(self.given_labels, dtype=np.int64)
        self.sample_ids = np.asarray(self.sample_ids, dtype=np.int64)
        n = self.features.shape[0]
        if self.features.ndim != 2 or n < 1:
            raise ValueError("features must be a non-empty 2-D matrix")
        for name in ("true_labels", "given_labels", "sample_ids"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"{name} must have one entry per sample")
        for name in ("true_labels", "given_labels"):
            lab = getattr(self, name)
            if np.any((lab < 0) | (lab >= self.n_classes)):
                raise ValueError(f"{name} outside [0, {self.n_classes})")
        if np.unique(self.sample_ids).size != n:
            raise ValueError("sample ids must be unique")

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def noisy_mask(self) -> np.ndarray:
        return self.given_labels != self.true_labels

    def with_given(self, given) -> "LabeledDataset":
        return LabeledDataset(
            self.features.copy(), self.true_labels.copy(), np.asarray(given), self.sample_ids.copy(), self.n_classes
        )

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx)
        return LabeledDataset(
            self.features[idx], self.true_labels[idx], self.given_labels[idx], self.sample_ids[idx], self.n_classes
        )

    def equals(self, other: "LabeledDataset") -> bool:
        return (
            self.n_classes == other.n_classes
            and np.array_equal(self.features, other.features)
            and np.array_equal(self.true_labels, other.true_labels)
            and np.array_equal(self.given_labels, other.given_labels)
            and np.array_equal(self.sample_ids, other.sample_ids)
        )


@dataclass
class BlobSpec:
    """Gaussian blobs, one per class.

    ``overlap_pairs`` entries ``(i, j, o)`` move the two means toward their
    midpoint by fraction ``o``: 0 leaves them alone, 1 makes them coincide.
    When ``means`` is omitted the classes sit evenly on a circle of ``radius``.
    """

    n_classes: int = 4
    samples_per_class: int = 500
    n_features: int = 2
    means: np.ndarray | None = None
    std: float | Sequence[float] = 1.0
    radius: float = 4.0
    overlap_pairs: list[tuple[int, int, float]] = field(default_factory=list)
    seed: int = 0


def blob_means(spec: BlobSpec) -> np.ndarray:
    c = spec.n_classes
    if spec.means is not None:
        means = np.array(spec.means, dtype=np.float64)
    else:
        angles = 2 * np.pi * np.arange(c) / c
        means = np.zeros((c, spec.n_features))
        means[:, 0] = spec.radius * np.cos(angles)
        means[:, 1 % spec.n_features] = spec.radius * np.sin(angles)
    base = means.copy()
    for i, j, o in spec.overlap_pairs:
        if not 0 <= o <= 1:
            raise ValueError("overlap degree must lie in [0, 1]")
        mid = 0.5 * (base[i] + base[j])
        means[i] = base[i] + o * (mid - base[i])
        means[j] = base[j] + o * (mid - base[j])
    return means


def gen_blobs(spec: BlobSpec) -> LabeledDataset:
    c = spec.n_classes
    stds = np.broadcast_to(np.asarray(spec.std, dtype=np.float64), (c,))
    if np.any(stds <= 0):
        raise ValueError("covariance scale must be positive")
    if spec.samples_per_class < 1:
        raise ValueError("samples_per_class must be positive")
    means = blob_means(spec)
    rng = np.random.default_rng(spec.seed)
    m = spec.samples_per_class
    labels = np.repeat(np.arange(c), m)
    x = means[labels] + rng.normal(size=(c * m, means.shape[1])) * stds[labels, None]
    return LabeledDataset(x, labels, labels.copy(), np.arange(c * m), c)


def gen_two_moons(n: int, noise: float = 0.0, seed: int = 0) -> LabeledDataset:
    if n % 2:
        raise ValueError("n must be even")
    half = n // 2
    rng = np.random.default_rng(seed)
    t = np.linspace(0, np.pi, half)
    upper = np.column_stack([np.cos(t), np.sin(t)])
    lower = np.column_stack([1 - np.cos(t), 0.5 - np.sin(t)])
    x = np.vstack([upper, lower])
    if noise > 0:
        x = x + rng.normal(0.0, noise, size=x.shape)
    labels = np.repeat([0, 1], half)
    return LabeledDataset(x, labels, labels.copy(), np.arange(n), 2)


def save_csv(dataset: LabeledDataset, path) -> None:
    d = dataset.features.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "given_label", "true_label"] + [f"f{k}" for k in range(d)])
        for sid, g, t, row in zip(dataset.sample_ids, dataset.given_labels, dataset.true_labels, dataset.features):
            w.writerow([int(sid), int(g), int(t)] + [repr(float(v)) for v in row])


def load_csv(path, n_classes: int | None = None) -> LabeledDataset:
    """Read a dataset written by :func:`save_csv`. ``n_classes`` defaults to max label + 1."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = rows[0]
    if header[:3] != ["id", "given_label", "true_label"] or len(header) < 4:
        raise ValueError(f"{path}: header must start with id,given_label,true_label,f0")
    ids, given, true, feats = [], [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            ids.append(int(row[0]))
            given.append(int(row[1]))
            true.append(int(row[2]))
            feats.append([float(v) for v in row[3:]])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not ids:
        raise ValueError(f"{path}: no samples")
    labels = np.array(given + true)
    if labels.min() < 0:
        raise ValueError(f"{path}: negative label")
    c = int(labels.max()) + 1 if n_classes is None else n_classes
    if labels.max() >= c:
        raise ValueError(f"{path}: label {labels.max()} unknown for {c} classes")
    return LabeledDataset(np.array(feats), np.array(true), np.array(given), np.array(ids), c)


def split(dataset: LabeledDataset, test_fraction: float, seed: int = 0) -> tuple[LabeledDataset, LabeledDataset]:
    """Stratified (by true label) disjoint train/test split."""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    test_idx = []
    for c in range(dataset.n_classes):
        members = np.flatnonzero(dataset.true_labels == c)
        k = int(round(test_fraction * members.size))
        test_idx.append(rng.permutation(members)[:k])
    test = np.sort(np.concatenate(test_idx))
    train = np.setdiff1d(np.arange(len(dataset)), test)
    return dataset.subset(train), dataset.subset(test)
