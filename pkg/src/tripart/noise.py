"""Label-noise transition matrices and label corruption.

Three builders: symmetric (uniform flips), pair-flip (each class flips to one
partner), and realistic, where flips follow the cosine similarity between
class prototypes taken from the last layer of a trained classifier.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .data import LabeledDataset
from .net import ClassifierState

ROW_TOL = 1e-9

# Top-K pair count and level weights used for CIFAR-scale realistic noise.
REALISTIC_PRESETS = {
    "cifar10": {"K": 10, "level_weights": (0.9, 0.8, 0.7)},
    "cifar100": {"K": 60, "level_weights": (0.9, 0.6, 0.3)},
}


@dataclass
class TransitionMatrix:
    entries: np.ndarray
    noise_ratio: float = 0.0

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValueError(f"transition matrix must be square, got shape {m.shape}")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise ValueError("transition matrix entries must be finite and nonnegative")
        if np.max(np.abs(m.sum(axis=1) - 1.0)) > ROW_TOL:
            raise ValueError("transition matrix rows must sum to 1")
        self.entries = m

    @property
    def n_classes(self) -> int:
        return self.entries.shape[0]

    def row_sum_error(self) -> float:
        return float(np.max(np.abs(self.entries.sum(axis=1) - 1.0)))

    def to_csv(self, path) -> None:
        lines = [",".join(repr(float(v)) for v in row) for row in self.entries]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path, noise_ratio: float | None = None) -> "TransitionMatrix":
        rows = [line for line in Path(path).read_text().splitlines() if line.strip()]
        try:
            m = np.array([[float(v) for v in line.split(",")] for line in rows])
        except ValueError as exc:
            raise ValueError(f"malformed transition matrix CSV {path}: {exc}") from None
        if noise_ratio is None:
            noise_ratio = float(1.0 - np.diag(m).min()) if m.size else 0.0
        return cls(m, noise_ratio)


@dataclass
class ClassPrototypes:
    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 2:
            raise ValueError("need at least two class prototypes")
        if not np.all(np.isfinite(v)):
            raise ValueError("prototypes must be finite")
        if np.any(np.linalg.norm(v, axis=1) == 0):
            raise ValueError("zero-norm prototype")
        self.vectors = v


@dataclass
class SimilarityRanking:
    pairs: list[tuple[int, int, float]]


def extract_prototypes(state: ClassifierState) -> ClassPrototypes:
    """Column k of the final weight matrix is the prototype of class k."""
    return ClassPrototypes(state.weights[-1].T.copy())


def rank_pairs(protos: ClassPrototypes) -> SimilarityRanking:
    v = protos.vectors
    unit = v / np.linalg.norm(v, axis=1, keepdims=True)
    sim = unit @ unit.T
    c = v.shape[0]
    pairs = [(i, j, float(sim[i, j])) for i in range(c) for j in range(i + 1, c)]
    # stable sort keeps lexicographic pair order among equal similarities
    pairs.sort(key=lambda p: -p[2])
    return SimilarityRanking(pairs)


def level_sizes(k: int) -> list[int]:
    """Block sizes for splitting the top-K pairs into three similarity levels."""
    first = math.ceil(k / 3)
    second = min(first, k - first)
    return [first, second, k - first - second]


def build_realistic(
    ranking: SimilarityRanking,
    k: int,
    level_weights: Sequence[float],
    r: float,
    n_classes: int | None = None,
) -> TransitionMatrix:
    if k <= 0:
        raise ValueError("K must be positive")
    if k > len(ranking.pairs):
        raise ValueError(f"K={k} exceeds the {len(ranking.pairs)} available pairs")
    w = [float(x) for x in level_weights]
    if len(w) != 3 or any(not 0 < x <= 1 for x in w):
        raise ValueError("level_weights must be three values in (0, 1]")
    if not (w[0] >= w[1] >= w[2]):
        raise ValueError("level_weights must be descending")
    if not 0 <= r < 1:
        raise ValueError("noise ratio r must lie in [0, 1)")
    if n_classes is None:
        n_classes = 1 + max(max(i, j) for i, j, _ in ranking.pairs)

    m = np.zeros((n_classes, n_classes))
    level = np.repeat([0, 1, 2], level_sizes(k))
    for (i, j, _), lv in zip(ranking.pairs[:k], level):
        m[i, j] = w[lv]
        m[j, i] = w[lv]
    row_mass = m.sum(axis=1, keepdims=True)
    touched = row_mass[:, 0] > 0
    m[touched] = m[touched] / row_mass[touched] * r
    m[np.arange(n_classes), np.arange(n_classes)] = np.where(touched, 1.0 - r, 1.0)
    return TransitionMatrix(m, r)


def build_symmetric(n_classes: int, r: float) -> TransitionMatrix:
    if n_classes < 2:
        raise ValueError("need at least two classes")
    if not 0 <= r < 1:
        raise ValueError("noise ratio r must lie in [0, 1)")
    m = np.full((n_classes, n_classes), r / (n_classes - 1))
    np.fill_diagonal(m, 1.0 - r)
    return TransitionMatrix(m, r)


def build_pairflip(n_classes: int, r: float, pair_map: Mapping[int, int] | Sequence[int] | None = None) -> TransitionMatrix:
    """Each class i keeps its label with prob 1-r and flips to ``pair_map[i]`` otherwise.

    Default map is the cyclic shift i -> i+1.
    """
    if not 0 <= r < 0.5:
        raise ValueError("pair-flip noise requires r in [0, 0.5)")
    if pair_map is None:
        partners = [(i + 1) % n_classes for i in range(n_classes)]
    elif isinstance(pair_map, Mapping):
        partners = [pair_map.get(i, -1) for i in range(n_classes)]
    else:
        partners = list(pair_map)
    if len(partners) != n_classes or any(
        not 0 <= int(p) < n_classes or int(p) == i for i, p in enumerate(partners)
    ):
        raise ValueError("pair_map must send every class to a different valid class")
    m = np.eye(n_classes) * (1.0 - r)
    m[np.arange(n_classes), np.asarray(partners, dtype=int)] += r
    return TransitionMatrix(m, r)


def corrupt_labels(dataset: LabeledDataset, matrix: TransitionMatrix, seed: int) -> LabeledDataset:
    """Resample every given label from the row of its true label."""
    if dataset.n_classes != matrix.n_classes:
        raise ValueError(f"dataset has {dataset.n_classes} classes, matrix has {matrix.n_classes}")
    t = dataset.true_labels
    if np.any((t < 0) | (t >= matrix.n_classes)):
        raise ValueError("true label outside [0, C)")
    rng = np.random.default_rng(seed)
    u = rng.random(t.size)
    cdf = np.cumsum(matrix.entries, axis=1)
    cdf[:, -1] = 1.0
    given = (u[:, None] >= cdf[t]).sum(axis=1)
    return dataset.with_given(given)
