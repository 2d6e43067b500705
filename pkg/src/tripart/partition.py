"""Sample-selection criteria: Tripartition plus small-loss and GMM baselines,
and the bookkeeping used to score a partition against ground truth."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.special import logsumexp

from .data import LabeledDataset
from .losses import CLEAN, HARD, NOISY, SUBSET_NAMES


class GMMDegenerateError(RuntimeError):
    pass


@dataclass
class PredictionRecords:
    """Per-sample predictions of both networks, stored column-wise."""

    sample_ids: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    given: np.ndarray
    loss: np.ndarray

    def __post_init__(self):
        self.sample_ids = np.asarray(self.sample_ids, dtype=np.int64)
        self.p1 = np.asarray(self.p1, dtype=np.int64)
        self.p2 = np.asarray(self.p2, dtype=np.int64)
        self.given = np.asarray(self.given, dtype=np.int64)
        self.loss = np.asarray(self.loss, dtype=np.float64)
        n = self.sample_ids.size
        if any(a.shape != (n,) for a in (self.p1, self.p2, self.given, self.loss)):
            raise ValueError("record columns must have equal length")

    def __len__(self) -> int:
        return self.sample_ids.size

    @classmethod
    def from_tuples(cls, rows: Iterable[tuple]) -> "PredictionRecords":
        """Build from ``(sample_id, p1, p2, given_label, loss)`` tuples."""
        rows = list(rows)
        if not rows:
            return cls(*(np.zeros(0) for _ in range(5)))
        cols = list(zip(*rows))
        return cls(*cols)

    def with_losses(self, loss) -> "PredictionRecords":
        return PredictionRecords(self.sample_ids, self.p1, self.p2, self.given, loss)


@dataclass
class PartitionResult:
    """Subset assignment (``CLEAN``/``HARD``/``NOISY`` codes) aligned with ``sample_ids``."""

    sample_ids: np.ndarray
    subset: np.ndarray
    losses: np.ndarray
    epoch: int = -1

    @property
    def clean_ids(self) -> np.ndarray:
        return self.sample_ids[self.subset == CLEAN]

    @property
    def hard_ids(self) -> np.ndarray:
        return self.sample_ids[self.subset == HARD]

    @property
    def noisy_ids(self) -> np.ndarray:
        return self.sample_ids[self.subset == NOISY]

    def sizes(self) -> tuple[int, int, int]:
        counts = np.bincount(self.subset, minlength=3)
        return int(counts[0]), int(counts[1]), int(counts[2])

    def to_csv(self, path) -> None:
        lines = ["sample_id,subset"]
        lines += [f"{int(s)},{SUBSET_NAMES[c]}" for s, c in zip(self.sample_ids, self.subset)]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path, epoch: int = -1) -> "PartitionResult":
        lines = Path(path).read_text().splitlines()
        if not lines or lines[0] != "sample_id,subset":
            raise ValueError(f"{path}: expected header 'sample_id,subset'")
        ids, codes = [], []
        for line in lines[1:]:
            if not line:
                continue
            sid, name = line.split(",")
            ids.append(int(sid))
            codes.append(SUBSET_NAMES.index(name))
        return cls(np.array(ids, dtype=np.int64), np.array(codes, dtype=np.int64), np.full(len(ids), np.nan), epoch)


def _check_unique(records: PredictionRecords):
    if np.unique(records.sample_ids).size != len(records):
        raise ValueError("duplicate sample_id in prediction records")


def tripartition(records: PredictionRecords, epoch: int = -1) -> PartitionResult:
    """Clean when both networks agree with the given label, noisy when neither does, hard otherwise."""
    _check_unique(records)
    hits = (records.p1 == records.given).astype(np.int64) + (records.p2 == records.given)
    subset = np.select([hits == 2, hits == 1], [CLEAN, HARD], NOISY).astype(np.int64)
    return PartitionResult(records.sample_ids.copy(), subset, records.loss.copy(), epoch)


def small_loss_partition(records: PredictionRecords, keep_fraction: float, epoch: int = -1) -> PartitionResult:
    """The floor(R * n) lowest-loss samples are clean, the rest noisy; ties by sample id."""
    if len(records) == 0:
        raise ValueError("no records to partition")
    if not 0 < keep_fraction <= 1:
        raise ValueError("keep_fraction must lie in (0, 1]")
    _check_unique(records)
    n = len(records)
    order = np.lexsort((records.sample_ids, records.loss))
    subset = np.full(n, NOISY, dtype=np.int64)
    subset[order[: int(math.floor(keep_fraction * n))]] = CLEAN
    return PartitionResult(records.sample_ids.copy(), subset, records.loss.copy(), epoch)


def normalize_losses(losses) -> np.ndarray:
    """Min-max map to [0, 1]; a constant vector maps to zeros."""
    x = np.asarray(losses, dtype=np.float64)
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.zeros_like(x)
    return (x - lo) / (hi - lo)


@dataclass
class GMMFit:
    means: np.ndarray
    variances: np.ndarray
    weights: np.ndarray
    log_likelihood: list[float] = field(default_factory=list)
    restarts: int = 0

    @property
    def clean_component(self) -> int:
        return int(np.argmin(self.means))

    def _log_joint(self, x: np.ndarray) -> np.ndarray:
        return (
            np.log(self.weights)
            - 0.5 * np.log(2 * np.pi * self.variances)
            - 0.5 * (x[:, None] - self.means) ** 2 / self.variances
        )

    def posterior(self, x) -> np.ndarray:
        lj = self._log_joint(np.asarray(x, dtype=np.float64))
        return np.exp(lj - logsumexp(lj, axis=1, keepdims=True))

    def clean_posterior(self, x) -> np.ndarray:
        return self.posterior(x)[:, self.clean_component]


def fit_gmm_1d(
    x,
    var_floor: float = 1e-6,
    tol: float = 1e-8,
    max_iter: int = 200,
    max_restarts: int = 5,
    seed: int = 0,
) -> GMMFit:
    """Two-component 1-D Gaussian mixture by EM.

    Means start at the 25th/75th percentiles. A component whose unfloored
    variance collapses to zero or whose weight vanishes counts as degenerate;
    EM is restarted with jittered means up to ``max_restarts`` times.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    rng = np.random.default_rng(seed)
    base = np.percentile(x, [25, 75])
    spread = max(float(x.std()), 1e-3)
    for attempt in range(max_restarts + 1):
        means = base.copy()
        if attempt:
            means = means + rng.normal(0.0, 0.25 * spread, size=2)
        fit = GMMFit(means, np.full(2, max(float(x.var()), var_floor)), np.full(2, 0.5), restarts=attempt)
        degenerate = False
        prev = -np.inf
        for _ in range(max_iter):
            lj = fit._log_joint(x)
            norm = logsumexp(lj, axis=1, keepdims=True)
            ll = float(norm.sum())
            fit.log_likelihood.append(ll)
            resp = np.exp(lj - norm)
            nk = resp.sum(axis=0)
            if np.any(nk < 1e-6 * n):
                degenerate = True
                break
            means = (resp * x[:, None]).sum(axis=0) / nk
            raw_var = (resp * (x[:, None] - means) ** 2).sum(axis=0) / nk
            if np.any(raw_var <= 1e-12):
                degenerate = True
                break
            fit.means, fit.variances, fit.weights = means, np.maximum(raw_var, var_floor), nk / n
            if ll - prev < tol:
                break
            prev = ll
        if not degenerate:
            fit.log_likelihood.append(float(logsumexp(fit._log_joint(x), axis=1).sum()))
            return fit
    raise GMMDegenerateError(f"EM degenerate after {max_restarts} restarts")


def gmm_partition(records: PredictionRecords, tau: float = 0.5, epoch: int = -1, seed: int = 0) -> PartitionResult:
    """Clean iff the posterior of the low-mean component on normalized loss is at least ``tau``."""
    if len(records) < 10:
        raise ValueError("GMM partition needs at least 10 samples")
    _check_unique(records)
    x = normalize_losses(records.loss)
    fit = fit_gmm_1d(x, seed=seed)
    clean = fit.clean_posterior(x) >= tau
    subset = np.where(clean, CLEAN, NOISY).astype(np.int64)
    return PartitionResult(records.sample_ids.copy(), subset, records.loss.copy(), epoch)


@dataclass
class SubsetLossStats:
    mean: float | None
    var: float | None
    min: float | None
    max: float | None


@dataclass
class PartitionQuality:
    clean_purity: float | None
    noisy_purity: float | None
    hard_noisy_fraction: float | None
    n_clean: int
    n_hard: int
    n_noisy: int
    loss_stats: dict[str, SubsetLossStats]

    def to_dict(self) -> dict:
        out = {
            "clean_purity": self.clean_purity,
            "noisy_purity": self.noisy_purity,
            "hard_noisy_fraction": self.hard_noisy_fraction,
            "n_clean": self.n_clean,
            "n_hard": self.n_hard,
            "n_noisy": self.n_noisy,
        }
        for name in SUBSET_NAMES:
            s = self.loss_stats[name]
            out[f"loss_{name}"] = {"mean": s.mean, "var": s.var, "min": s.min, "max": s.max}
        return out


def score_partition(partition: PartitionResult, dataset: LabeledDataset) -> PartitionQuality:
    """Purity and normalized-loss statistics of each subset; empty subsets report ``None``."""
    pos = {int(s): i for i, s in enumerate(dataset.sample_ids)}
    try:
        idx = np.array([pos[int(s)] for s in partition.sample_ids], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"sample id {exc.args[0]} not in dataset") from None
    is_noisy = dataset.given_labels[idx] != dataset.true_labels[idx]
    norm = normalize_losses(partition.losses) if len(partition.losses) >= 2 else np.zeros(len(partition.losses))
    stats = {}
    for code, name in enumerate(SUBSET_NAMES):
        m = partition.subset == code
        if m.any() and np.all(np.isfinite(norm[m])):
            v = norm[m]
            stats[name] = SubsetLossStats(float(v.mean()), float(v.var()), float(v.min()), float(v.max()))
        else:
            stats[name] = SubsetLossStats(None, None, None, None)

    def frac(mask, values):
        return float(values[mask].mean()) if mask.any() else None

    n_c, n_h, n_n = partition.sizes()
    return PartitionQuality(
        clean_purity=frac(partition.subset == CLEAN, ~is_noisy),
        noisy_purity=frac(partition.subset == NOISY, is_noisy),
        hard_noisy_fraction=frac(partition.subset == HARD, is_noisy),
        n_clean=n_c,
        n_hard=n_h,
        n_noisy=n_n,
        loss_stats=stats,
    )
