"""Subset losses (clean CE, down-weighted hard CE, label-free consistency MSE),
their combination, and the feature-vector augmentation registry."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .net import (
    PROB_FLOOR,
    ClassifierState,
    Gradients,
    backward_from_cache,
    forward_cache,
)

CLEAN, HARD, NOISY = 0, 1, 2
SUBSET_NAMES = ("clean", "hard", "noisy")
NOISY_STRATEGIES = ("self", "drop", "pseudo")


@dataclass(frozen=True)
class StrategyWeights:
    lambda_h: float = 0.6
    lambda_n: float = 1.0
    allow_ablation: bool = False

    def __post_init__(self):
        if self.allow_ablation:
            if not self.lambda_h > 0:
                raise ValueError("lambda_h must be positive")
        elif not 0 < self.lambda_h < 1:
            raise ValueError(f"lambda_h must lie in (0, 1), got {self.lambda_h}")
        if self.lambda_n < 0:
            raise ValueError(f"lambda_n must be nonnegative, got {self.lambda_n}")


@dataclass(frozen=True)
class AugmentationSpec:
    """One feature-space augmentation.

    kinds: ``jitter`` (additive Gaussian, ``sigma``), ``dropout`` (zero each
    feature with prob ``rate``, rescale survivors), ``scale`` (multiply by a
    factor uniform in ``[low, high]``), ``mixup`` (convex combination with a
    partner from the same pool, weight ~ Beta(alpha, alpha)).
    """

    kind: str
    sigma: float = 0.0
    rate: float = 0.0
    low: float = 1.0
    high: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind == "jitter":
            if self.sigma < 0:
                raise ValueError("jitter sigma must be nonnegative")
        elif self.kind == "dropout":
            if not 0 <= self.rate < 1:
                raise ValueError("dropout rate must lie in [0, 1)")
        elif self.kind == "scale":
            if not 0 < self.low <= self.high:
                raise ValueError("scale range must be positive with low <= high")
        elif self.kind == "mixup":
            if not self.alpha > 0:
                raise ValueError("mixup alpha must be positive")
        else:
            raise ValueError(f"unknown augmentation kind {self.kind!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "AugmentationSpec":
        return cls(**d)

    def to_dict(self) -> dict:
        keys = {"jitter": ("sigma",), "dropout": ("rate",), "scale": ("low", "high"), "mixup": ("alpha",)}
        out = {"kind": self.kind}
        out.update({k: getattr(self, k) for k in keys[self.kind]})
        return out


DEFAULT_AUGMENTATIONS = (AugmentationSpec("jitter", sigma=0.15),)


def augment_batch(x: np.ndarray, specs: Sequence[AugmentationSpec], rng: np.random.Generator) -> np.ndarray:
    """Apply ``specs`` in order to every row of ``x``; mixup partners come from ``x`` itself."""
    out = np.array(x, dtype=np.float64, copy=True)
    n = out.shape[0]
    if n == 0:
        return out
    for spec in specs:
        if spec.kind == "jitter":
            if spec.sigma > 0:
                out = out + rng.normal(0.0, spec.sigma, size=out.shape)
        elif spec.kind == "dropout":
            if spec.rate > 0:
                keep = rng.random(out.shape) >= spec.rate
                out = out * keep / (1.0 - spec.rate)
        elif spec.kind == "scale":
            out = out * rng.uniform(spec.low, spec.high, size=(n, 1))
        elif spec.kind == "mixup":
            lam = rng.beta(spec.alpha, spec.alpha, size=(n, 1))
            partner = out[rng.integers(0, n, size=n)]
            out = lam * out + (1.0 - lam) * partner
    return out


def augment(x, specs: Sequence[AugmentationSpec], rng: np.random.Generator, pool=None) -> np.ndarray:
    """Augment a single feature row; ``pool`` supplies mixup partners (defaults to ``x`` alone)."""
    row = np.asarray(x, dtype=np.float64).reshape(1, -1)
    if pool is None:
        return augment_batch(row, specs, rng)[0]
    pool = np.asarray(pool, dtype=np.float64)
    out = row
    for spec in specs:
        if spec.kind == "mixup":
            lam = rng.beta(spec.alpha, spec.alpha)
            out = lam * out + (1.0 - lam) * pool[rng.integers(0, len(pool))]
        else:
            out = augment_batch(out, [spec], rng)
    return out[0]


def one_hot(labels, n_classes: int) -> np.ndarray:
    y = np.asarray(labels, dtype=np.int64)
    out = np.zeros((y.size, n_classes))
    out[np.arange(y.size), y] = 1.0
    return out


def _check_one_hot(labels: np.ndarray):
    if not (np.all((labels == 0) | (labels == 1)) and np.all(labels.sum(axis=1) == 1)):
        raise ValueError("labels must be one-hot rows")


def cross_entropy(probs, labels) -> tuple[float, np.ndarray]:
    """Mean categorical cross-entropy and its gradient w.r.t. ``probs``.

    Probabilities are floored at 1e-12 before the log; below the floor the
    gradient is zero. An empty batch yields ``(0.0, zeros)``.
    """
    p = np.asarray(probs, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.shape != y.shape:
        raise ValueError(f"probs {p.shape} and labels {y.shape} differ in shape")
    n = p.shape[0]
    if n == 0:
        return 0.0, np.zeros_like(p)
    _check_one_hot(y)
    clamped = np.maximum(p, PROB_FLOOR)
    loss = float(-(y * np.log(clamped)).sum() / n)
    grad = np.where(p > PROB_FLOOR, -y / (n * clamped), 0.0)
    return loss, grad


def weighted_ce_hard(probs, labels, lambda_h: float) -> tuple[float, np.ndarray]:
    loss, grad = cross_entropy(probs, labels)
    return lambda_h * loss, lambda_h * grad


def consistency_mse(probs_a, probs_b) -> tuple[float, np.ndarray, np.ndarray]:
    """Squared Euclidean distance summed over classes, averaged over samples."""
    a = np.asarray(probs_a, dtype=np.float64)
    b = np.asarray(probs_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    n = a.shape[0]
    if n == 0:
        return 0.0, np.zeros_like(a), np.zeros_like(b)
    diff = a - b
    loss = float((diff * diff).sum() / n)
    ga = 2.0 * diff / n
    return loss, ga, -ga


@dataclass
class LossBreakdown:
    loss_c: float = 0.0
    loss_h: float = 0.0
    loss_n: float = 0.0
    loss_total: float = 0.0
    n_clean: int = 0
    n_hard: int = 0
    n_noisy: int = 0

    def to_dict(self) -> dict:
        return {
            "loss_c": self.loss_c,
            "loss_h": self.loss_h,
            "loss_n": self.loss_n,
            "loss_total": self.loss_total,
            "n_clean": self.n_clean,
            "n_hard": self.n_hard,
            "n_noisy": self.n_noisy,
        }


@dataclass
class BatchPlan:
    """Everything needed to evaluate the combined loss on one mini-batch.

    ``targets`` are the labels used for clean/hard members (and for noisy
    members under the ``pseudo`` strategy). Under ``self`` the noisy members'
    targets are never read; ``views`` holds their two augmented copies.
    """

    x: np.ndarray
    targets: np.ndarray
    codes: np.ndarray
    noisy_strategy: str = "self"
    views: tuple[np.ndarray, np.ndarray] | None = None
    labeled_x: np.ndarray | None = None


def _labeled_mask(codes: np.ndarray, noisy_strategy: str) -> np.ndarray:
    if noisy_strategy == "pseudo":
        return np.ones(codes.shape, dtype=bool)
    return codes != NOISY


def plan_batch(
    x,
    targets,
    codes,
    noisy_strategy: str = "self",
    augmentations: Sequence[AugmentationSpec] = DEFAULT_AUGMENTATIONS,
    rng: np.random.Generator | None = None,
    augment_labeled: bool = False,
) -> BatchPlan:
    """Draw the random augmentations for a batch once, so the loss is a deterministic function of parameters."""
    x = np.asarray(x, dtype=np.float64)
    codes = np.asarray(codes, dtype=np.int64)
    targets = np.asarray(targets, dtype=np.int64)
    if codes.shape != (x.shape[0],) or targets.shape != (x.shape[0],):
        raise ValueError("targets and codes must have one entry per batch row")
    if np.any((codes < CLEAN) | (codes > NOISY)):
        raise ValueError("every sample must belong to exactly one subset")
    if noisy_strategy not in NOISY_STRATEGIES:
        raise ValueError(f"unknown noisy-subset strategy {noisy_strategy!r}")
    views = None
    labeled_x = None
    if rng is None:
        rng = np.random.default_rng(0)
    if noisy_strategy == "self":
        xn = x[codes == NOISY]
        views = (augment_batch(xn, augmentations, rng), augment_batch(xn, augmentations, rng))
    if augment_labeled:
        labeled_x = augment_batch(x[_labeled_mask(codes, noisy_strategy)], augmentations, rng)
    return BatchPlan(x, targets, codes, noisy_strategy, views, labeled_x)


def total_loss(state: ClassifierState, plan: BatchPlan, weights: StrategyWeights) -> tuple[LossBreakdown, Gradients]:
    """Combined loss ``Loss_c + lambda_n * Loss_n + Loss_h`` and its parameter gradients.

    All needed inputs are stacked into a single forward/backward pass.
    """
    codes = plan.codes
    clean = codes == CLEAN
    hard = codes == HARD
    noisy = codes == NOISY
    n_c, n_h, n_n = int(clean.sum()), int(hard.sum()), int(noisy.sum())

    labeled_mask = _labeled_mask(codes, plan.noisy_strategy)
    lab_x = plan.labeled_x if plan.labeled_x is not None else plan.x[labeled_mask]
    lab_codes = codes[labeled_mask]
    lab_targets = plan.targets[labeled_mask]

    parts = [lab_x]
    use_views = plan.noisy_strategy == "self" and n_n > 0
    if use_views:
        va, vb = plan.views
        parts.extend([va, vb])
    stacked = np.vstack(parts) if len(parts) > 1 else parts[0]
    if stacked.shape[0] == 0:
        zero = Gradients([np.zeros_like(w) for w in state.weights], [np.zeros_like(b) for b in state.biases])
        return LossBreakdown(n_clean=n_c, n_hard=n_h, n_noisy=n_n), zero

    probs, cache = forward_cache(state, stacked)
    upstream = np.zeros_like(probs)
    n_lab = lab_x.shape[0]
    idx = np.arange(n_lab)
    picked = probs[idx, lab_targets]
    clamped = np.maximum(picked, PROB_FLOOR)
    nll = -np.log(clamped)
    dnll = np.where(picked > PROB_FLOOR, -1.0 / clamped, 0.0)

    bd = LossBreakdown(n_clean=n_c, n_hard=n_h, n_noisy=n_n)
    for code, coeff in ((CLEAN, 1.0), (HARD, weights.lambda_h)):
        m = lab_codes == code
        k = int(m.sum())
        if k:
            value = coeff * float(nll[m].sum() / k)
            upstream[idx[m], lab_targets[m]] = coeff * dnll[m] / k
            if code == CLEAN:
                bd.loss_c = value
            else:
                bd.loss_h = value
    if plan.noisy_strategy == "pseudo":
        m = lab_codes == NOISY
        k = int(m.sum())
        if k:
            bd.loss_n = float(nll[m].sum() / k)
            upstream[idx[m], lab_targets[m]] = weights.lambda_n * dnll[m] / k
    elif use_views:
        pa = probs[n_lab : n_lab + n_n]
        pb = probs[n_lab + n_n :]
        bd.loss_n, ga, gb = consistency_mse(pa, pb)
        upstream[n_lab : n_lab + n_n] = weights.lambda_n * ga
        upstream[n_lab + n_n :] = weights.lambda_n * gb
    bd.loss_total = bd.loss_c + weights.lambda_n * bd.loss_n + bd.loss_h
    return bd, backward_from_cache(state, probs, cache, upstream)


def make_objective(
    loss_kind: str,
    x,
    labels,
    state: ClassifierState | None = None,
    lambda_h: float = 0.6,
    lambda_n: float = 1.0,
    codes=None,
    augmentations: Sequence[AugmentationSpec] = DEFAULT_AUGMENTATIONS,
    seed: int = 0,
):
    """Build ``state -> (loss, Gradients)`` with all randomness frozen up front.

    Used by the finite-difference checker.
    """
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n = x.shape[0]
    rng = np.random.default_rng(seed)
    weights = StrategyWeights(lambda_h, lambda_n)

    if loss_kind in ("ce", "hard"):
        plan_codes = np.full(n, CLEAN if loss_kind == "ce" else HARD)
        plan = BatchPlan(x, labels, plan_codes, "drop")
    elif loss_kind == "consistency":
        plan = plan_batch(x, labels, np.full(n, NOISY), "self", augmentations, rng)
        weights = StrategyWeights(lambda_h, 1.0)
    elif loss_kind == "total":
        plan_codes = np.arange(n) % 3 if codes is None else np.asarray(codes)
        plan = plan_batch(x, labels, plan_codes, "self", augmentations, rng)
    else:
        raise ValueError(f"unknown loss kind {loss_kind!r}")

    def objective(st: ClassifierState):
        bd, grads = total_loss(st, plan, weights)
        return bd.loss_total, grads

    return objective
