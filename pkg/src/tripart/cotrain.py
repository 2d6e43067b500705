"""Dual-network co-training: warm-up, per-epoch partition, per-network updates."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .data import LabeledDataset
from .losses import CLEAN, BatchPlan, LossBreakdown, StrategyWeights, plan_batch, total_loss
from .net import ClassifierState, forward, init_classifier, sgd_step
from .partition import (
    PartitionQuality,
    PartitionResult,
    PredictionRecords,
    gmm_partition,
    score_partition,
    small_loss_partition,
    tripartition,
)
from .scenario import GMM_SEED, NET1_SEED, NET2_SEED, PreparedData, prepare_data, seed_streams


@dataclass
class EpochTrace:
    epoch: int
    phase: str
    lr: float
    test_acc: list[float]
    quality: PartitionQuality | None = None
    losses: list[LossBreakdown] = field(default_factory=list)

    @property
    def test_acc_mean(self) -> float:
        return float(np.mean(self.test_acc))

    @property
    def hard_population(self) -> int | None:
        return None if self.quality is None else self.quality.n_hard

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "phase": self.phase,
            "lr": self.lr,
            "test_acc_1": self.test_acc[0],
            "test_acc_2": self.test_acc[1],
            "test_acc_mean": self.test_acc_mean,
            "hard_population": self.hard_population,
            "partition": None if self.quality is None else self.quality.to_dict(),
            "loss_net1": self.losses[0].to_dict() if self.losses else None,
            "loss_net2": self.losses[1].to_dict() if self.losses else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass
class TrainResult:
    states: list[ClassifierState]
    traces: list[EpochTrace]
    data: PreparedData
    final_partition: PartitionResult | None

    def trace_jsonl(self) -> str:
        return "".join(t.to_json() + "\n" for t in self.traces)


def init_pair(cfg: ExperimentConfig, n_features: int, n_classes: int) -> list[ClassifierState]:
    seeds = seed_streams(cfg.seed)
    sizes = [n_features, *cfg.model.hidden, n_classes]
    return [init_classifier(sizes, cfg.model.activation, seeds[k]) for k in (NET1_SEED, NET2_SEED)]


def accuracy(state: ClassifierState, data: LabeledDataset) -> float:
    pred = np.argmax(forward(state, data.features), axis=1)
    return float(np.mean(pred == data.true_labels))


def _batches(n: int, batch_size: int, rng: np.random.Generator):
    order = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size]


def _mean_breakdown(parts: list[LossBreakdown]) -> LossBreakdown:
    if not parts:
        return LossBreakdown()
    return LossBreakdown(
        loss_c=float(np.mean([p.loss_c for p in parts])),
        loss_h=float(np.mean([p.loss_h for p in parts])),
        loss_n=float(np.mean([p.loss_n for p in parts])),
        loss_total=float(np.mean([p.loss_total for p in parts])),
        n_clean=sum(p.n_clean for p in parts),
        n_hard=sum(p.n_hard for p in parts),
        n_noisy=sum(p.n_noisy for p in parts),
    )


def warm_up_epoch(states, train: LabeledDataset, cfg: ExperimentConfig, epoch: int) -> list[LossBreakdown]:
    """One epoch of plain cross-entropy on every given label, for each network."""
    codes = np.full(len(train), CLEAN)
    weights = StrategyWeights(cfg.strategy.lambda_h, cfg.strategy.lambda_n, cfg.strategy.allow_ablation)
    out = []
    for state in states:
        parts = []
        for b in _batches(len(train), cfg.schedule.batch_size, state.rng):
            plan = BatchPlan(train.features[b], train.given_labels[b], codes[b], "drop")
            bd, grads = total_loss(state, plan, weights)
            sgd_step(state, grads, cfg.optimizer, epoch)
            parts.append(bd)
        out.append(_mean_breakdown(parts))
    return out


def warm_up(states, train: LabeledDataset, cfg: ExperimentConfig):
    for epoch in range(cfg.schedule.warmup_epochs):
        warm_up_epoch(states, train, cfg, epoch)
    return states


def predict_records(states, train: LabeledDataset) -> tuple[PredictionRecords, np.ndarray]:
    """Un-augmented predictions of both networks over the whole training set.

    Returns the records (loss = network-1 cross-entropy on the given label)
    and the mean of both networks' probabilities.
    """
    probs1 = forward(states[0], train.features)
    probs2 = forward(states[1], train.features)
    n = len(train)
    loss = -np.log(np.maximum(probs1[np.arange(n), train.given_labels], 1e-12))
    rec = PredictionRecords(
        train.sample_ids, np.argmax(probs1, axis=1), np.argmax(probs2, axis=1), train.given_labels, loss
    )
    return rec, 0.5 * (probs1 + probs2)


def select_partition(records: PredictionRecords, cfg: ExperimentConfig, epoch: int) -> PartitionResult:
    kind = cfg.criterion.kind
    if kind == "tripartition":
        return tripartition(records, epoch)
    if kind == "small_loss":
        return small_loss_partition(records, cfg.keep_fraction, epoch)
    if kind == "gmm":
        return gmm_partition(records, cfg.criterion.tau, epoch, seed=seed_streams(cfg.seed)[GMM_SEED] + epoch)
    # "none": every sample treated as clean
    return PartitionResult(records.sample_ids.copy(), np.full(len(records), CLEAN), records.loss.copy(), epoch)


def run_epoch(
    states,
    train: LabeledDataset,
    cfg: ExperimentConfig,
    epoch: int,
    partition: PartitionResult | None = None,
) -> tuple[list[ClassifierState], PartitionResult, list[LossBreakdown]]:
    """Partition once from both networks' predictions, then update network 1 and network 2 in turn.

    Passing ``partition`` skips the prediction step and reuses it as is.
    """
    records, mean_probs = predict_records(states, train)
    if partition is None:
        partition = select_partition(records, cfg, epoch)
    if not np.array_equal(partition.sample_ids, train.sample_ids):
        raise ValueError("partition does not cover the training set in order")
    st = cfg.strategy
    weights = StrategyWeights(st.lambda_h, st.lambda_n, st.allow_ablation)
    targets = train.given_labels.copy()
    if st.noisy_strategy == "pseudo":
        noisy = partition.subset == 2
        targets[noisy] = np.argmax(mean_probs[noisy], axis=1)
    out = []
    for state in states:
        parts = []
        for b in _batches(len(train), cfg.schedule.batch_size, state.rng):
            plan = plan_batch(
                train.features[b],
                targets[b],
                partition.subset[b],
                st.noisy_strategy,
                st.augmentations,
                state.aug_rng,
                st.augment_labeled,
            )
            bd, grads = total_loss(state, plan, weights)
            sgd_step(state, grads, cfg.optimizer, epoch)
            parts.append(bd)
        out.append(_mean_breakdown(parts))
    return states, partition, out


def train(cfg: ExperimentConfig, data: PreparedData | None = None) -> TrainResult:
    """Warm-up followed by the partitioned training loop; one trace per epoch."""
    if data is None:
        data = prepare_data(cfg)
    tr, te = data.train, data.test
    states = init_pair(cfg, tr.features.shape[1], tr.n_classes)
    traces = []
    partition = None
    for epoch in range(cfg.schedule.max_epochs):
        lr = cfg.optimizer.lr_at(epoch)
        if epoch < cfg.schedule.warmup_epochs:
            losses = warm_up_epoch(states, tr, cfg, epoch)
            quality = None
        else:
            states, partition, losses = run_epoch(states, tr, cfg, epoch)
            quality = score_partition(partition, tr) if cfg.criterion.kind != "none" else None
        phase = "warmup" if epoch < cfg.schedule.warmup_epochs else "train"
        traces.append(EpochTrace(epoch, phase, lr, [accuracy(s, te) for s in states], quality, losses))
    return TrainResult(states, traces, data, partition)
