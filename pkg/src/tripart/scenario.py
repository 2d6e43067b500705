"""Turn a config into concrete train/test data (with injected label noise),
plus the shipped presets."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig, NoiseConfig, parse_config
from .data import BlobSpec, LabeledDataset, gen_blobs, gen_two_moons, load_csv, split
from .losses import BatchPlan, CLEAN, StrategyWeights, total_loss
from .net import ClassifierState, OptimizerSpec, init_classifier, sgd_step
from .noise import (
    TransitionMatrix,
    build_pairflip,
    build_realistic,
    build_symmetric,
    corrupt_labels,
    extract_prototypes,
    rank_pairs,
)

# Noisy-subset weight per (dataset, noise type, ratio) used at CIFAR scale.
LAMBDA_N_PRESETS = {
    ("cifar10", "realistic", 0.1): 1, ("cifar10", "realistic", 0.2): 1, ("cifar10", "realistic", 0.3): 1,
    ("cifar10", "realistic", 0.4): 1, ("cifar10", "realistic", 0.5): 1,
    ("cifar10", "symmetric", 0.2): 1, ("cifar10", "symmetric", 0.5): 1, ("cifar10", "symmetric", 0.8): 1,
    ("cifar100", "realistic", 0.1): 10, ("cifar100", "realistic", 0.2): 30, ("cifar100", "realistic", 0.3): 30,
    ("cifar100", "realistic", 0.4): 60, ("cifar100", "realistic", 0.5): 60,
    ("cifar100", "symmetric", 0.2): 10, ("cifar100", "symmetric", 0.5): 60, ("cifar100", "symmetric", 0.8): 120,
}
LAMBDA_H_DEFAULT = 0.6


def default_lambda_n(n_classes: int) -> float:
    return 1.0 if n_classes <= 10 else 10.0


def seed_streams(master: int, n: int = 8) -> list[int]:
    """Independent integer seeds derived from one master seed."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(master).spawn(n)]


# indices into seed_streams()
DATA_SEED, SPLIT_SEED, PROTO_SEED, NOISE_SEED, NET1_SEED, NET2_SEED, GMM_SEED = range(7)


@dataclass
class PreparedData:
    train: LabeledDataset
    test: LabeledDataset
    matrix: TransitionMatrix
    prototype_ranking: list | None = None


def build_dataset(cfg: ExperimentConfig, seed: int) -> LabeledDataset:
    ds = cfg.dataset
    if ds.generator == "blobs":
        return gen_blobs(
            BlobSpec(
                n_classes=ds.n_classes,
                samples_per_class=ds.samples_per_class,
                n_features=ds.n_features,
                std=ds.std,
                radius=ds.radius,
                overlap_pairs=[tuple(p) for p in ds.overlap_pairs],
                seed=seed,
            )
        )
    if ds.generator == "moons":
        return gen_two_moons(ds.n_samples, ds.moons_noise, seed)
    return load_csv(ds.path, ds.n_classes)


def train_plain(state: ClassifierState, data: LabeledDataset, labels, spec: OptimizerSpec, epochs: int, batch_size: int):
    """Plain cross-entropy training; used for the prototype network."""
    n = len(data)
    codes = np.full(n, CLEAN)
    weights = StrategyWeights()
    for epoch in range(epochs):
        order = state.rng.permutation(n)
        for start in range(0, n, batch_size):
            b = order[start : start + batch_size]
            plan = BatchPlan(data.features[b], labels[b], codes[b], "drop")
            _, grads = total_loss(state, plan, weights)
            sgd_step(state, grads, spec, epoch)
    return state


def build_matrix(cfg: ExperimentConfig, train: LabeledDataset, proto_seed: int) -> tuple[TransitionMatrix, list | None]:
    nz: NoiseConfig = cfg.noise
    c = train.n_classes
    if nz.matrix_path:
        return TransitionMatrix.from_csv(nz.matrix_path, nz.r), None
    if nz.type == "none" or nz.r == 0 and nz.type != "realistic":
        return TransitionMatrix(np.eye(c), 0.0), None
    if nz.type == "symmetric":
        return build_symmetric(c, nz.r), None
    if nz.type == "pairflip":
        return build_pairflip(c, nz.r, nz.pair_map), None
    sizes = [train.features.shape[1], *cfg.model.hidden, c]
    probe = init_classifier(sizes, cfg.model.activation, proto_seed)
    spec = OptimizerSpec(cfg.optimizer.learning_rate, cfg.optimizer.momentum, cfg.optimizer.weight_decay)
    train_plain(probe, train, train.true_labels, spec, nz.prototype_epochs, cfg.schedule.batch_size)
    ranking = rank_pairs(extract_prototypes(probe))
    return build_realistic(ranking, nz.K, nz.level_weights, nz.r, c), ranking.pairs


def prepare_data(cfg: ExperimentConfig) -> PreparedData:
    seeds = seed_streams(cfg.seed)
    full = build_dataset(cfg, seeds[DATA_SEED])
    if cfg.dataset.generator == "csv":
        # a CSV may already carry corrupted labels; noise is applied to the true labels only if requested
        full = full if cfg.noise.type == "none" else full.with_given(full.true_labels)
    train, test = split(full, cfg.dataset.test_fraction, seeds[SPLIT_SEED])
    test = test.with_given(test.true_labels)
    matrix, ranking = build_matrix(cfg, train, seeds[PROTO_SEED])
    if not np.array_equal(matrix.entries, np.eye(train.n_classes)):
        train = corrupt_labels(train, matrix, seeds[NOISE_SEED])
    return PreparedData(train, test, matrix, ranking)


def acceptance_config(seed: int = 0, **overrides) -> ExperimentConfig:
    """Desk-scale scenario: 4 Gaussian classes in 2-D, one strongly overlapping
    pair, 2000 samples, 30% realistic noise."""
    d = {
        "schema_version": 1,
        "seed": seed,
        "dataset": {
            "generator": "blobs",
            "n_classes": 4,
            "samples_per_class": 500,
            "n_features": 2,
            "std": 1.0,
            "radius": 3.0,
            "overlap_pairs": [[0, 1, 0.6]],
            "test_fraction": 0.2,
        },
        "noise": {"type": "realistic", "r": 0.3, "K": 3, "level_weights": [0.9, 0.6, 0.3], "prototype_epochs": 30},
        "model": {"hidden": [32], "activation": "relu"},
        "optimizer": {"learning_rate": 0.02, "momentum": 0.9, "weight_decay": 5e-4, "lr_schedule": [[30, 0.1], [40, 0.1]]},
        "schedule": {"warmup_epochs": 6, "max_epochs": 60, "batch_size": 64},
        "strategy": {
            "lambda_h": LAMBDA_H_DEFAULT,
            "lambda_n": default_lambda_n(4),
            "noisy_strategy": "self",
            "augmentations": [{"kind": "jitter", "sigma": 0.15}],
        },
        "criterion": {"kind": "tripartition", "tau": 0.5},
    }
    for dotted, value in overrides.items():
        section, _, key = dotted.partition("__")
        if key:
            d.setdefault(section, {})[key] = value
        else:
            d[section] = value
    return parse_config(d)
