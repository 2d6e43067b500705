"""Experiment orchestration: single runs, criterion comparisons, parameter
sweeps, noise generation and the gradient-check suite. Every output file is a
pure function of (config, seed)."""
from __future__ import annotations

import copy
import csv
import io
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import CRITERIA, ConfigError, ExperimentConfig, validate
from .cotrain import EpochTrace, TrainResult, train
from .data import LabeledDataset, save_csv
from .losses import NOISY_STRATEGIES
from .net import finite_diff_check, init_classifier
from .noise import (
    TransitionMatrix,
    build_pairflip,
    build_realistic,
    build_symmetric,
    corrupt_labels,
    extract_prototypes,
    rank_pairs,
)
from .scenario import NOISE_SEED, PROTO_SEED, build_dataset, prepare_data, seed_streams, train_plain

SWEEP_PARAMS = ("lambda_h", "lambda_n", "noise_ratio")


def write_atomic(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


@dataclass
class RunReport:
    traces: list[EpochTrace]
    final_acc: list[float]
    best_epoch: int
    best_acc: float

    @property
    def final_acc_mean(self) -> float:
        return float(np.mean(self.final_acc))

    @classmethod
    def from_traces(cls, traces: list[EpochTrace]) -> "RunReport":
        best = max(traces, key=lambda t: t.test_acc_mean)
        return cls(traces, list(traces[-1].test_acc), best.epoch, best.test_acc_mean)

    def mean_purity(self, key: str) -> float | None:
        vals = [getattr(t.quality, key) for t in self.traces if t.quality is not None]
        vals = [v for v in vals if v is not None]
        return float(np.mean(vals)) if vals else None

    def summary(self) -> dict:
        return {
            "final_acc_1": self.final_acc[0],
            "final_acc_2": self.final_acc[1],
            "final_acc_mean": self.final_acc_mean,
            "best_epoch": self.best_epoch,
            "best_acc": self.best_acc,
            "epochs": len(self.traces),
            "mean_clean_purity": self.mean_purity("clean_purity"),
            "mean_noisy_purity": self.mean_purity("noisy_purity"),
        }


def run_experiment(cfg: ExperimentConfig, out_dir=None, data=None) -> tuple[RunReport, TrainResult]:
    """Train once; optionally write trace.jsonl, report.json, partition_final.csv and config.json."""
    result = train(cfg, data)
    report = RunReport.from_traces(result.traces)
    if out_dir is not None:
        out = Path(out_dir)
        write_atomic(out / "config.json", cfg.to_json())
        write_atomic(out / "trace.jsonl", result.trace_jsonl())
        write_atomic(out / "report.json", json.dumps(report.summary(), indent=2) + "\n")
        if result.final_partition is not None:
            tmp = out / "partition_final.csv.tmp"
            result.final_partition.to_csv(tmp)
            os.replace(tmp, out / "partition_final.csv")
    return report, result


def _variant(cfg: ExperimentConfig, criterion: str | None = None, strategy: str | None = None) -> ExperimentConfig:
    c = copy.deepcopy(cfg)
    if criterion is not None:
        c.criterion.kind = criterion
    if strategy is not None:
        c.strategy.noisy_strategy = strategy
    validate(c)
    return c


def compare_criteria(
    cfg: ExperimentConfig,
    criteria: Sequence[str],
    out_dir=None,
    strategies: Sequence[str] | None = None,
) -> dict[tuple[str, str], RunReport]:
    """Run every (criterion, noisy-subset strategy) combination on one shared corrupted dataset.

    With ``strategies`` left at ``None`` only the configured strategy is used.
    Feeding one criterion's partition to several strategies is the control
    experiment for separating partition quality from learning strategy.
    """
    criteria = list(criteria)
    if len(criteria) < 2:
        raise ConfigError("criteria", "need at least two criteria to compare")
    for c in criteria:
        if c not in CRITERIA:
            raise ConfigError("criteria", f"unknown criterion {c!r}")
    strategies = [cfg.strategy.noisy_strategy] if strategies is None else list(strategies)
    for s in strategies:
        if s not in NOISY_STRATEGIES:
            raise ConfigError("strategies", f"unknown strategy {s!r}")

    data = prepare_data(cfg)
    reports = {}
    for crit in criteria:
        for strat in strategies:
            sub = None if out_dir is None else Path(out_dir) / f"{crit}__{strat}"
            reports[(crit, strat)], _ = run_experiment(_variant(cfg, crit, strat), sub, data)

    if out_dir is not None:
        epoch_rows, summary_rows = [], []
        for (crit, strat), rep in reports.items():
            for t in rep.traces:
                q = t.quality
                epoch_rows.append([
                    t.epoch, crit, strat,
                    None if q is None else q.clean_purity,
                    None if q is None else q.noisy_purity,
                    None if q is None else q.n_clean,
                    None if q is None else q.n_hard,
                    None if q is None else q.n_noisy,
                    t.test_acc_mean,
                ])
            summary_rows.append([
                crit, strat, rep.mean_purity("clean_purity"), rep.mean_purity("noisy_purity"),
                rep.final_acc_mean, rep.best_acc, rep.best_epoch,
            ])
        write_atomic(
            Path(out_dir) / "comparison_epochs.csv",
            _csv_text(["epoch", "criterion", "strategy", "clean_purity", "noisy_purity",
                       "n_clean", "n_hard", "n_noisy", "test_acc_mean"], epoch_rows),
        )
        write_atomic(
            Path(out_dir) / "comparison_summary.csv",
            _csv_text(["criterion", "strategy", "mean_clean_purity", "mean_noisy_purity",
                       "final_acc_mean", "best_acc", "best_epoch"], summary_rows),
        )
    return reports


def _apply_sweep_value(cfg: ExperimentConfig, param: str, value: float, allow_ablation: bool) -> ExperimentConfig:
    c = copy.deepcopy(cfg)
    if param == "lambda_h":
        c.strategy.lambda_h = float(value)
        c.strategy.allow_ablation = c.strategy.allow_ablation or allow_ablation
    elif param == "lambda_n":
        c.strategy.lambda_n = float(value)
    else:
        c.noise.r = float(value)
    validate(c)
    return c


def sweep(
    cfg: ExperimentConfig,
    param: str,
    values: Sequence[float],
    out_dir=None,
    allow_ablation: bool = False,
) -> list[tuple[float, float, float]]:
    """One run per value with shared seeds; returns (value, final acc, best acc) rows."""
    if param not in SWEEP_PARAMS:
        raise ConfigError("parameter", f"must be one of {SWEEP_PARAMS}")
    if len(values) < 2:
        raise ConfigError("values", "need at least two values")
    # validate every value before any compute
    variants = []
    for v in values:
        try:
            variants.append(_apply_sweep_value(cfg, param, v, allow_ablation))
        except ConfigError as exc:
            raise ConfigError(f"values[{v}]", str(exc)) from None
    # datasets depend on the noise ratio, so only reuse them for lambda sweeps
    shared = prepare_data(cfg) if param != "noise_ratio" else None
    rows = []
    for v, c in zip(values, variants):
        sub = None if out_dir is None else Path(out_dir) / f"{param}={v}"
        rep, _ = run_experiment(c, sub, shared)
        rows.append((float(v), rep.final_acc_mean, rep.best_acc))
    if out_dir is not None:
        write_atomic(Path(out_dir) / "sweep.csv", _csv_text([param, "final_acc", "best_acc"], rows))
    return rows


def gen_noise(
    noise_type: str,
    r: float,
    n_classes: int | None = None,
    k: int = 3,
    level_weights: Sequence[float] = (0.9, 0.6, 0.3),
    pair_map: Sequence[int] | None = None,
    dataset: LabeledDataset | None = None,
    cfg: ExperimentConfig | None = None,
    seed: int = 0,
    out_dir=None,
) -> tuple[TransitionMatrix, LabeledDataset | None]:
    """Build a transition matrix and, when a dataset is available, corrupt it.

    Realistic noise trains a prototype network on the clean labels first.
    """
    if not 0 <= r < 1:
        raise ConfigError("r", "must lie in [0, 1)")
    seeds = seed_streams(seed)
    if dataset is None and cfg is not None:
        dataset = build_dataset(cfg, seeds[0])
    c = dataset.n_classes if dataset is not None else n_classes
    if c is None:
        raise ConfigError("classes", "needed when no dataset is given")
    try:
        if noise_type == "symmetric":
            matrix = build_symmetric(c, r)
        elif noise_type == "pairflip":
            matrix = build_pairflip(c, r, pair_map)
        elif noise_type == "realistic":
            if dataset is None:
                raise ConfigError("data", "realistic noise needs a dataset to train prototypes on")
            base = cfg if cfg is not None else ExperimentConfig()
            probe = init_classifier([dataset.features.shape[1], *base.model.hidden, c], base.model.activation, seeds[PROTO_SEED])
            spec = copy.deepcopy(base.optimizer)
            spec.lr_schedule = []
            train_plain(probe, dataset, dataset.true_labels, spec, base.noise.prototype_epochs, base.schedule.batch_size)
            matrix = build_realistic(rank_pairs(extract_prototypes(probe)), k, level_weights, r, c)
        else:
            raise ConfigError("type", f"unknown noise type {noise_type!r}")
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(noise_type, str(exc)) from None
    corrupted = None if dataset is None else corrupt_labels(dataset, matrix, seeds[NOISE_SEED])
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        matrix.to_csv(out / "matrix.csv")
        if corrupted is not None:
            save_csv(corrupted, out / "dataset.csv")
    return matrix, corrupted


def check_grad_suite(n_nets: int = 20, seed: int = 0) -> dict[str, float]:
    """Worst finite-difference error per loss over random micro networks."""
    rng = np.random.default_rng(seed)
    worst = {kind: 0.0 for kind in ("ce", "hard", "consistency", "total")}
    for i in range(n_nets):
        d, h, c = int(rng.integers(2, 5)), int(rng.integers(3, 9)), int(rng.integers(2, 6))
        state = init_classifier([d, h, c], "tanh" if i % 2 else "relu", int(rng.integers(2**31)))
        x = rng.normal(size=(8, d))
        y = rng.integers(0, c, size=8)
        for kind in worst:
            err = finite_diff_check(state, x, y, kind, seed=i)
            worst[kind] = max(worst[kind], err)
    return worst
