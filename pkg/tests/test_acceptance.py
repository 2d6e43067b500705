"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The training criteria share one module-scoped set of runs on the acceptance
scenario (5 seeds, several criterion/strategy variants on shared data).
"""
import itertools
import time

import numpy as np
import pytest
from scipy import stats

from tripart.cotrain import init_pair, predict_records, run_epoch, train, warm_up
from tripart.data import LabeledDataset
from tripart.experiment import check_grad_suite
from tripart.losses import CLEAN, HARD, NOISY, StrategyWeights, plan_batch, total_loss
from tripart.noise import (
    ClassPrototypes,
    build_pairflip,
    build_realistic,
    build_symmetric,
    corrupt_labels,
    rank_pairs,
)
from tripart.partition import PredictionRecords, fit_gmm_1d, tripartition
from tripart.scenario import acceptance_config, prepare_data

from conftest import ACCEPTANCE_LINES
from test_noise import brute_force_realistic

SEEDS = range(5)
VARIANTS = {
    "tripartition": ("tripartition", "self"),
    "small_loss": ("small_loss", "self"),
    "gmm": ("gmm", "self"),
    "drop": ("tripartition", "drop"),
    "pseudo": ("tripartition", "pseudo"),
}


def report(n, name, ok, detail=""):
    line = f"CRITERION {n} {name}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def _config(seed, criterion, strategy):
    cfg = acceptance_config(seed, criterion={"kind": criterion, "tau": 0.5})
    cfg.strategy.noisy_strategy = strategy
    return cfg


@pytest.fixture(scope="module")
def runs():
    """Every variant for every seed, trained once on that seed's shared data."""
    out = {}
    for seed in SEEDS:
        data = prepare_data(acceptance_config(seed))
        for name, (criterion, strategy) in VARIANTS.items():
            out[seed, name] = train(_config(seed, criterion, strategy), data)
    return out


def _post_warmup(result):
    return [t for t in result.traces if t.phase != "warmup"]


# -- exact math and oracle checks --------------------------------------------


def _truth(p1, p2, gl):
    if p1 == gl and p2 == gl:
        return CLEAN
    if p1 != gl and p2 != gl:
        return NOISY
    return HARD


def test_c01_partition_truth_table():
    start = time.perf_counter()
    combos = list(itertools.product(range(3), repeat=3))
    p1, p2, gl = (np.array(c) for c in zip(*combos))
    part = tripartition(PredictionRecords(np.arange(27), p1, p2, gl, np.zeros(27)))
    table_ok = part.subset.tolist() == [_truth(*c) for c in combos]

    rng = np.random.default_rng(0)
    props_ok = True
    for _ in range(10_000):
        n = int(rng.integers(1, 30))
        c = int(rng.integers(2, 6))
        ids = rng.permutation(10 * n)[:n]
        p1, p2, gl = rng.integers(0, c, (3, n))
        part = tripartition(PredictionRecords(ids, p1, p2, gl, np.zeros(n)))
        groups = [set(part.clean_ids.tolist()), set(part.hard_ids.tolist()), set(part.noisy_ids.tolist())]
        disjoint = sum(len(g) for g in groups) == len(set().union(*groups))
        props_ok &= disjoint and set().union(*groups) == set(ids.tolist())
    elapsed = time.perf_counter() - start
    ok = report(1, "partition truth table", table_ok and props_ok and elapsed < 1.0, f"{elapsed:.2f}s")
    assert ok


def test_c02_gradient_correctness():
    start = time.perf_counter()
    worst = check_grad_suite(n_nets=20, seed=0)
    elapsed = time.perf_counter() - start
    ok = all(err < 1e-4 for err in worst.values()) and elapsed < 30
    detail = ", ".join(f"{k}={v:.1e}" for k, v in worst.items()) + f", {elapsed:.1f}s"
    assert report(2, "gradient correctness", ok, detail)


def test_c03_transition_matrix_exactness():
    start = time.perf_counter()
    rng = np.random.default_rng(0)
    ok = True
    for _ in range(50):
        c = int(rng.integers(2, 9))
        k = int(rng.integers(1, min(6, c * (c - 1) // 2) + 1))
        r = float(rng.random() * 0.49)
        w = sorted(rng.uniform(0.05, 1.0, 3), reverse=True)
        ranking = rank_pairs(ClassPrototypes(rng.normal(size=(c, 4))))
        m = build_realistic(ranking, k, w, r)
        expected = brute_force_realistic(ranking.pairs, c, k, w, r)
        ok &= np.allclose(m.entries, expected, rtol=0, atol=1e-12)
        ok &= m.row_sum_error() < 1e-9
        touched = np.any(m.entries - np.diag(np.diag(m.entries)) > 0, axis=1)
        diag = np.diag(m.entries)
        ok &= bool(np.all(diag[touched] == 1 - r) and np.all(diag[~touched] == 1.0))
        ok &= build_symmetric(c, r).row_sum_error() < 1e-9
        ok &= bool(np.all(np.diag(build_symmetric(c, r).entries) == 1 - r))
        ok &= build_pairflip(c, r).row_sum_error() < 1e-9
    elapsed = time.perf_counter() - start
    assert report(3, "transition-matrix exactness", ok and elapsed < 5, f"50 instances, {elapsed:.2f}s")


def test_c04_corruption_statistics():
    start = time.perf_counter()
    rng = np.random.default_rng(0)
    n, c = 100_000, 10
    true = rng.integers(0, c, n)
    data = LabeledDataset(np.zeros((n, 1)), true, true, np.arange(n), c)
    matrix = build_symmetric(c, 0.5)
    out = corrupt_labels(data, matrix, 1)
    frac = float(out.noisy_mask.mean())
    observed = np.zeros((c, c))
    np.add.at(observed, (true, out.given_labels), 1)
    expected = matrix.entries * np.bincount(true, minlength=c)[:, None]
    chi2 = float(((observed - expected) ** 2 / expected).sum())
    dof = c * (c - 1)
    p = float(stats.chi2.sf(chi2, dof))
    elapsed = time.perf_counter() - start
    ok = abs(frac - 0.5) <= 0.01 and p > 0.01 and elapsed < 10
    assert report(4, "corruption statistics", ok, f"flip={frac:.4f}, chi2 p={p:.3f}")


def test_c05_gmm_recovery():
    start = time.perf_counter()
    hits = 0
    for seed in range(5):
        rng = np.random.default_rng(seed)
        x = np.concatenate([rng.normal(0.1, 0.05, 2500), rng.normal(0.8, 0.1, 2500)])
        fit = fit_gmm_1d(x, seed=seed)
        lo, hi = sorted(fit.means)
        ll = np.array(fit.log_likelihood)
        monotone = bool(np.all(np.diff(ll) >= -1e-9 * np.abs(ll[:-1])))
        hits += abs(lo - 0.1) < 0.05 and abs(hi - 0.8) < 0.05 and monotone
    elapsed = time.perf_counter() - start
    assert report(5, "GMM recovery", hits == 5 and elapsed < 5, f"{hits}/5 seeds")


def test_c10_noisy_labels_do_not_reach_gradients():
    cfg = acceptance_config(0)
    data = prepare_data(cfg)
    states = warm_up(init_pair(cfg, 2, 4), data.train, cfg)
    records, _ = predict_records(states, data.train)
    part = tripartition(records, cfg.schedule.warmup_epochs)
    noisy = np.flatnonzero(part.subset == NOISY)
    given = data.train.given_labels.copy()
    given[noisy] = np.random.default_rng(0).permutation(given[noisy])
    given[noisy] = (given[noisy] + 1) % 4
    permuted = data.train.with_given(given)

    # single-step gradients on the whole training set
    weights = StrategyWeights(cfg.strategy.lambda_h, cfg.strategy.lambda_n)
    grads = []
    for labels in (data.train.given_labels, given):
        plan = plan_batch(data.train.features, labels, part.subset, "self",
                          cfg.strategy.augmentations, np.random.default_rng(5))
        grads.append(np.concatenate([g.ravel() for g in total_loss(states[0], plan, weights)[1].flat()]))
    grad_diff = float(np.max(np.abs(grads[0] - grads[1])))

    # one full co-training epoch with the partition held fixed
    a = [s.copy() for s in states]
    b = [s.copy() for s in states]
    run_epoch(a, data.train, cfg, cfg.schedule.warmup_epochs, partition=part)
    run_epoch(b, permuted, cfg, cfg.schedule.warmup_epochs, partition=part)
    param_diff = max(float(np.max(np.abs(x - y))) for sa, sb in zip(a, b) for x, y in zip(sa.params(), sb.params()))
    ok = noisy.size > 0 and grad_diff <= 1e-12 and param_diff <= 1e-12
    assert report(10, "label-freeness", ok, f"{noisy.size} noisy, grad diff {grad_diff:.1e}, epoch diff {param_diff:.1e}")


# -- acceptance-scenario training runs ---------------------------------------


def test_c06_purity_ordering(runs):
    wins, rows = 0, []
    for seed in SEEDS:
        purity = {}
        for name in ("tripartition", "small_loss", "gmm"):
            vals = [t.quality.clean_purity for t in _post_warmup(runs[seed, name]) if t.quality.clean_purity is not None]
            purity[name] = float(np.mean(vals))
        win = purity["tripartition"] >= purity["small_loss"] and purity["tripartition"] >= purity["gmm"]
        wins += win
        rows.append("/".join(f"{purity[k]:.3f}" for k in ("tripartition", "small_loss", "gmm")))
    assert report(6, "purity ordering", wins >= 4, f"{wins}/5 seeds; tri/small/gmm {', '.join(rows)}")


def test_c07_loss_ordering(runs):
    hits, rows = 0, []
    for seed in SEEDS:
        post = _post_warmup(runs[seed, "tripartition"])
        best = max(post, key=lambda t: t.test_acc_mean)
        m = {k: best.quality.loss_stats[k].mean for k in ("clean", "hard", "noisy")}
        ok = None not in m.values() and m["clean"] < m["hard"] < m["noisy"]
        hits += ok
        rows.append(f"ep{best.epoch}:" + "/".join("-" if v is None else f"{v:.3f}" for v in m.values()))
    assert report(7, "loss ordering", hits >= 4, f"{hits}/5 seeds; {', '.join(rows)}")


def test_c08_hard_subset_shrinks(runs):
    hits, rows = 0, []
    for seed in SEEDS:
        post = _post_warmup(runs[seed, "tripartition"])
        first, last = post[0].hard_population, post[-1].hard_population
        hits += last < first
        rows.append(f"{first}->{last}")
    assert report(8, "hard-subset shrinkage", hits >= 4, f"{hits}/5 seeds; {', '.join(rows)}")


def test_c09_strategy_ablation(runs):
    hits, soft, rows = 0, 0, []
    for seed in SEEDS:
        acc = {k: runs[seed, k].traces[-1].test_acc_mean for k in ("tripartition", "pseudo", "drop")}
        hits += acc["tripartition"] >= acc["drop"]
        soft += acc["tripartition"] > acc["pseudo"] > acc["drop"]
        rows.append("/".join(f"{v:.4f}" for v in acc.values()))
    detail = f"self>=drop {hits}/5 seeds; soft self>pseudo>drop {soft}/5; self/pseudo/drop {', '.join(rows)}"
    assert report(9, "strategy ablation direction", hits >= 4, detail)


def test_c11_determinism(runs):
    again = train(_config(0, "tripartition", "self"))
    ok = again.trace_jsonl().encode() == runs[0, "tripartition"].trace_jsonl().encode()
    assert report(11, "determinism", ok, "byte-identical trace" if ok else "traces differ")
