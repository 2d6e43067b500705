"""Command-line entry point.

Exit status: 0 on success, 1 on validation errors, 2 on runtime failures.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, ExperimentConfig
from .data import load_csv
from .experiment import SWEEP_PARAMS, check_grad_suite, compare_criteria, gen_noise, run_experiment, sweep

GRAD_TOL = 1e-4


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _load(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def cmd_run(args) -> int:
    report, _ = run_experiment(_load(args), args.out)
    print(json.dumps(report.summary(), indent=2))
    return 0


def cmd_compare(args) -> int:
    cfg = _load(args)
    criteria = [c.strip() for c in args.criteria.split(",") if c.strip()]
    strategies = [s.strip() for s in args.strategies.split(",")] if args.strategies else None
    reports = compare_criteria(cfg, criteria, args.out, strategies)
    print("criterion,strategy,mean_clean_purity,mean_noisy_purity,final_acc_mean")
    for (crit, strat), rep in reports.items():
        print(f"{crit},{strat},{rep.mean_purity('clean_purity')},{rep.mean_purity('noisy_purity')},{rep.final_acc_mean:.4f}")
    return 0


def cmd_sweep(args) -> int:
    rows = sweep(_load(args), args.param, _floats(args.values), args.out, args.allow_ablation)
    print(f"{args.param},final_acc,best_acc")
    for v, final, best in rows:
        print(f"{v},{final:.4f},{best:.4f}")
    return 0


def cmd_gen_noise(args) -> int:
    cfg = ExperimentConfig.load(args.config) if args.config else None
    dataset = load_csv(args.data) if args.data else None
    if args.type == "realistic" and dataset is None and cfg is None:
        from .scenario import acceptance_config

        cfg = acceptance_config(args.seed or 0)
    matrix, _ = gen_noise(
        args.type,
        args.r,
        n_classes=args.classes,
        k=args.K,
        level_weights=_floats(args.weights),
        pair_map=[int(v) for v in args.pairs.split(",")] if args.pairs else None,
        dataset=dataset,
        cfg=cfg,
        seed=args.seed or 0,
        out_dir=args.out,
    )
    for row in matrix.entries:
        print(",".join(f"{v:.4f}" for v in row))
    print(f"max |row sum - 1| = {matrix.row_sum_error():.3e}")
    return 0


def cmd_check_grad(args) -> int:
    worst = check_grad_suite(args.nets, args.seed or 0)
    for kind, err in worst.items():
        print(f"{kind:12s} max relative error {err:.3e} {'PASS' if err < GRAD_TOL else 'FAIL'}")
    return 0 if all(e < GRAD_TOL for e in worst.values()) else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tripart", description="Noisy-label partition laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override the master seed")
        p.add_argument("--out", default=None, help="output directory")

    p = sub.add_parser("run", help="train once and write trace/report/partition files")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare-criteria", help="compare partition criteria on shared data")
    common(p)
    p.add_argument("--criteria", default="tripartition,small_loss,gmm")
    p.add_argument("--strategies", default=None, help="noisy-subset strategies to cross with criteria")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="sweep one parameter")
    common(p)
    p.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--allow-ablation", action="store_true", help="permit lambda_h outside (0, 1)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen-noise", help="build a transition matrix and corrupt a dataset")
    common(p, config_required=False)
    p.add_argument("--type", required=True, choices=("symmetric", "pairflip", "realistic"))
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--classes", type=int, default=None)
    p.add_argument("--K", type=int, default=3)
    p.add_argument("--weights", default="0.9,0.6,0.3")
    p.add_argument("--pairs", default=None, help="pair-flip partner of each class, comma-separated")
    p.add_argument("--data", default=None, help="dataset CSV (id,given_label,true_label,f0,...)")
    p.set_defaults(func=cmd_gen_noise)

    p = sub.add_parser("check-grad", help="finite-difference gradient checks")
    p.add_argument("--nets", type=int, default=20)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_check_grad)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except (FileNotFoundError, ValueError) as exc:
        if isinstance(exc, FileNotFoundError) and getattr(args, "config", None) and not Path(args.config).exists():
            print(f"validation error: config not found: {args.config}", file=sys.stderr)
            return 1
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
