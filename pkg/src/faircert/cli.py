"""Command-line harness.

Subcommands:
  ingest        build dataset cache, schema manifest, reject report and
                split summary
  train         train a single-lambda representation and save it
  certify       emit a certificate report for a saved representation
  sweep         run the full lambda-sweep protocol
  oracle-check  run the brute-force bound-verification suite
  gradcheck     finite-difference audit of the network gradients

All inputs come from flags and a flat key=value config file; exit code
2 signals a usage/config error, exit code 1 a runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiment import (
    ConfigError,
    certify_representation,
    load_splits,
    parse_experiment_config,
    run_ingest,
    run_sweep,
)
from .neural import TrainConfig, gradient_audit
from .oracle import run_verification
from .representation import load_representation, save_representation, train_fair_representation


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="faircert")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, config_required: bool = True) -> None:
        p.add_argument("--config", required=config_required, help="key=value config file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the output directory")

    p_ingest = sub.add_parser("ingest", help="build dataset cache and summary")
    add_common(p_ingest)

    p_train = sub.add_parser("train", help="train one representation")
    add_common(p_train)
    p_train.add_argument("--lambda", dest="lam", type=float, required=True)

    p_certify = sub.add_parser("certify", help="certificate report for a saved model")
    add_common(p_certify)
    p_certify.add_argument("--model", required=True, help="saved representation file")

    p_sweep = sub.add_parser("sweep", help="full lambda-sweep protocol")
    add_common(p_sweep)
    p_sweep.add_argument("--save-models", action="store_true")

    p_oracle = sub.add_parser("oracle-check", help="brute-force bound verification")
    p_oracle.add_argument("--seed", type=int, default=0)
    p_oracle.add_argument("--joints", type=int, default=500)

    p_grad = sub.add_parser("gradcheck", help="finite-difference gradient audit")
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.add_argument("--architectures", type=int, default=20)

    return parser


def _load_config(args: argparse.Namespace):
    overrides: dict[str, str] = {}
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.out is not None:
        overrides["out_dir"] = args.out
    return parse_experiment_config(args.config, overrides)


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "ingest":
            config = _load_config(args)
            paths = run_ingest(config)
            print(Path(paths["summary"]).read_text(), end="")
            for name, path in paths.items():
                print(f"{name}: {path}")
            return 0

        if args.command == "train":
            config = _load_config(args)
            train_ds, _ = load_splits(config)
            result = train_fair_representation(
                train_ds.features, train_ds.s, args.lam,
                TrainConfig(
                    epochs=config.train.epochs,
                    batch_size=config.train.batch_size,
                    learning_rate=config.train.learning_rate,
                    seed=config.seed,
                    shuffle=config.train.shuffle,
                    max_steps=config.train.max_steps,
                ),
            )
            out = Path(config.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            model_path = out / "representation.npz"
            save_representation(model_path, result.model)
            print(f"model: {model_path}")
            print(f"final_encoder_loss: {result.encoder_trace[-1]!r}")
            print(f"final_adversary_loss: {result.adversary_trace[-1]!r}")
            return 0

        if args.command == "certify":
            config = _load_config(args)
            model = load_representation(args.model)
            train_ds, test_ds = load_splits(config)
            outcome = certify_representation(model, train_ds, test_ds, config, config.seed)
            out = Path(config.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            report_path = out / "certificate_report.txt"
            report_path.write_text(outcome.report.to_kv_text())
            (out / "certificate_report.json").write_text(outcome.report.to_json())
            print(outcome.report.to_kv_text(), end="")
            print(f"report: {report_path}")
            return 0

        if args.command == "sweep":
            config = _load_config(args)
            result = run_sweep(config, save_models=args.save_models)
            print(f"rows: {len(result.rows)}")
            print(f"failures: {len(result.failures)}")
            for lam, reason in result.failures:
                print(f"  lambda={lam}: {reason}", file=sys.stderr)
            print(f"table: {Path(config.out_dir) / 'sweep_table.csv'}")
            return 0

        if args.command == "oracle-check":
            summary = run_verification(seed=args.seed, n_joints=args.joints)
            print(f"joints_checked: {summary.joints_checked}")
            print(f"violations: {summary.violations}")
            print(f"max_sp_tightness_gap: {summary.max_sp_tightness_gap:.3e}")
            print(f"max_di_tightness_gap: {summary.max_di_tightness_gap:.3e}")
            print(f"max_dominance_gap: {summary.max_dominance_gap:.3e}")
            print(f"max_rys_gap: {summary.max_rys_gap:.3e}")
            if not summary.ok:
                print("error: bound verification reported violations", file=sys.stderr)
                return 1
            return 0

        if args.command == "gradcheck":
            worst = gradient_audit(n_architectures=args.architectures, seed=args.seed)
            print(f"max_relative_error: {worst:.3e}")
            if worst >= 1e-5:
                print("error: gradient audit exceeded tolerance 1e-5", file=sys.stderr)
                return 1
            return 0

        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
