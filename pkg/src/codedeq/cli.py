"""Command line entry point: ``codedeq {generate,train,evaluate,sweep,report}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .harness.config import VARIANTS, ExperimentConfig, load_config
from .harness.experiment import Experiment
from .harness.report import BerReport, merge_reports


def _common(p: argparse.ArgumentParser, variant=False, snr=False, snr_list=False):
    p.add_argument("--config", help="key=value experiment config file")
    p.add_argument("--seed", type=int, help="override the experiment seed")
    p.add_argument("--desk-scale", action="store_true",
                   help="use the reduced desk-scale bit counts")
    p.add_argument("--output-dir", help="override output_dir from the config")
    p.add_argument("-v", "--verbose", action="store_true")
    if variant:
        p.add_argument("--variant", required=True, choices=VARIANTS)
    if snr:
        p.add_argument("--snr", type=float, required=True, help="SNR point in dB")
    if snr_list:
        p.add_argument("--snr", type=float, nargs="+", help="restrict to these SNR points")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="codedeq", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate and persist train/test datasets")
    _common(p, snr_list=True)

    p = sub.add_parser("train", help="train one neural equalizer at one SNR")
    _common(p, variant=True, snr=True)

    p = sub.add_parser("evaluate", help="evaluate one (variant, SNR) cell")
    _common(p, variant=True, snr=True)

    p = sub.add_parser("sweep", help="run the full (variant x SNR) grid")
    _common(p, snr_list=True)
    p.add_argument("--variant", nargs="+", choices=VARIANTS, help="restrict variants")
    p.add_argument("--fresh", action="store_true", help="ignore cached cells and models")

    p = sub.add_parser("report", help="merge cell/report CSVs into one report")
    p.add_argument("inputs", nargs="*", help="CSV files (default: <output-dir>/cells/*.csv)")
    p.add_argument("--output-dir", default="runs/default")
    p.add_argument("-o", "--output", help="write merged CSV here (default: stdout table)")
    return parser


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.desk_scale:
        changes["desk_scale"] = True
    if args.output_dir:
        changes["output_dir"] = args.output_dir
    snr = getattr(args, "snr", None)
    if isinstance(snr, list) and snr:
        changes["snr_list"] = tuple(snr)
    variant = getattr(args, "variant", None)
    if isinstance(variant, list) and variant:
        changes["variants"] = tuple(variant)
    if getattr(args, "fresh", False):
        changes["resume"] = False
    return cfg.replace(**changes)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        if args.command == "report":
            inputs = args.inputs or sorted(str(p) for p in Path(args.output_dir, "cells").glob("*.csv"))
            if not inputs:
                print("no CSV inputs found", file=sys.stderr)
                return 1
            report = merge_reports(inputs)
            if args.output:
                report.write_csv(args.output)
            else:
                print(report.format_table())
            return 0

        cfg = _config(args)
        exp = Experiment(cfg)
        if args.command == "generate":
            exp.write_config()
            for snr in cfg.snr_list:
                for role in ("train", "test"):
                    exp.dataset(role, snr)
                    print(exp.dataset_path(role, snr))
                exp.dataset("test", snr, isi=False)
                print(exp.dataset_path("test", snr, isi=False))
        elif args.command == "train":
            exp.write_config()
            est, rel = exp.train(args.variant, args.snr)
            print(f"{exp.root / rel}  epochs={len(est.training_log_)} best={est.best_epoch_}")
        elif args.command == "evaluate":
            exp.write_config()
            row = exp.evaluate(args.variant, args.snr)
            print(BerReport([row]).to_csv(), end="")
        elif args.command == "sweep":
            report = exp.run()
            print(report.format_table())
            print(f"wrote {exp.root / 'report.csv'}")
    except (OSError, ValueError) as exc:
        print(f"codedeq: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
