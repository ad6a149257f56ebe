"""Command-line entry point.

    wormlab bench run CONFIG [--seed N] [--out DIR] [--format csv|tsv|jsonl] [--workers N] [--timing]
    wormlab bench gen CONFIG [--seed N] [--out DIR]
    wormlab worm fit TRAIN.csv --model MODEL.json [--tau T] [--variant V] [--center]
    wormlab worm predict MODEL.json DATA.csv [--out PRED.csv]

Exit status: 0 success, 1 configuration or usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bench
from .dataset import import_csv, read_csv_rows
from .errors import ConfigError, WormlabError
from .worm import DEFAULT_TAU, VARIANTS, fit_worm, load_model, predict_worm, save_model

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2
REPORT_EXT = {"csv": "csv", "tsv": "tsv", "jsonl": "jsonl"}

log = logging.getLogger("wormlab")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wormlab", description="Subspace classifiers and noise-sweep benchmark.")
    parser.add_argument("-v", "--verbose", action="store_true")
    groups = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    bench_p = groups.add_parser("bench", help="benchmark harness")
    bench_cmds = bench_p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_text in (("run", "run the noise sweep"), ("gen", "write datasets only")):
        p = bench_cmds.add_parser(name, help=help_text)
        p.add_argument("config", type=Path)
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--out", type=Path, help="override output_dir")
        if name == "run":
            p.add_argument("--format", choices=bench.REPORT_FORMATS, help="override report format")
            p.add_argument("--workers", type=int, help="parallel trial workers")
            p.add_argument("--timing", action="store_true", help="record wall_time_ms")

    worm_p = groups.add_parser("worm", help="fit or apply a single model")
    worm_cmds = worm_p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fit_p = worm_cmds.add_parser("fit", help="fit a model from a labelled CSV")
    fit_p.add_argument("train", type=Path, help="CSV, one sample per row, label last")
    fit_p.add_argument("--model", type=Path, required=True, help="output model file")
    fit_p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    fit_p.add_argument("--variant", choices=VARIANTS, default="weighted_abs")
    fit_p.add_argument("--center", action="store_true")
    pred_p = worm_cmds.add_parser("predict", help="label the rows of a CSV")
    pred_p.add_argument("model", type=Path)
    pred_p.add_argument("data", type=Path, help="CSV rows; an extra last column is read as the true label")
    pred_p.add_argument("--out", type=Path, help="write predictions here instead of stdout")
    return parser


def _load_bench_config(args) -> bench.ExperimentConfig:
    config = bench.load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = str(args.out)
    if getattr(args, "format", None):
        overrides["format"] = args.format
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    if getattr(args, "timing", False):
        overrides["timing"] = True
    return replace(config, **overrides) if overrides else config


def cmd_bench_run(args) -> int:
    config = _load_bench_config(args)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = bench.run_experiment(config)
    report_path = bench.emit_report(report, config.format, out / f"report.{REPORT_EXT[config.format]}")
    plot_path = bench.emit_plot_data(report, out / "plot_data.csv")
    print(bench.report_table(report))
    print(f"\nreport: {report_path}\nplot data: {plot_path}")
    return EXIT_OK


def cmd_bench_gen(args) -> int:
    config = _load_bench_config(args)
    paths = bench.write_datasets(config, Path(config.output_dir) / "datasets")
    print(f"wrote {len(paths)} files under {Path(config.output_dir) / 'datasets'}")
    return EXIT_OK


def cmd_worm_fit(args) -> int:
    train = import_csv(args.train)
    model = fit_worm(train, args.tau, args.variant, args.center)
    save_model(model, args.model)
    print(f"classes={model.num_classes} dim={model.dim} ranks={model.ranks} -> {args.model}")
    return EXIT_OK


def cmd_worm_predict(args) -> int:
    model = load_model(args.model)
    table = read_csv_rows(args.data)
    if table.shape[1] == model.dim + 1:
        X, truth = table[:, :-1], table[:, -1].astype(np.int64)
    elif table.shape[1] == model.dim:
        X, truth = table, None
    else:
        raise ConfigError(f"{args.data}: rows have {table.shape[1]} columns, model expects {model.dim}")
    pred = predict_worm(model, X.T)
    fh = args.out.open("w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["prediction"])
        writer.writerows([int(p)] for p in pred)
    finally:
        if args.out:
            fh.close()
    if truth is not None:
        print(f"accuracy: {np.mean(pred == truth):.6g}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    ("bench", "run"): cmd_bench_run,
    ("bench", "gen"): cmd_bench_gen,
    ("worm", "fit"): cmd_worm_fit,
    ("worm", "predict"): cmd_worm_predict,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[(args.group, args.command)](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (WormlabError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
