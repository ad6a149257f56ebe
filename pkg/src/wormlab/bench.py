"""Noise-sweep benchmark: configuration, experiment runner and report writers.

Configuration files are flat ``key = value`` text. ``#`` starts a comment,
list values are comma separated, and unknown keys are rejected. See
``configs/benchmark.cfg`` for every key with its default.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .baselines import SVM_NAME, KnnModel, fit_linear_svm, predict_knn, predict_omp, predict_svm
from .dataset import LabeledDataset, export_csv
from .errors import ConfigError, WormlabError
from .regression import RegularizationParams
from .subspace import (
    RULE_KINDS,
    UNION_SOLVERS,
    DecisionRule,
    fit_raw_dictionaries,
    predict_nearest_subspace,
    predict_union_subspace,
)
from .synthetic import (
    NOISE_KINDS,
    GeneratorConfig,
    NoiseSpec,
    clean_split,
    derive_seed,
    measure_snr,
    noisy_from_clean,
)
from .worm import VARIANTS, fit_worm, predict_worm

REPORT_FORMATS = ("csv", "tsv", "jsonl")
REPORT_COLUMNS = (
    "classifier",
    "noise_kind",
    "noise_level",
    "mean_snr_db",
    "mean_accuracy",
    "accuracy_stddev",
    "trials",
    "wall_time_ms",
    "error",
)

# default noise grids, five increasing levels per kind
DEFAULT_SWEEP: tuple[tuple[str, tuple[float, ...]], ...] = (
    ("gaussian", (0.0, 0.03, 0.06, 0.09, 0.12)),
    ("salt_pepper", (0.0, 0.05, 0.1, 0.15, 0.2)),
    ("multiplicative", (0.0, 1.0, 2.0, 3.0, 4.0)),
)

# classifier kind -> {param: (parser, default)}
CLASSIFIER_PARAMS: dict[str, dict[str, tuple[Callable, object]]] = {}


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _choice(options):
    def parse(text: str) -> str:
        text = text.strip()
        if text not in options:
            raise ValueError(f"{text!r} is not one of {', '.join(options)}")
        return text

    return parse


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _name_list(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


CLASSIFIER_PARAMS.update(
    {
        "worm": {
            "tau": (float, 0.5),
            "variant": (_choice(VARIANTS), "weighted_abs"),
            "center": (_parse_bool, False),
        },
        "knn": {"k": (int, 1)},
        "svm": {"reg": (float, 1e-3), "epochs": (int, 30)},
        "omp": {"k": (int, 1), "rule": (_choice(RULE_KINDS), "reconstruction_residual"), "alpha": (float, 2.0)},
        "nearest_subspace": {"rule": (_choice(RULE_KINDS), "reconstruction_residual"), "alpha": (float, 2.0)},
        "union_subspace": {
            "solver": (_choice(UNION_SOLVERS), "least_squares"),
            "rule": (_choice(RULE_KINDS), "reconstruction_residual"),
            "alpha": (float, 2.0),
            "ridge_lambda": (float, 0.0),
            "lasso_lambda": (float, 1.0),
            "elastic_lambda1": (float, 1.0),
            "elastic_lambda2": (float, 1.0),
            "k": (int, 1),
            "tol": (float, 1e-8),
            "max_iter": (int, 10_000),
        },
    }
)


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    params: tuple[tuple[str, object], ...] = ()

    def __post_init__(self):
        if self.kind not in CLASSIFIER_PARAMS:
            raise ConfigError(f"unknown classifier {self.kind!r}")
        schema = CLASSIFIER_PARAMS[self.kind]
        merged = {name: default for name, (_, default) in schema.items()}
        for name, value in dict(self.params).items():
            if name not in schema:
                raise ConfigError(f"classifier {self.kind!r} has no parameter {name!r}")
            merged[name] = value
        object.__setattr__(self, "params", tuple(sorted(merged.items())))

    def get(self, name: str):
        return dict(self.params)[name]

    @property
    def display_name(self) -> str:
        p = dict(self.params)
        if self.kind == "worm":
            return f"WORM(tau={p['tau']:g},{p['variant']})"
        if self.kind == "knn":
            return f"KNN(k={p['k']})"
        if self.kind == "svm":
            return SVM_NAME
        if self.kind == "omp":
            return f"OMP(k={p['k']},{p['rule']})"
        if self.kind == "nearest_subspace":
            return f"nearest-subspace({p['rule']})"
        return f"union-subspace({p['solver']},{p['rule']})"


@dataclass(frozen=True)
class ExperimentConfig:
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    noise_sweep: tuple[NoiseSpec, ...] = ()
    classifiers: tuple[ClassifierSpec, ...] = ()
    trials: int = 5
    master_seed: int = 0
    output_dir: str = "results"
    format: str = "csv"
    workers: int = 1
    timing: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if not self.noise_sweep:
            raise ConfigError("the noise sweep is empty")
        if not self.classifiers:
            raise ConfigError("no classifiers configured")
        if self.format not in REPORT_FORMATS:
            raise ConfigError(f"format must be one of {REPORT_FORMATS}, got {self.format!r}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")


_TOP_KEYS: dict[str, tuple[Callable, object]] = {
    "dim": (int, 200),
    "num_classes": (int, 30),
    "n_train": (int, 200),
    "n_test": (int, 1000),
    "t_min": (float, -1.0),
    "t_max": (float, 1.0),
    "dead_zone": (float, 0.1),
    "salt_pepper_amplitude": (float, None),
    "classifiers": (_name_list, ("worm", "knn", "svm", "omp", "nearest_subspace", "union_subspace")),
    "trials": (int, 5),
    "master_seed": (int, 0),
    "output_dir": (str, "results"),
    "format": (_choice(REPORT_FORMATS), "csv"),
    "workers": (int, 1),
    "timing": (_parse_bool, False),
}


def _split_lines(text: str, source: str) -> list[tuple[int, str, str]]:
    entries = []
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} (first set on line {seen[key]})")
        seen[key] = lineno
        entries.append((lineno, key, value))
    return entries


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from config-file text."""
    top = {name: default for name, (_, default) in _TOP_KEYS.items()}
    sweep: list[tuple[str, tuple[float, ...]]] = []
    params: dict[str, dict[str, object]] = {kind: {} for kind in CLASSIFIER_PARAMS}

    for lineno, key, value in _split_lines(text, source):
        try:
            if key in _TOP_KEYS:
                top[key] = _TOP_KEYS[key][0](value)
            elif key.startswith("sweep."):
                kind = key[len("sweep.") :]
                if kind not in NOISE_KINDS:
                    raise ConfigError(f"unknown noise kind {kind!r}")
                sweep.append((kind, _float_list(value)))
            elif "." in key and key.split(".", 1)[0] in CLASSIFIER_PARAMS:
                kind, name = key.split(".", 1)
                if name not in CLASSIFIER_PARAMS[kind]:
                    raise ConfigError(f"unknown key {key!r}")
                params[kind][name] = CLASSIFIER_PARAMS[kind][name][0](value)
            else:
                raise ConfigError(f"unknown key {key!r}")
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None

    if not sweep:
        sweep = list(DEFAULT_SWEEP)
    try:
        generator = GeneratorConfig(
            dim=top["dim"],
            num_classes=top["num_classes"],
            n_train=top["n_train"],
            n_test=top["n_test"],
            coefficient_range=(top["t_min"], top["t_max"]),
            dead_zone=top["dead_zone"],
        )
        amplitude = top["salt_pepper_amplitude"]
        noise_sweep = tuple(
            NoiseSpec(kind, level, amplitude if kind == "salt_pepper" else None)
            for kind, levels in sweep
            for level in levels
        )
        classifiers = tuple(
            ClassifierSpec(kind, tuple(params.get(kind, {}).items())) for kind in top["classifiers"]
        )
        return ExperimentConfig(
            generator=generator,
            noise_sweep=noise_sweep,
            classifiers=classifiers,
            trials=top["trials"],
            master_seed=top["master_seed"],
            output_dir=top["output_dir"],
            format=top["format"],
            workers=top["workers"],
            timing=top["timing"],
        )
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    except WormlabError as exc:  # invalid noise spec etc.
        raise ConfigError(f"{source}: {exc}") from None


def default_config() -> ExperimentConfig:
    """The default protocol: every key at its default value."""
    return parse_config("", "<defaults>")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


# -- running -----------------------------------------------------------------


def _rule(spec: ClassifierSpec) -> DecisionRule:
    return DecisionRule(spec.get("rule"), spec.get("alpha"))


def fit_predict(spec: ClassifierSpec, train: LabeledDataset, Y: np.ndarray) -> np.ndarray:
    """Fit the classifier described by ``spec`` on ``train`` and label the columns of ``Y``."""
    if spec.kind == "worm":
        model = fit_worm(train, spec.get("tau"), spec.get("variant"), spec.get("center"))
        return predict_worm(model, Y)
    if spec.kind == "knn":
        return predict_knn(KnnModel(train, spec.get("k")), Y)
    if spec.kind == "svm":
        # fixed seed keeps the stand-in a function of the data alone
        return predict_svm(fit_linear_svm(train, spec.get("reg"), spec.get("epochs"), seed=0), Y)
    dicts = fit_raw_dictionaries(train)
    if spec.kind == "omp":
        return predict_omp(dicts, Y, spec.get("k"), _rule(spec))
    if spec.kind == "nearest_subspace":
        return predict_nearest_subspace(dicts, Y, _rule(spec))
    reg = RegularizationParams(
        ridge_lambda=spec.get("ridge_lambda"),
        lasso_lambda=spec.get("lasso_lambda"),
        elastic_lambda1=spec.get("elastic_lambda1"),
        elastic_lambda2=spec.get("elastic_lambda2"),
        tol=spec.get("tol"),
        max_iter=spec.get("max_iter"),
    )
    return predict_union_subspace(dicts, Y, _rule(spec), spec.get("solver"), reg, spec.get("k"))


@dataclass(frozen=True)
class CellResult:
    """One (classifier, sweep point, trial) outcome."""

    accuracy: float
    snr_db: float
    wall_time_ms: float
    error: str = ""


def trial_seed(config: ExperimentConfig, trial: int) -> int:
    return derive_seed(config.master_seed, trial)


def run_trial(config: ExperimentConfig, trial: int) -> list[list[CellResult]]:
    """All sweep points of one trial; result indexed ``[sweep_index][classifier_index]``."""
    split = clean_split(replace(config.generator, seed=trial_seed(config, trial)))
    out = []
    for noise in config.noise_sweep:
        train, test = noisy_from_clean(split, noise)
        snr = measure_snr(split.test.data, test.data)
        row = []
        for spec in config.classifiers:
            start = time.perf_counter()
            try:
                pred = fit_predict(spec, train, test.data)
            except (WormlabError, np.linalg.LinAlgError) as exc:
                row.append(CellResult(math.nan, snr, 0.0, f"{type(exc).__name__}: {exc}"))
                continue
            elapsed = (time.perf_counter() - start) * 1e3
            row.append(CellResult(float(np.mean(pred == test.labels)), snr, elapsed))
        out.append(row)
    return out


@dataclass(frozen=True)
class ReportRow:
    classifier: str
    noise_kind: str
    noise_level: float
    mean_snr_db: float
    mean_accuracy: float
    accuracy_stddev: float
    trials: int
    wall_time_ms: float | None = None
    error: str = ""


@dataclass(frozen=True)
class BenchmarkReport:
    rows: tuple[ReportRow, ...] = ()

    def __len__(self) -> int:
        return len(self.rows)

    def select(self, classifier: str | None = None, noise_kind: str | None = None) -> list[ReportRow]:
        return [
            r
            for r in self.rows
            if (classifier is None or r.classifier == classifier)
            and (noise_kind is None or r.noise_kind == noise_kind)
        ]


def _aggregate(config: ExperimentConfig, per_trial: list[list[list[CellResult]]]) -> BenchmarkReport:
    rows = []
    for si, noise in enumerate(config.noise_sweep):
        for ci, spec in enumerate(config.classifiers):
            cells = [trial[si][ci] for trial in per_trial]
            snr = float(np.mean([c.snr_db for c in cells]))
            errors = [c.error for c in cells if c.error]
            timing = float(np.mean([c.wall_time_ms for c in cells])) if config.timing else None
            if errors:
                rows.append(
                    ReportRow(spec.display_name, noise.kind, noise.level, snr, math.nan, math.nan,
                              len(cells), timing, errors[0])
                )
                continue
            acc = np.array([c.accuracy for c in cells])
            rows.append(
                ReportRow(spec.display_name, noise.kind, noise.level, snr, float(acc.mean()),
                          float(acc.std()), len(cells), timing)
            )
    return BenchmarkReport(tuple(rows))


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> BenchmarkReport:
    """Run every trial and aggregate mean/stddev accuracy per (classifier, noise level).

    Trial seeds are derived from ``master_seed`` and the trial index before
    any work starts, and results are merged in trial order, so the report is
    identical for any ``workers`` value.
    """
    workers = config.workers if workers is None else workers
    trials = range(config.trials)
    if workers > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_trial = list(pool.map(run_trial, [config] * config.trials, trials))
    else:
        per_trial = [run_trial(config, t) for t in trials]
    return _aggregate(config, per_trial)


# -- output ------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return f"{float(value):.6g}"


def emit_report(report: BenchmarkReport, fmt: str, path) -> Path:
    """Write ``report`` as csv, tsv or json-lines with a fixed column order.

    csv/tsv numbers carry 6 significant digits. json-lines keeps full
    precision so that reading it back reproduces the report exactly.
    """
    if fmt not in REPORT_FORMATS:
        raise ConfigError(f"format must be one of {REPORT_FORMATS}, got {fmt!r}")
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            if fmt == "jsonl":
                for row in report.rows:
                    fh.write(json.dumps(asdict(row)) + "\n")
            else:
                writer = csv.writer(fh, delimiter="," if fmt == "csv" else "\t", lineterminator="\n")
                writer.writerow(REPORT_COLUMNS)
                for row in report.rows:
                    writer.writerow([_fmt(getattr(row, name)) for name in REPORT_COLUMNS])
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path


def read_report_jsonl(path) -> BenchmarkReport:
    rows = []
    with Path(path).open() as fh:
        for line in fh:
            if line.strip():
                rows.append(ReportRow(**json.loads(line)))
    return BenchmarkReport(tuple(rows))


PLOT_COLUMNS = ("series", "classifier", "noise_kind", "noise_level", "snr_db", "mean_accuracy", "accuracy_stddev")


def plot_series(report: BenchmarkReport) -> dict[tuple[str, str], list[ReportRow]]:
    """Group rows into one series per (classifier, noise kind), sorted by level."""
    series: dict[tuple[str, str], list[ReportRow]] = {}
    for row in report.rows:
        series.setdefault((row.classifier, row.noise_kind), []).append(row)
    return {key: sorted(rows, key=lambda r: r.noise_level) for key, rows in series.items()}


def emit_plot_data(report: BenchmarkReport, path) -> Path:
    """Long-format CSV, one line per point, series contiguous and level-sorted."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(PLOT_COLUMNS)
            for (name, kind), rows in plot_series(report).items():
                for r in rows:
                    writer.writerow(
                        [f"{name}|{kind}", name, kind, _fmt(r.noise_level), _fmt(r.mean_snr_db),
                         _fmt(r.mean_accuracy), _fmt(r.accuracy_stddev)]
                    )
    except OSError as exc:
        raise OSError(f"cannot write plot data to {path}: {exc}") from exc
    return path


def report_table(report: BenchmarkReport) -> str:
    """Fixed-width text rendering for terminals."""
    width = max([len(r.classifier) for r in report.rows] + [10])
    lines = [f"{'classifier':<{width}}  {'noise':<14} {'level':>8} {'snr_db':>9} {'acc':>7} {'std':>7}"]
    for r in report.rows:
        acc = "error" if r.error else f"{r.mean_accuracy:.4f}"
        lines.append(
            f"{r.classifier:<{width}}  {r.noise_kind:<14} {r.noise_level:>8.4g} "
            f"{r.mean_snr_db:>9.3g} {acc:>7} {r.accuracy_stddev:>7.4f}"
        )
    return "\n".join(lines)


def write_datasets(config: ExperimentConfig, out_dir) -> list[Path]:
    """Export every (trial, sweep point) train/test split as CSV under ``out_dir``."""
    out_dir = Path(out_dir)
    written = []
    for trial in range(config.trials):
        split = clean_split(replace(config.generator, seed=trial_seed(config, trial)))
        trial_dir = out_dir / f"trial{trial}"
        trial_dir.mkdir(parents=True, exist_ok=True)
        for noise in config.noise_sweep:
            train, test = noisy_from_clean(split, noise)
            stem = f"{noise.kind}_{noise.level:g}"
            written.append(export_csv(train, trial_dir / f"{stem}_train.csv"))
            written.append(export_csv(test, trial_dir / f"{stem}_test.csv"))
    return written
