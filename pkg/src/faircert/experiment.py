"""Sweep harness: train, evaluate and certify across a lambda grid.

For each lambda the harness trains a representation on the training
split, retrains a fresh sensitive estimator on the cleaned training
data, and evaluates everything on the test split: the empirical
group-fairness of the two extremal threshold rules, reconstruction
statistics under the epsilon rule, the target risk of the analytic
decision, the empirical cost of mistrust against an original-data
baseline decision, and the full certificate report.

Reproducibility contract: the sweep table and every certificate file
are byte-identical across reruns with the same config.  Per-lambda
wall-clock timings are inherently non-deterministic, so they are
written to a separate timings file instead of the canonical table.

Per-lambda failures are isolated: a failed lambda is recorded with its
reason and the sweep continues.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .certificates import (
    CertificateComponent,
    CertificateReport,
    assemble_report,
    di_certificate,
    estimate_eta_f,
    sp_certificate_ber,
    sp_certificate_entropy,
)
from .data import (
    ADULT_TARGET_COLUMNS,
    PROPUBLICA_TARGET_COLUMNS,
    Dataset,
    SplitSpec,
    SyntheticSpec,
    binarize_and_scale,
    load_adult,
    load_propublica,
    make_synthetic,
    parse_synthetic_manifest,
    reject_report,
    save_dataset_cache,
    schema_manifest,
    split,
    summarize,
)
from .decision import analytic_decision, decide, empirical_cost_of_mistrust, train_decision_model
from .metrics import (
    CostParams,
    empirical_cost_sensitive_risk,
    empirical_disparate_impact,
    empirical_statistical_parity,
    reconstruction_stats,
)
from .neural import TrainConfig, predict_proba
from .representation import (
    RepresentationModel,
    apply_representation,
    save_representation,
    train_fair_representation,
    train_sensitive_estimator,
)


class ConfigError(ValueError):
    """Malformed experiment configuration (unknown or invalid field)."""


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = "synthetic"
    data_path: str = ""
    lambda_grid: tuple[float, ...] = (0.0, 1.0, 2.0)
    seed: int = 0
    split: SplitSpec = field(default_factory=SplitSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    epsilon_rule: float = 0.1
    c_y: float = 0.5
    c_s: float = 0.5
    eta_slack: float = 0.01
    out_dir: str = "out"
    subsample: int = 0

    def __post_init__(self) -> None:
        if not self.lambda_grid:
            raise ConfigError("lambda_grid must be non-empty")
        if any(l < 0.0 for l in self.lambda_grid):
            raise ConfigError("lambda_grid entries must be >= 0")
        if not 0.0 < self.epsilon_rule:
            raise ConfigError("epsilon_rule must be > 0")


_CONFIG_KEYS = {
    "dataset", "data_path", "lambda_grid", "seed", "train_fraction", "split_seed",
    "epochs", "batch_size", "learning_rate", "shuffle", "max_steps", "epsilon_rule",
    "c_y", "c_s", "eta_slack", "out_dir", "subsample",
}


def read_config_fields(path) -> dict[str, str]:
    fields: dict[str, str] = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            if not sep or not key:
                raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"line {lineno}: unknown config field {key!r}")
            fields[key] = value.strip()
    return fields


def parse_experiment_config(path, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    """Flat key=value file mirroring the ExperimentConfig fields; nested
    split/train fields are spelled split_seed, train_fraction, epochs,
    batch_size, learning_rate, shuffle."""
    fields = read_config_fields(path)
    for key, value in (overrides or {}).items():
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config field {key!r}")
        fields[key] = value
    return config_from_fields(fields)


def config_from_fields(fields: dict[str, str]) -> ExperimentConfig:
    def get(key: str, default):
        return fields.get(key, default)

    try:
        lambda_grid = tuple(
            float(v) for v in str(get("lambda_grid", "0,1,2")).split(",") if v.strip() != ""
        )
        return ExperimentConfig(
            dataset=str(get("dataset", "synthetic")),
            data_path=str(get("data_path", "")),
            lambda_grid=lambda_grid,
            seed=int(get("seed", 0)),
            split=SplitSpec(
                train_fraction=float(get("train_fraction", 0.7)),
                seed=int(get("split_seed", 0)),
            ),
            train=TrainConfig(
                epochs=int(get("epochs", 100)),
                batch_size=int(get("batch_size", 100)),
                learning_rate=float(get("learning_rate", 0.0001)),
                seed=int(get("seed", 0)),
                shuffle=str(get("shuffle", "true")).lower() in ("1", "true", "yes"),
                max_steps=int(get("max_steps", 0)),
            ),
            epsilon_rule=float(get("epsilon_rule", 0.1)),
            c_y=float(get("c_y", 0.5)),
            c_s=float(get("c_s", 0.5)),
            eta_slack=float(get("eta_slack", 0.01)),
            out_dir=str(get("out_dir", "out")),
            subsample=int(get("subsample", 0)),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc


def load_splits(config: ExperimentConfig) -> tuple[Dataset, Dataset]:
    """Materialize the train/test splits for the configured dataset."""
    if config.dataset == "adult":
        loaded = load_adult(config.data_path or "data/adult.csv")
    elif config.dataset == "propublica":
        loaded = load_propublica(config.data_path or "data/compas-scores-two-years.csv")
    elif config.dataset == "synthetic":
        if config.data_path:
            dataset = make_synthetic(parse_synthetic_manifest(config.data_path))
        else:
            dataset = make_synthetic_default(config.seed)
        return split(dataset, config.split)
    else:
        raise ConfigError(f"unknown dataset {config.dataset!r}")
    raw, schema = loaded.table, loaded.schema
    if config.subsample and config.subsample < len(raw):
        rng = np.random.default_rng(config.split.seed)
        keep = np.sort(rng.choice(len(raw), size=config.subsample, replace=False))
        raw = raw.iloc[keep].reset_index(drop=True)
    dataset = binarize_and_scale(raw, schema)
    return split(dataset, config.split)


def make_synthetic_default(seed: int) -> Dataset:
    return make_synthetic(SyntheticSpec(seed=seed))


SWEEP_COLUMNS = (
    "lambda",
    "sp_via_ber_rule",
    "di_via_di_rule",
    "large_recon_rate",
    "avg_recon_error",
    "risk_y",
    "cost_of_mistrust",
    "sp_bound_ber",
    "sp_bound_entropy",
    "di_bound",
    "seed",
)

PLOT_MEASURES = SWEEP_COLUMNS[1:-1]


@dataclass(frozen=True)
class SweepRow:
    lam: float
    sp_via_ber_rule: float
    di_via_di_rule: float
    large_recon_rate: float
    avg_recon_error: float
    risk_y: float
    cost_of_mistrust: float
    sp_bound_ber: float
    sp_bound_entropy: float
    di_bound: float
    runtime_seconds: float
    seed: int

    def __post_init__(self) -> None:
        for name in SWEEP_COLUMNS[:-1] + ("runtime_seconds",):
            attr = "lam" if name == "lambda" else name
            if not np.isfinite(getattr(self, attr)):
                raise ValueError(f"non-finite sweep value for {name}")

    def csv_values(self) -> list[str]:
        return [
            repr(float(self.lam)),
            repr(float(self.sp_via_ber_rule)),
            repr(float(self.di_via_di_rule)),
            repr(float(self.large_recon_rate)),
            repr(float(self.avg_recon_error)),
            repr(float(self.risk_y)),
            repr(float(self.cost_of_mistrust)),
            repr(float(self.sp_bound_ber)),
            repr(float(self.sp_bound_entropy)),
            repr(float(self.di_bound)),
            str(self.seed),
        ]


@dataclass(frozen=True)
class LambdaOutcome:
    row: SweepRow
    report: CertificateReport
    model: RepresentationModel


@dataclass(frozen=True)
class CertifyOutcome:
    report: CertificateReport
    ps_hat: np.ndarray
    p_s1: float
    eta_hat: float
    epsilon: float


def _derived_cfg(base: TrainConfig, seed: int, epochs_factor: int = 1) -> TrainConfig:
    return TrainConfig(
        epochs=base.epochs * epochs_factor,
        batch_size=base.batch_size,
        learning_rate=base.learning_rate,
        seed=seed,
        shuffle=base.shuffle,
        max_steps=base.max_steps * epochs_factor,
    )


# The certificate auditor trains longer than the generic schedule: an
# undertrained sensitive estimator is underconfident, which tightens the
# bounds below what a determined data user could realize.  Erring toward
# a stronger auditor only loosens the certificates (conservative).
AUDITOR_EPOCHS_FACTOR = 3


def certify_representation(
    model: RepresentationModel,
    train_ds: Dataset,
    test_ds: Dataset,
    config: ExperimentConfig,
    job_seed: int,
) -> CertifyOutcome:
    """Issue the certificate report for a trained representation.

    A fresh sensitive estimator is trained from scratch on the cleaned
    training data; the implied marginal of its test-set estimates is
    the p(S=1) plug-in, which keeps both statistical-parity bounds and
    the threshold rule consistent with one evaluation joint.
    """
    cleaned_train = apply_representation(model, train_ds.features)
    cleaned_test = apply_representation(model, test_ds.features)
    s_fit = train_sensitive_estimator(
        cleaned_train,
        train_ds.s,
        _derived_cfg(config.train, job_seed * 1000 + 1, epochs_factor=AUDITOR_EPOCHS_FACTOR),
    )
    ps_hat = predict_proba(s_fit.model, cleaned_test)
    weights = np.full(ps_hat.size, 1.0 / ps_hat.size)
    p_s1 = float(ps_hat.mean())
    eta_hat = estimate_eta_f(ps_hat, config.eta_slack)

    epsilon = config.epsilon_rule * float(
        np.mean(np.linalg.norm(train_ds.features, axis=1))
    )
    large_rate, avg_err = reconstruction_stats(
        lambda pts: apply_representation(model, pts), test_ds.features, epsilon
    )

    report = assemble_report(
        [
            CertificateComponent(
                name="group_fairness",
                values={
                    "sp_bound_ber": sp_certificate_ber(ps_hat, weights, p_s1),
                    "sp_bound_entropy": sp_certificate_entropy(ps_hat, weights, p_s1),
                    "di_bound": di_certificate(eta_hat, p_s1),
                    "eta_f": eta_hat,
                },
                split="test",
            ),
            CertificateComponent(
                name="reconstruction",
                values={
                    "large_recon_rate": large_rate,
                    "avg_recon_error": avg_err,
                    "epsilon": epsilon,
                    "utility_bound_offset": avg_err,
                },
                split="test",
            ),
        ],
        seed=job_seed,
        lam=model.lam,
        dataset=train_ds.schema.dataset_name,
    )
    return CertifyOutcome(
        report=report, ps_hat=ps_hat, p_s1=p_s1, eta_hat=eta_hat, epsilon=epsilon
    )


def evaluate_lambda(
    train_ds: Dataset,
    test_ds: Dataset,
    lam: float,
    config: ExperimentConfig,
    job_seed: int,
) -> LambdaOutcome:
    """Train and evaluate a single lambda point; deterministic given
    (datasets, lambda, config, job_seed)."""
    started = time.perf_counter()
    training = train_fair_representation(
        train_ds.features, train_ds.s, lam, _derived_cfg(config.train, job_seed)
    )
    model = training.model
    cleaned_train = apply_representation(model, train_ds.features)
    cleaned_test = apply_representation(model, test_ds.features)

    certified = certify_representation(model, train_ds, test_ds, config, job_seed)
    ps_hat = certified.ps_hat

    ber_rule = (ps_hat >= certified.p_s1).astype(int)
    sp_emp, _ = empirical_statistical_parity(ber_rule, test_ds.s)
    di_rule = (ps_hat >= certified.eta_hat).astype(int)
    di_emp, _ = empirical_disparate_impact(di_rule, test_ds.s)

    params = CostParams(c_y=config.c_y, c_s=config.c_s, lam=lam)
    dm_clean = train_decision_model(
        cleaned_train, train_ds.require_y(), train_ds.s, params,
        _derived_cfg(config.train, job_seed * 1000 + 3), input_space_tag="cleaned",
    )
    dm_orig = train_decision_model(
        train_ds.features, train_ds.require_y(), train_ds.s, params,
        _derived_cfg(config.train, job_seed * 1000 + 5), input_space_tag="original",
    )
    dec_clean = decide(dm_clean, cleaned_test)
    dec_orig = decide(dm_orig, test_ds.features)
    mistrust = empirical_cost_of_mistrust(
        dec_clean, dec_orig, test_ds.require_y(), test_ds.s, params
    )

    # Target risk of the target-optimal analytic decision (lam = 0 in
    # the threshold): measures what the cleaning alone costs.
    bayes_dec = analytic_decision(
        predict_proba(dm_clean.y_estimator, cleaned_test),
        predict_proba(dm_clean.s_estimator, cleaned_test),
        CostParams(c_y=config.c_y, c_s=config.c_s, lam=0.0),
    )
    risk_y = empirical_cost_sensitive_risk(bayes_dec, test_ds.require_y(), config.c_y)

    report = certified.report
    row = SweepRow(
        lam=lam,
        sp_via_ber_rule=sp_emp,
        di_via_di_rule=di_emp,
        large_recon_rate=report.large_recon_rate,
        avg_recon_error=report.avg_recon_error,
        risk_y=risk_y,
        cost_of_mistrust=mistrust,
        sp_bound_ber=report.sp_bound_ber,
        sp_bound_entropy=report.sp_bound_entropy,
        di_bound=report.di_bound,
        runtime_seconds=time.perf_counter() - started,
        seed=job_seed,
    )
    return LambdaOutcome(row=row, report=report, model=model)


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]
    reports: tuple[CertificateReport, ...]
    failures: tuple[tuple[float, str], ...]


def sweep_table_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow(row.csv_values())
    return buf.getvalue()


def _lambda_file_tag(lam: float) -> str:
    return repr(float(lam)).replace(".", "p").replace("-", "m")


def run_sweep(config: ExperimentConfig, save_models: bool = False) -> SweepResult:
    """Execute the full protocol and write all output files."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train_ds, test_ds = load_splits(config)

    rows: list[SweepRow] = []
    reports: list[CertificateReport] = []
    failures: list[tuple[float, str]] = []
    for index, lam in enumerate(config.lambda_grid):
        job_seed = config.seed + index
        try:
            outcome = evaluate_lambda(train_ds, test_ds, lam, config, job_seed)
        except Exception as exc:  # isolate per-lambda failures
            failures.append((lam, f"{type(exc).__name__}: {exc}"))
            continue
        rows.append(outcome.row)
        reports.append(outcome.report)
        tag = _lambda_file_tag(lam)
        (out / f"report_lambda_{tag}.txt").write_text(outcome.report.to_kv_text())
        (out / f"report_lambda_{tag}.json").write_text(outcome.report.to_json())
        if save_models:
            save_representation(out / f"model_lambda_{tag}.npz", outcome.model)

    (out / "sweep_table.csv").write_text(sweep_table_text(rows))
    timing_lines = ["lambda,runtime_seconds"]
    timing_lines += [f"{repr(float(r.lam))},{r.runtime_seconds:.3f}" for r in rows]
    (out / "timings.csv").write_text("\n".join(timing_lines) + "\n")
    if failures:
        failure_lines = [f"lambda={repr(float(lam))}: {reason}" for lam, reason in failures]
        (out / "failures.txt").write_text("\n".join(failure_lines) + "\n")
    emit_plot_data(rows, out)
    return SweepResult(rows=tuple(rows), reports=tuple(reports), failures=tuple(failures))


def emit_plot_data(rows, out_dir) -> list[Path]:
    """One two-column (lambda, value) file per sweep measure, sorted by
    lambda, ready for external plotting."""
    rows = sorted(rows, key=lambda r: r.lam)
    if not rows:
        raise ValueError("empty sweep table")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for measure in PLOT_MEASURES:
        attr = "lam" if measure == "lambda" else measure
        path = out / f"plot_{measure}.tsv"
        lines = [
            f"{repr(float(r.lam))}\t{repr(float(getattr(r, attr)))}" for r in rows
        ]
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    return written


def run_ingest(config: ExperimentConfig) -> dict[str, str]:
    """Build the dataset cache, schema manifest, reject report and
    split summary; returns the written file paths."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if config.dataset == "adult":
        loaded = load_adult(config.data_path or "data/adult.csv")
        target_cols = ADULT_TARGET_COLUMNS
    elif config.dataset == "propublica":
        loaded = load_propublica(config.data_path or "data/compas-scores-two-years.csv")
        target_cols = PROPUBLICA_TARGET_COLUMNS
    else:
        raise ConfigError(f"ingest supports adult/propublica, got {config.dataset!r}")
    dataset = binarize_and_scale(loaded.table, loaded.schema)
    train_ds, test_ds = split(dataset, config.split)
    manifest = schema_manifest(loaded.schema, dataset, target_cols)
    summary = summarize(train_ds)

    paths = {
        "manifest": str(out / f"{config.dataset}_schema_manifest.txt"),
        "rejects": str(out / f"{config.dataset}_reject_report.txt"),
        "summary": str(out / f"{config.dataset}_summary.txt"),
        "cache": str(out / f"{config.dataset}_cache.npz"),
    }
    Path(paths["manifest"]).write_text(manifest)
    Path(paths["rejects"]).write_text(reject_report(loaded.rejects))
    Path(paths["summary"]).write_text(
        f"rows={len(loaded.table)}\ncolumns={dataset.n_columns}\n"
        f"train_rows={train_ds.n_rows}\ntest_rows={test_ds.n_rows}\n"
        f"p_y1={summary.p_y1!r}\np_s1={summary.p_s1!r}\n"
        f"p_y1_given_s1={summary.p_y1_given_s1!r}\np_y1_given_s0={summary.p_y1_given_s0!r}\n"
        f"sp={summary.sp!r}\ndi={summary.di!r}\n"
    )
    save_dataset_cache(paths["cache"], train_ds, test_ds, manifest)
    return paths
