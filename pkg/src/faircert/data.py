"""Tabular ingestion: census income and recidivism data.

Raw CSVs are turned into a row-major float matrix (one-hot indicator
groups for categorical columns, z-scored continuous columns) plus a
sensitive bit vector and an optional target bit vector.  All recipe
choices live in a Schema so the exact preprocessing ships with the
artifact: the schema manifest documents every column kind, every
category list, and any deviation of the final column count from the
published targets.

Scaling discipline: continuous statistics (imputation medians, means,
standard deviations) are fitted on the training split only and applied
unchanged to the test split.  `binarize_and_scale` therefore leaves
continuous columns raw by default, and `split` fits the scaler on the
training partition.

Unparseable rows are never silently dropped; they are collected into a
reject report so ingestion provenance is auditable.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
import pandas as pd

ADULT_TARGET_COLUMNS = 110
PROPUBLICA_TARGET_COLUMNS = 79
MIN_CHARGE_DESC_COUNT = 20

Kind = Literal["continuous", "categorical", "sensitive", "target", "drop"]


@dataclass(frozen=True)
class ColumnSpec:
    """One raw column: its role, and for categorical columns the full
    category list (order fixes the one-hot layout).  A sensitive column
    with also_feature=True is additionally one-hot encoded into the
    feature matrix, which is the redundant-encoding setting the cleaned
    representation must defend against."""

    name: str
    kind: Kind
    categories: tuple[str, ...] = ()
    positive: str = ""
    also_feature: bool = False

    def __post_init__(self) -> None:
        if self.kind == "categorical" and not self.categories:
            raise ValueError(f"categorical column {self.name!r} needs categories")
        if self.kind in ("sensitive", "target") and not self.positive:
            raise ValueError(f"{self.kind} column {self.name!r} needs a positive value")


@dataclass(frozen=True)
class Schema:
    dataset_name: str
    columns: tuple[ColumnSpec, ...]

    def __post_init__(self) -> None:
        sensitive = [c for c in self.columns if c.kind == "sensitive"]
        targets = [c for c in self.columns if c.kind == "target"]
        if len(sensitive) != 1:
            raise ValueError("schema must have exactly one sensitive column")
        if len(targets) > 1:
            raise ValueError("schema must have at most one target column")

    @property
    def sensitive(self) -> ColumnSpec:
        return next(c for c in self.columns if c.kind == "sensitive")

    @property
    def target(self) -> ColumnSpec | None:
        return next((c for c in self.columns if c.kind == "target"), None)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")


@dataclass(frozen=True)
class FeatureScaler:
    """Median-imputation plus z-scoring parameters for the continuous
    columns of the assembled matrix, fitted on one split."""

    column_indices: np.ndarray
    median: np.ndarray
    mean: np.ndarray
    std: np.ndarray

    def apply(self, features: np.ndarray) -> np.ndarray:
        out = features.copy()
        cols = self.column_indices
        block = out[:, cols]
        nan_mask = np.isnan(block)
        if nan_mask.any():
            block = np.where(nan_mask, np.broadcast_to(self.median, block.shape), block)
        out[:, cols] = (block - self.mean) / self.std
        return out


def fit_scaler(features: np.ndarray, column_indices: np.ndarray) -> FeatureScaler:
    if column_indices.size == 0:
        empty = np.zeros(0)
        return FeatureScaler(
            column_indices=column_indices.copy(), median=empty, mean=empty, std=empty
        )
    block = features[:, column_indices]
    median = np.nanmedian(block, axis=0)
    filled = np.where(np.isnan(block), np.broadcast_to(median, block.shape), block)
    mean = filled.mean(axis=0)
    std = filled.std(axis=0)
    std = np.where(std > 0.0, std, 1.0)
    return FeatureScaler(
        column_indices=column_indices.copy(), median=median, mean=mean, std=std
    )


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    s: np.ndarray
    y: np.ndarray | None
    schema: Schema
    feature_names: tuple[str, ...]
    scaler: FeatureScaler | None = None
    unseen_category_rows: int = 0

    @property
    def n_rows(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_columns(self) -> int:
        return int(self.features.shape[1])

    def require_y(self) -> np.ndarray:
        if self.y is None:
            raise ValueError("dataset has no target labels")
        return self.y


@dataclass(frozen=True)
class LoadResult:
    table: pd.DataFrame
    schema: Schema
    rejects: pd.DataFrame


# ---------------------------------------------------------------------------
# Loaders
# ---------------------------------------------------------------------------

ADULT_COLUMNS = (
    "age", "workclass", "fnlwgt", "education", "education-num", "marital-status",
    "occupation", "relationship", "race", "sex", "capital-gain", "capital-loss",
    "hours-per-week", "native-country", "income",
)
ADULT_CONTINUOUS = (
    "age", "fnlwgt", "education-num", "capital-gain", "capital-loss", "hours-per-week",
)


def _strip_frame(df: pd.DataFrame) -> pd.DataFrame:
    return df.apply(lambda col: col.str.strip())


def _reject_unparseable(
    df: pd.DataFrame, continuous: tuple[str, ...], required: dict[str, tuple[str, ...]]
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Split rows into (parseable, rejected-with-reason)."""
    reasons = pd.Series("", index=df.index, dtype=str)
    for col in continuous:
        values = df[col].replace({"?": None, "": None})
        bad = pd.to_numeric(values, errors="coerce").isna() & values.notna()
        reasons[bad & (reasons == "")] = f"non-numeric value in {col}"
    for col, allowed in required.items():
        bad = ~df[col].isin(allowed)
        reasons[bad & (reasons == "")] = f"unexpected value in {col}"
    rejected = df[reasons != ""].copy()
    rejected["reject_reason"] = reasons[reasons != ""]
    return df[reasons == ""], rejected


def load_adult(path) -> LoadResult:
    """Census income table: 14 attributes plus an income threshold.

    Accepts both the canonical headerless comma-separated file and the
    headered CSV variant; values are whitespace-trimmed and the income
    labels normalized ('>50K.' -> '>50K').  Gender is the sensitive
    column (also one-hot in the features); the income threshold is the
    target.  Missing categorical values ('?') are their own category.
    """
    with open(path, "r") as fh:
        first = fh.readline()
    has_header = "age" in first.split(",")[0].strip().lower()
    df = pd.read_csv(
        path,
        header=0 if has_header else None,
        names=None if has_header else list(ADULT_COLUMNS),
        dtype=str,
        skipinitialspace=True,
        keep_default_na=False,
    )
    if has_header:
        df.columns = [c.strip().replace("income-per-year", "income") for c in df.columns]
    missing = [c for c in ADULT_COLUMNS if c not in df.columns]
    if missing:
        raise ValueError(f"missing expected columns: {missing}")
    df = _strip_frame(df.astype(str))
    df["income"] = df["income"].str.rstrip(".")

    kept, rejected = _reject_unparseable(
        df, ADULT_CONTINUOUS, {"income": ("<=50K", ">50K"), "sex": ("Male", "Female")}
    )

    columns = []
    for name in ADULT_COLUMNS:
        if name in ADULT_CONTINUOUS:
            columns.append(ColumnSpec(name=name, kind="continuous"))
        elif name == "sex":
            columns.append(
                ColumnSpec(
                    name=name, kind="sensitive", positive="Male", also_feature=True,
                    categories=tuple(sorted(kept[name].unique())),
                )
            )
        elif name == "income":
            columns.append(ColumnSpec(name=name, kind="target", positive=">50K"))
        else:
            columns.append(
                ColumnSpec(
                    name=name, kind="categorical",
                    categories=tuple(sorted(kept[name].unique())),
                )
            )
    return LoadResult(
        table=kept.reset_index(drop=True),
        schema=Schema(dataset_name="adult", columns=tuple(columns)),
        rejects=rejected,
    )


PROPUBLICA_CONTINUOUS = (
    "age", "juv_fel_count", "juv_misd_count", "juv_other_count", "priors_count",
    "days_b_screening_arrest", "c_days_from_compas",
)
PROPUBLICA_CATEGORICAL = ("sex", "age_cat", "c_charge_degree", "c_charge_desc")


def load_propublica(path) -> LoadResult:
    """Recidivism screening table.

    Keeps demographic, charge and prior-count columns; post-outcome
    columns that leak the target are dropped.  The free-text charge
    description becomes categorical: descriptions occurring at least 20
    times keep their own category, the rest map to 'other'.  Ethnicity
    African-American is the sensitive bit (also one-hot in the
    features); two-year recidivism is the target.
    """
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    needed = (
        ["race", "two_year_recid"] + list(PROPUBLICA_CONTINUOUS) + list(PROPUBLICA_CATEGORICAL)
    )
    missing = [c for c in needed if c not in df.columns]
    if missing:
        raise ValueError(f"missing expected columns: {missing}")
    df = df[needed].copy()
    df = _strip_frame(df.astype(str))

    desc = df["c_charge_desc"].replace({"": "missing"})
    counts = desc.value_counts()
    frequent = set(counts[counts >= MIN_CHARGE_DESC_COUNT].index)
    df["c_charge_desc"] = desc.where(desc.isin(frequent), other="other")

    kept, rejected = _reject_unparseable(
        df, PROPUBLICA_CONTINUOUS, {"two_year_recid": ("0", "1")}
    )

    columns = [ColumnSpec(name=n, kind="continuous") for n in PROPUBLICA_CONTINUOUS]
    for name in PROPUBLICA_CATEGORICAL:
        columns.append(
            ColumnSpec(
                name=name, kind="categorical",
                categories=tuple(sorted(kept[name].unique())),
            )
        )
    columns.append(
        ColumnSpec(
            name="race", kind="sensitive", positive="African-American", also_feature=True,
            categories=tuple(sorted(kept["race"].unique())),
        )
    )
    columns.append(ColumnSpec(name="two_year_recid", kind="target", positive="1"))
    return LoadResult(
        table=kept.reset_index(drop=True),
        schema=Schema(dataset_name="propublica", columns=tuple(columns)),
        rejects=rejected,
    )


# ---------------------------------------------------------------------------
# Binarization, splitting, summaries
# ---------------------------------------------------------------------------


def binarize_and_scale(
    raw: pd.DataFrame, schema: Schema, fit_scaler_now: bool = False
) -> Dataset:
    """Assemble the numeric matrix from a raw table under a schema.

    Categorical columns become one-hot groups over the schema's
    category list; a value outside the list yields an all-zero group
    and increments the unseen-row counter.  Continuous columns stay on
    their raw scale (missing as NaN) unless fit_scaler_now is set, in
    which case this table is treated as the fitting split.
    """
    blocks: list[np.ndarray] = []
    names: list[str] = []
    cont_cols: list[int] = []
    unseen_rows = np.zeros(len(raw), dtype=bool)
    n_cols = 0
    s_vec: np.ndarray | None = None
    y_vec: np.ndarray | None = None

    for col in schema.columns:
        if col.kind == "drop":
            continue
        if col.kind == "continuous":
            values = pd.to_numeric(
                raw[col.name].replace({"?": None, "": None}), errors="coerce"
            ).to_numpy(dtype=float)
            blocks.append(values[:, None])
            names.append(col.name)
            cont_cols.append(n_cols)
            n_cols += 1
            continue
        if col.kind in ("categorical",) or (col.kind == "sensitive" and col.also_feature):
            cats = list(col.categories)
            onehot = np.zeros((len(raw), len(cats)))
            col_values = raw[col.name].to_numpy()
            for j, cat in enumerate(cats):
                onehot[:, j] = col_values == cat
            unseen_rows |= onehot.sum(axis=1) == 0
            blocks.append(onehot)
            names.extend(f"{col.name}={cat}" for cat in cats)
            n_cols += len(cats)
        if col.kind == "sensitive":
            s_vec = (raw[col.name] == col.positive).to_numpy(dtype=int)
        elif col.kind == "target":
            y_vec = (raw[col.name] == col.positive).to_numpy(dtype=int)

    if s_vec is None:
        raise ValueError("schema has no sensitive column")
    features = np.hstack(blocks)
    scaler = None
    if fit_scaler_now:
        scaler = fit_scaler(features, np.asarray(cont_cols, dtype=int))
        features = scaler.apply(features)
    return Dataset(
        features=features,
        s=s_vec,
        y=y_vec,
        schema=schema,
        feature_names=tuple(names),
        scaler=scaler,
        unseen_category_rows=int(unseen_rows.sum()),
    )


def continuous_positions(dataset: Dataset) -> np.ndarray:
    """Matrix positions of continuous columns, rebuilt from the schema's
    column order (the synthetic generator has no schema columns for its
    features, which are all continuous)."""
    if dataset.schema.dataset_name == "synthetic":
        return np.arange(dataset.n_columns)
    positions = []
    offset = 0
    for col in dataset.schema.columns:
        if col.kind == "continuous":
            positions.append(offset)
            offset += 1
        elif col.kind == "categorical" or (col.kind == "sensitive" and col.also_feature):
            offset += len(col.categories)
    return np.asarray(positions, dtype=int)


def _stratified_indices(
    strata: np.ndarray, train_fraction: float, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Seeded permutation within each (sensitive, target) cell, with
    largest-remainder allocation so the training split has exactly
    floor(fraction * n) rows.  Stratifying keeps the label base rates of
    both splits at their full-sample values up to integer rounding."""
    n = strata.size
    n_train_total = int(np.floor(train_fraction * n))
    values = np.unique(strata)
    quotas = []
    permuted: list[np.ndarray] = []
    for v in values:
        idx = np.flatnonzero(strata == v)
        permuted.append(idx[rng.permutation(idx.size)])
        quotas.append(train_fraction * idx.size)
    base = np.floor(quotas).astype(int)
    remainders = np.asarray(quotas) - base
    short = n_train_total - int(base.sum())
    for k in np.argsort(-remainders, kind="stable")[:short]:
        base[k] += 1
    train_parts = [p[: base[k]] for k, p in enumerate(permuted)]
    test_parts = [p[base[k] :] for k, p in enumerate(permuted)]
    return np.concatenate(train_parts), np.concatenate(test_parts)


def split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Seeded stratified split: rows are permuted within each
    (sensitive, target) cell and the first floor(fraction * n) permuted
    rows overall form the training split, so both splits preserve the
    full-sample base rates up to integer rounding.  The
    continuous-column scaler is fitted on the training rows only and
    applied to both splits."""
    n = dataset.n_rows
    if n < 2:
        raise ValueError("need at least 2 rows to split")
    if dataset.scaler is not None:
        raise ValueError("dataset is already scaled; split requires raw features")
    strata = dataset.s.astype(int)
    if dataset.y is not None:
        strata = 2 * strata + dataset.y.astype(int)
    train_idx, test_idx = _stratified_indices(
        strata, spec.train_fraction, np.random.default_rng(spec.seed)
    )
    scaler = fit_scaler(dataset.features[train_idx], continuous_positions(dataset))

    def take(idx: np.ndarray) -> Dataset:
        return replace(
            dataset,
            features=scaler.apply(dataset.features[idx]),
            s=dataset.s[idx],
            y=None if dataset.y is None else dataset.y[idx],
            scaler=scaler,
        )

    return take(train_idx), take(test_idx)


@dataclass(frozen=True)
class Summary:
    """Empirical base rates and the fairness gap of the raw labels."""

    p_y1: float
    p_s1: float
    p_y1_given_s1: float
    p_y1_given_s0: float
    sp: float
    di: float

    def as_tuple(self) -> tuple[float, float, float, float, float, float]:
        return (self.p_y1, self.p_s1, self.p_y1_given_s1, self.p_y1_given_s0, self.sp, self.di)

    def __str__(self) -> str:
        return (
            f"p(Y=1)={self.p_y1:.3f} p(S=1)={self.p_s1:.3f} "
            f"p(Y=1|S=1)={self.p_y1_given_s1:.3f} p(Y=1|S=0)={self.p_y1_given_s0:.3f} "
            f"SP={self.sp:.3f} DI={self.di:.3f}"
        )


def summarize(dataset: Dataset) -> Summary:
    """Label-level statistics of a split (the target itself viewed as
    the decision variable)."""
    y = dataset.require_y()
    s = dataset.s
    if s.min() == s.max():
        raise ValueError("degenerate sensitive column")
    p_y1_s1 = float(y[s == 1].mean())
    p_y1_s0 = float(y[s == 0].mean())
    return Summary(
        p_y1=float(y.mean()),
        p_s1=float(s.mean()),
        p_y1_given_s1=p_y1_s1,
        p_y1_given_s0=p_y1_s0,
        sp=p_y1_s1 - p_y1_s0,
        di=1.0 - p_y1_s0 / p_y1_s1 if p_y1_s1 > 0 else float("nan"),
    )


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator for small controllable tables: feature 0 redundantly
    encodes the sensitive bit with the given signal strength, later
    features carry the target signal plus noise."""

    n_rows: int = 500
    n_features: int = 6
    seed: int = 0
    s_signal: float = 2.0
    y_signal: float = 2.0
    noise: float = 1.0


def make_synthetic(spec: SyntheticSpec) -> Dataset:
    rng = np.random.default_rng(spec.seed)
    n, d = spec.n_rows, spec.n_features
    if d < 2:
        raise ValueError("need at least 2 features")
    s = rng.integers(0, 2, size=n)
    y = rng.integers(0, 2, size=n)
    x = rng.normal(scale=spec.noise, size=(n, d))
    x[:, 0] += spec.s_signal * (2.0 * s - 1.0)
    x[:, 1] += spec.y_signal * (2.0 * y - 1.0)
    if d > 2:
        x[:, 2] += 0.5 * spec.s_signal * (2.0 * s - 1.0)
    schema = Schema(
        dataset_name="synthetic",
        columns=(
            ColumnSpec(name="s", kind="sensitive", positive="1"),
            ColumnSpec(name="y", kind="target", positive="1"),
        ),
    )
    return Dataset(
        features=x,
        s=s.astype(int),
        y=y.astype(int),
        schema=schema,
        feature_names=tuple(f"x{i}" for i in range(d)),
    )


def parse_synthetic_manifest(path) -> SyntheticSpec:
    fields = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            fields[key.strip()] = value.strip()
    return SyntheticSpec(
        n_rows=int(fields.get("n_rows", 500)),
        n_features=int(fields.get("n_features", 6)),
        seed=int(fields.get("seed", 0)),
        s_signal=float(fields.get("s_signal", 2.0)),
        y_signal=float(fields.get("y_signal", 2.0)),
        noise=float(fields.get("noise", 1.0)),
    )


# ---------------------------------------------------------------------------
# Manifest, reject report, cache
# ---------------------------------------------------------------------------


def schema_manifest(schema: Schema, dataset: Dataset, target_columns: int | None) -> str:
    """Human- and machine-readable preprocessing provenance: every
    column's kind and categories, the final column count, and an
    itemized accounting against the published column-count target."""
    lines = [f"dataset={schema.dataset_name}", f"binarized_columns={dataset.n_columns}"]
    if target_columns is not None:
        lines.append(f"target_columns={target_columns}")
        lines.append(f"column_count_deviation={dataset.n_columns - target_columns}")
    lines.append(f"unseen_category_rows={dataset.unseen_category_rows}")
    for col in schema.columns:
        if col.kind in ("categorical",) or (col.kind == "sensitive" and col.also_feature):
            lines.append(
                f"column.{col.name}=kind:{col.kind} one_hot:{len(col.categories)} "
                f"categories:{'|'.join(col.categories)}"
            )
        else:
            lines.append(f"column.{col.name}=kind:{col.kind}")
    if target_columns is not None and dataset.n_columns != target_columns:
        lines.append(
            "deviation_note=count differs from the published figure; the recipe "
            "one-hot encodes the sensitive column into the features and keeps "
            "missing-value markers as their own categories, as itemized above"
        )
    return "\n".join(lines) + "\n"


def schema_hash(manifest_text: str) -> str:
    return hashlib.sha256(manifest_text.encode()).hexdigest()


def reject_report(rejects: pd.DataFrame) -> str:
    if len(rejects) == 0:
        return "rejected_rows=0\n"
    lines = [f"rejected_rows={len(rejects)}"]
    for idx, row in rejects.iterrows():
        lines.append(f"row {idx}: {row['reject_reason']}")
    return "\n".join(lines) + "\n"


CACHE_FORMAT_VERSION = 1


def save_dataset_cache(path, train: Dataset, test: Dataset, manifest_text: str) -> None:
    arrays: dict[str, np.ndarray] = {
        "format_version": np.asarray(CACHE_FORMAT_VERSION, dtype=np.int64),
        "schema_hash": np.asarray(schema_hash(manifest_text), dtype="U64"),
        "feature_names": np.asarray(train.feature_names, dtype="U128"),
        "dataset_name": np.asarray(train.schema.dataset_name, dtype="U64"),
    }
    for tag, ds in (("train", train), ("test", test)):
        arrays[f"{tag}_features"] = ds.features
        arrays[f"{tag}_s"] = ds.s
        if ds.y is not None:
            arrays[f"{tag}_y"] = ds.y
    np.savez_compressed(path, **arrays)


def load_dataset_cache(path, schema: Schema, manifest_text: str) -> tuple[Dataset, Dataset]:
    with np.load(path) as data:
        version = int(data["format_version"])
        if version != CACHE_FORMAT_VERSION:
            raise ValueError(f"unsupported cache format version {version}")
        stored_hash = str(data["schema_hash"])
        if stored_hash != schema_hash(manifest_text):
            raise ValueError("cache schema hash does not match the current recipe")
        names = tuple(str(n) for n in data["feature_names"])
        out = []
        for tag in ("train", "test"):
            out.append(
                Dataset(
                    features=np.asarray(data[f"{tag}_features"]),
                    s=np.asarray(data[f"{tag}_s"]),
                    y=np.asarray(data[f"{tag}_y"]) if f"{tag}_y" in data else None,
                    schema=schema,
                    feature_names=names,
                )
            )
    return out[0], out[1]
