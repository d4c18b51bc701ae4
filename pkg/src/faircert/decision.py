"""The data user's decision variable.

Given estimators of p(Y=1|x) and p(S=1|x), the combined-risk-optimal
decision has a closed form: predict 1 exactly when

    p(Y=1|x) - c_y  >  lam * (p(S=1|x) - c_s)

with ties going to 0 (the inequality is strict).  The same rule built
on cleaned inputs versus original inputs is what the empirical cost of
mistrust compares.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .metrics import CostParams, empirical_combined_risk
from .neural import Mlp, TrainConfig, predict_proba, train_sigmoid_classifier


@dataclass(frozen=True)
class DecisionModel:
    """Independently trained conditional-probability estimators for the
    target and sensitive variables over one input space."""

    y_estimator: Mlp
    s_estimator: Mlp
    params: CostParams
    input_space_tag: Literal["original", "cleaned"]

    def __post_init__(self) -> None:
        if self.y_estimator.input_dim != self.s_estimator.input_dim:
            raise ValueError("estimators must share an input dimension")
        if self.input_space_tag not in ("original", "cleaned"):
            raise ValueError(f"unknown input space tag {self.input_space_tag!r}")


def _check_binary_labels(labels, name: str) -> np.ndarray:
    arr = np.asarray(labels, dtype=float)
    if np.any((arr != 0.0) & (arr != 1.0)):
        raise ValueError(f"{name} must be bits")
    if arr.min() == arr.max():
        raise ValueError(f"degenerate target: {name} has a single class")
    return arr


def train_decision_model(
    features,
    y_labels,
    s_labels,
    params: CostParams,
    config: TrainConfig,
    input_space_tag: Literal["original", "cleaned"] = "cleaned",
    hidden_units: int = 100,
) -> DecisionModel:
    """Train the two conditional estimators on the same feature matrix.

    The sensitive estimator gets a seed offset so the two networks do
    not share initializations.
    """
    x = np.atleast_2d(np.asarray(features, dtype=float))
    y = _check_binary_labels(y_labels, "y_labels")
    s = _check_binary_labels(s_labels, "s_labels")
    if y.size != x.shape[0] or s.size != x.shape[0]:
        raise ValueError("labels must match the feature row count")
    y_fit = train_sigmoid_classifier(x, y, config, hidden_units=hidden_units)
    s_config = TrainConfig(
        epochs=config.epochs,
        batch_size=config.batch_size,
        learning_rate=config.learning_rate,
        seed=config.seed + 1,
        shuffle=config.shuffle,
    )
    s_fit = train_sigmoid_classifier(x, s, s_config, hidden_units=hidden_units)
    return DecisionModel(
        y_estimator=y_fit.model,
        s_estimator=s_fit.model,
        params=params,
        input_space_tag=input_space_tag,
    )


def analytic_decision(py_estimates, ps_estimates, params: CostParams) -> np.ndarray:
    """Threshold rule 1(p_y - c_y > lam (p_s - c_s)); ties decide 0."""
    py = np.asarray(py_estimates, dtype=float)
    ps = np.asarray(ps_estimates, dtype=float)
    if py.shape != ps.shape:
        raise ValueError("estimate vectors must have equal shape")
    return ((py - params.c_y) > params.lam * (ps - params.c_s)).astype(int)


def decide(model: DecisionModel, features) -> np.ndarray:
    """Per-row decisions from the model's estimators and parameters."""
    py = predict_proba(model.y_estimator, features)
    ps = predict_proba(model.s_estimator, features)
    return analytic_decision(py, ps, model.params)


def empirical_cost_of_mistrust(
    decisions_cleaned,
    decisions_original,
    y_labels,
    s_labels,
    params: CostParams,
) -> float:
    """Plug-in combined-risk gap between the cleaned-data decision and
    the original-data decision on the same evaluation rows.

    Reported unclipped: finite-sample estimation error can make it
    negative, and hiding that would mask estimator pathologies.
    """
    dec_f = np.asarray(decisions_cleaned)
    dec_o = np.asarray(decisions_original)
    if dec_f.shape != dec_o.shape:
        raise ValueError("decision vectors must have equal length")
    r_f = empirical_combined_risk(dec_f, y_labels, s_labels, params)
    r_o = empirical_combined_risk(dec_o, y_labels, s_labels, params)
    return r_f - r_o


def export_decisions(path, decisions) -> None:
    """Two-column text table: row id, decision bit."""
    dec = np.asarray(decisions, dtype=int)
    with open(path, "w") as fh:
        for i, d in enumerate(dec):
            fh.write(f"{i}\t{int(d)}\n")
