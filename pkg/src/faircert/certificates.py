"""Classifier-independent fairness certificates.

Every bound in this module holds for *any* decision variable built on
the cleaned data, which is what makes the certificates useful to a
regulator: they do not depend on which model a data user trains.

The empirical certificate functions deliberately take per-point
probability estimates plus weights as input rather than a model.  That
decouples the bound arithmetic from the estimator that produced the
numbers (a network, a histogram, or an exact joint), so the same code
path is exercised both by the brute-force enumeration oracle and by
the experiment harness.

Outputs are clipped to [0, 1]: finite-sample estimates can push the
raw formulas slightly out of range, and statistical parity / disparate
impact are by definition in [0, 1] after orientation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .metrics import DecisionRule, balanced_error_rate
from .probability import (
    DiscreteJoint,
    binary_entropy,
    check_probability,
    inverse_binary_entropy,
)


class VacuousCertificateError(ValueError):
    """The certificate formula degenerates on this input; the error
    message states the trivial bound that applies instead."""


def _clip01(x: float) -> float:
    return min(1.0, max(0.0, float(x)))


def _implied_joint(ps_estimates, weights) -> DiscreteJoint:
    ps = np.asarray(ps_estimates, dtype=float)
    w = np.asarray(weights, dtype=float)
    if ps.size == 0:
        raise ValueError("empty estimate vector")
    if ps.shape != w.shape:
        raise ValueError("estimates and weights must have equal length")
    if abs(w.sum() - 1.0) > 1e-9:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    return DiscreteJoint(px=w / w.sum(), ps_given_x=ps)


def sp_certificate_ber(ps_estimates, weights, p_s1: float) -> float:
    """Statistical-parity bound from the balanced error rate of the
    minimum-BER threshold rule.

    Constructs the rule 1(p(S=1|x) >= p(S=1)) over the weighted
    evaluation points and returns 1 - 2*BER of that rule, clipped to
    [0, 1].  On exact joints the bound is tight: it equals the maximum
    statistical parity achievable by any decision rule.
    """
    p_s1 = check_probability(p_s1, "p_s1")
    if p_s1 <= 0.0 or p_s1 >= 1.0:
        raise ValueError("p_s1 must be strictly inside (0, 1)")
    joint = _implied_joint(ps_estimates, weights)
    rule = DecisionRule((joint.ps_given_x >= p_s1).astype(float))
    ber = balanced_error_rate(rule, joint)
    return _clip01(1.0 - 2.0 * ber)


def sp_certificate_entropy(ps_estimates, weights, p_s1: float) -> float:
    """Statistical-parity bound from the conditional entropy of S given
    the cleaned data: 1 - H_b_inv(H(S|X)) / max(p(S=1), p(S=0)).

    Looser than the BER bound but avoids thresholding, so it is less
    sensitive to estimation error in the conditionals.
    """
    p_s1 = check_probability(p_s1, "p_s1")
    if p_s1 <= 0.0 or p_s1 >= 1.0:
        raise ValueError("p_s1 must be strictly inside (0, 1)")
    joint = _implied_joint(ps_estimates, weights)
    h = float(np.dot(joint.px, binary_entropy(joint.ps_given_x)))
    return _clip01(1.0 - inverse_binary_entropy(h) / max(p_s1, 1.0 - p_s1))


def di_certificate(eta_f: float, p_s1: float) -> float:
    """Disparate-impact bound 1 - p(S=1)(1 - eta) / (p(S=0) eta), where
    eta is the maximum of p(S=1|x) over the cleaned support.

    Tight: the rule that fires only on the argmax point achieves it.
    eta = 1 makes the bound vacuous (every DI up to 1 is possible) and
    eta = 0 makes it meaningless; both raise.
    """
    eta = check_probability(eta_f, "eta_f")
    p_s1 = check_probability(p_s1, "p_s1")
    if p_s1 <= 0.0 or p_s1 >= 1.0:
        raise ValueError("p_s1 must be strictly inside (0, 1)")
    if eta >= 1.0:
        raise VacuousCertificateError(
            "DI certificate vacuous: eta_f = 1 means some cleaned point "
            "identifies S perfectly; the bound is the trivial 1.0"
        )
    if eta <= 0.0:
        raise VacuousCertificateError(
            "DI certificate undefined: eta_f = 0 means no cleaned point "
            "ever has S=1"
        )
    return _clip01(1.0 - (p_s1 * (1.0 - eta)) / ((1.0 - p_s1) * eta))


def estimate_eta_f(ps_estimates, quantile_slack: float = 0.0) -> float:
    """Upper empirical quantile of the estimated conditionals p(S=1|x).

    With slack 0 this is the exact maximum.  A small positive slack
    (default in the experiment harness: 0.01) makes the estimate robust
    to single noisy points; the returned value is always an actual
    sample value (the order statistic at ceil((1-slack)*(n-1))).
    """
    ps = np.asarray(ps_estimates, dtype=float)
    if ps.size == 0:
        raise ValueError("empty estimate vector")
    if not 0.0 <= quantile_slack < 1.0:
        raise ValueError("quantile_slack must be in [0, 1)")
    if quantile_slack == 0.0:
        return float(ps.max())
    return float(np.quantile(ps, 1.0 - quantile_slack, method="higher"))


def individual_fairness_bound(epsilon: float, delta: float) -> tuple[float, float]:
    """Individual-fairness guarantee transferred through a reconstruction.

    If the original decision variable is individually fair and the
    large-reconstruction-error rate at threshold epsilon is at most
    delta, then the cleaned-data decision variable, compared under the
    relaxed input distance d(x, x') + 2*epsilon, has individual
    unfairness at most 2*delta.

    Returns (distance offset 2*epsilon, unfairness bound min(2*delta, 1)).
    """
    if epsilon < 0.0:
        raise ValueError("epsilon must be >= 0")
    delta = check_probability(delta, "delta")
    return 2.0 * epsilon, min(2.0 * delta, 1.0)


def utility_bound(base_risk: float, avg_recon_error: float) -> float:
    """Target-risk bound for decisions built on cleaned data: the risk of
    the original decision variable plus the average reconstruction error."""
    if base_risk < 0.0 or avg_recon_error < 0.0:
        raise ValueError("inputs must be >= 0")
    return float(base_risk) + float(avg_recon_error)


@dataclass(frozen=True)
class LipschitzConstants:
    """Moduli of continuity of x -> p(Y=1|X=x) and x -> p(S=1|X=x)
    with respect to the chosen input distance."""

    l_y: float
    l_s: float

    def __post_init__(self) -> None:
        if self.l_y < 0.0 or self.l_s < 0.0:
            raise ValueError("Lipschitz constants must be >= 0")


def mistrust_bound(lip: LipschitzConstants, lam: float, avg_recon_error: float) -> float:
    """Bound on the excess optimal combined risk incurred by deciding
    from cleaned data: (l_y + lam * l_s) * E[d(x, f(x))]."""
    if lam < 0.0 or avg_recon_error < 0.0:
        raise ValueError("inputs must be >= 0")
    return (lip.l_y + lam * lip.l_s) * float(avg_recon_error)


# ---------------------------------------------------------------------------
# Report assembly and serialization
# ---------------------------------------------------------------------------

REPORT_FIELDS = (
    "sp_bound_ber",
    "sp_bound_entropy",
    "di_bound",
    "eta_f",
    "large_recon_rate",
    "avg_recon_error",
    "epsilon",
    "utility_bound_offset",
    "mistrust_bound",
)

_META_FIELDS = ("seed", "lambda", "dataset", "split")


@dataclass(frozen=True)
class CertificateComponent:
    """A named group of certificate values computed on one evaluation
    split.  Components carry their split tag so that a report cannot be
    silently assembled from mismatched evaluations."""

    name: str
    values: Mapping[str, float]
    split: str


@dataclass(frozen=True)
class CertificateReport:
    """The complete bundle handed to a regulator for one representation:
    group-fairness bounds, reconstruction statistics governing the
    individual-fairness and utility guarantees, and provenance."""

    sp_bound_ber: float
    sp_bound_entropy: float
    di_bound: float
    eta_f: float
    large_recon_rate: float
    avg_recon_error: float
    epsilon: float
    utility_bound_offset: float
    seed: int
    lam: float
    dataset: str
    split: str
    mistrust_bound: float | None = None

    def __post_init__(self) -> None:
        for name in ("sp_bound_ber", "sp_bound_entropy", "di_bound", "eta_f"):
            check_probability(getattr(self, name), name)
        check_probability(self.large_recon_rate, "large_recon_rate")
        for name in ("avg_recon_error", "epsilon", "utility_bound_offset"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")
        if self.sp_bound_ber > self.sp_bound_entropy + 1e-9:
            raise ValueError(
                "certificate dominance violated: BER bound "
                f"{self.sp_bound_ber!r} exceeds entropy bound "
                f"{self.sp_bound_entropy!r}"
            )

    def to_kv_text(self) -> str:
        lines = []
        for name in REPORT_FIELDS:
            value = getattr(self, name)
            if name == "mistrust_bound" and value is None:
                continue
            lines.append(f"{name}={value!r}")
        lines.append(f"seed={self.seed}")
        lines.append(f"lambda={self.lam!r}")
        lines.append(f"dataset={self.dataset}")
        lines.append(f"split={self.split}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        doc = {name: getattr(self, name) for name in REPORT_FIELDS}
        doc["seed"] = self.seed
        doc["lambda"] = self.lam
        doc["dataset"] = self.dataset
        doc["split"] = self.split
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CertificateReport":
        doc = json.loads(text)
        kwargs = {name: doc[name] for name in REPORT_FIELDS if doc.get(name) is not None}
        kwargs.pop("mistrust_bound", None)
        return cls(
            mistrust_bound=doc.get("mistrust_bound"),
            seed=int(doc["seed"]),
            lam=float(doc["lambda"]),
            dataset=str(doc["dataset"]),
            split=str(doc["split"]),
            **{k: float(v) for k, v in kwargs.items()},
        )


def assemble_report(
    components: Iterable[CertificateComponent],
    *,
    seed: int,
    lam: float,
    dataset: str,
) -> CertificateReport:
    """Merge certificate components into one report.

    All components must have been computed on the same evaluation
    split; mixing splits raises, because a report whose bounds refer to
    different data is not a certificate of anything.
    """
    components = list(components)
    if not components:
        raise ValueError("no components to assemble")
    splits = {c.split for c in components}
    if len(splits) != 1:
        raise ValueError(f"inconsistent provenance: components span splits {sorted(splits)}")
    merged: dict[str, float] = {}
    for comp in components:
        for key, value in comp.values.items():
            if key not in REPORT_FIELDS:
                raise ValueError(f"unknown report field {key!r} in component {comp.name!r}")
            if key in merged and merged[key] != value:
                raise ValueError(f"conflicting values for {key!r}")
            merged[key] = value
    missing = [f for f in REPORT_FIELDS if f != "mistrust_bound" and f not in merged]
    if missing:
        raise ValueError(f"missing report fields: {missing}")
    return CertificateReport(
        sp_bound_ber=merged["sp_bound_ber"],
        sp_bound_entropy=merged["sp_bound_entropy"],
        di_bound=merged["di_bound"],
        eta_f=merged["eta_f"],
        large_recon_rate=merged["large_recon_rate"],
        avg_recon_error=merged["avg_recon_error"],
        epsilon=merged["epsilon"],
        utility_bound_offset=merged["utility_bound_offset"],
        mistrust_bound=merged.get("mistrust_bound"),
        seed=seed,
        lam=lam,
        dataset=dataset,
        split=splits.pop(),
    )
