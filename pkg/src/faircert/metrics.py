"""Fairness and utility measures over exact joints or estimate vectors.

All group-level measures are defined for a randomized decision rule,
represented by the vector p(decision=1 | X=x) over the support of a
DiscreteJoint.  Deterministic rules are the special case with entries
in {0, 1}.

The reported statistical parity and disparate impact are oriented so
that group S=1 is the group with the higher positive-decision rate;
real data does not arrive pre-oriented, so the swap is performed
automatically and reported in the Orientation flag.  The signed
(pre-orientation) variants are exposed separately because several
algebraic identities, and the enumeration oracle, are stated in a
fixed orientation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np

from .probability import DiscreteJoint, check_probability


class UndefinedMetricError(ValueError):
    """The requested metric is undefined on this input (e.g. DI with an
    empty positive-decision group)."""


@dataclass(frozen=True)
class DecisionRule:
    """Per-support-point decision probabilities p(decision=1 | X=x)."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.probs, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("decision rule must be a non-empty vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("decision rule entries must be finite")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ValueError("decision rule entries must be in [0, 1]")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "probs", arr)


@dataclass(frozen=True)
class Orientation:
    """Whether the S group labels were exchanged so that
    p(decision=1|S=1) >= p(decision=1|S=0) in the reported value."""

    swapped: bool


@dataclass(frozen=True)
class CostParams:
    """Cost-sensitive trade-off parameters.

    c_y, c_s weight false positives against false negatives for the
    target and sensitive variables; lam (non-negative) weights the
    sensitive-risk term in the combined risk.
    """

    c_y: float = 0.5
    c_s: float = 0.5
    lam: float = 0.0

    def __post_init__(self) -> None:
        check_probability(self.c_y, "c_y")
        check_probability(self.c_s, "c_s")
        if not np.isfinite(self.lam) or self.lam < 0.0:
            raise ValueError(f"lam must be >= 0, got {self.lam!r}")


def _rule_vector(rule: DecisionRule, joint: DiscreteJoint) -> np.ndarray:
    if rule.probs.size != joint.support_size:
        raise ValueError(
            f"rule length {rule.probs.size} != joint support {joint.support_size}"
        )
    return rule.probs


def decision_conditionals(rule: DecisionRule, joint: DiscreteJoint) -> tuple[float, float]:
    """(p(decision=1|S=1), p(decision=1|S=0)) via Bayes rule over the joint."""
    r = _rule_vector(rule, joint)
    p_s1 = float(np.dot(joint.px, joint.ps_given_x))
    p_s0 = 1.0 - p_s1
    if p_s1 <= 0.0 or p_s0 <= 0.0:
        raise UndefinedMetricError("sensitive group empty")
    pos_s1 = float(np.dot(joint.px * joint.ps_given_x, r)) / p_s1
    pos_s0 = float(np.dot(joint.px * (1.0 - joint.ps_given_x), r)) / p_s0
    return pos_s1, pos_s0


def statistical_parity_signed(rule: DecisionRule, joint: DiscreteJoint) -> float:
    """p(decision=1|S=1) - p(decision=1|S=0), without orientation."""
    pos_s1, pos_s0 = decision_conditionals(rule, joint)
    return pos_s1 - pos_s0


def statistical_parity(rule: DecisionRule, joint: DiscreteJoint) -> tuple[float, Orientation]:
    """Oriented statistical parity in [0, 1] plus the swap flag."""
    sp = statistical_parity_signed(rule, joint)
    if sp < 0.0:
        return -sp, Orientation(swapped=True)
    return sp, Orientation(swapped=False)


def disparate_impact_signed(rule: DecisionRule, joint: DiscreteJoint) -> float:
    """1 - p(decision=1|S=0) / p(decision=1|S=1), without orientation.

    Undefined (raises) when p(decision=1, S=1) = 0.
    """
    pos_s1, pos_s0 = decision_conditionals(rule, joint)
    if pos_s1 <= 0.0:
        raise UndefinedMetricError("DI undefined: no positive decisions in group S=1")
    return 1.0 - pos_s0 / pos_s1


def disparate_impact(rule: DecisionRule, joint: DiscreteJoint) -> tuple[float, Orientation]:
    """Oriented normalized disparate impact in [0, 1] plus the swap flag."""
    pos_s1, pos_s0 = decision_conditionals(rule, joint)
    swapped = pos_s1 < pos_s0
    if swapped:
        pos_s1, pos_s0 = pos_s0, pos_s1
    if pos_s1 <= 0.0:
        raise UndefinedMetricError("DI undefined: no positive decisions at all")
    return 1.0 - pos_s0 / pos_s1, Orientation(swapped=swapped)


def balanced_error_rate(rule: DecisionRule, joint: DiscreteJoint) -> float:
    """Mean of the two class-conditional error rates of the rule viewed
    as a predictor of S: (p(decision=1|S=0) + p(decision=0|S=1)) / 2."""
    pos_s1, pos_s0 = decision_conditionals(rule, joint)
    return 0.5 * pos_s0 + 0.5 * (1.0 - pos_s1)


def empirical_group_rates(decisions, s_labels) -> tuple[float, float]:
    """(mean decision | s=1, mean decision | s=0) from label vectors."""
    dec = np.asarray(decisions, dtype=float)
    s = np.asarray(s_labels)
    if dec.size != s.size:
        raise ValueError("decisions and s_labels must have equal length")
    n1 = int(np.sum(s == 1))
    n0 = int(np.sum(s == 0))
    if n1 == 0 or n0 == 0:
        raise UndefinedMetricError("sensitive group empty")
    return float(dec[s == 1].mean()), float(dec[s == 0].mean())


def empirical_statistical_parity(decisions, s_labels) -> tuple[float, Orientation]:
    """Oriented statistical parity from observed decision and S vectors."""
    pos_s1, pos_s0 = empirical_group_rates(decisions, s_labels)
    sp = pos_s1 - pos_s0
    if sp < 0.0:
        return -sp, Orientation(swapped=True)
    return sp, Orientation(swapped=False)


def empirical_disparate_impact(decisions, s_labels) -> tuple[float, Orientation]:
    """Oriented normalized disparate impact from observed vectors."""
    pos_s1, pos_s0 = empirical_group_rates(decisions, s_labels)
    swapped = pos_s1 < pos_s0
    if swapped:
        pos_s1, pos_s0 = pos_s0, pos_s1
    if pos_s1 <= 0.0:
        raise UndefinedMetricError("DI undefined: no positive decisions at all")
    return 1.0 - pos_s0 / pos_s1, Orientation(swapped=swapped)


# ---------------------------------------------------------------------------
# Individual fairness
# ---------------------------------------------------------------------------


def absolute_difference(a: float, b: float) -> float:
    return abs(a - b)


def euclidean_distance(x, y) -> float:
    return float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))


def individual_unfairness(
    decision_prob: Callable,
    samples: Sequence,
    pair_count: int,
    seed: int,
    D: Callable[[float, float], float] = absolute_difference,
    d: Callable = euclidean_distance,
) -> float:
    """Monte-Carlo estimate of the probability that a random pair of
    individuals violates the individual-fairness condition
    D(p(x), p(x')) <= d(x, x').

    Pairs are drawn independently with replacement using the given
    seed, so the estimate is reproducible bit-for-bit.
    """
    pts = np.asarray(samples, dtype=float)
    if pts.size == 0:
        raise ValueError("empty sample set")
    if pair_count < 1:
        raise ValueError("pair_count must be >= 1")
    n = pts.shape[0]
    rng = np.random.default_rng(seed)
    left = rng.integers(0, n, size=pair_count)
    right = rng.integers(0, n, size=pair_count)
    probs = np.array([float(decision_prob(pts[i])) for i in range(n)])
    violations = 0
    for i, j in zip(left, right):
        if D(probs[i], probs[j]) > d(pts[i], pts[j]):
            violations += 1
    return violations / pair_count


def individual_unfairness_exhaustive(
    decision_prob: Callable,
    samples: Sequence,
    D: Callable[[float, float], float] = absolute_difference,
    d: Callable = euclidean_distance,
) -> float:
    """Exact individual unfairness over all ordered pairs (including
    identical pairs, which independent sampling can produce).  Quadratic;
    intended for small sample sets and as the oracle for the Monte-Carlo
    estimator."""
    pts = np.asarray(samples, dtype=float)
    if pts.size == 0:
        raise ValueError("empty sample set")
    n = pts.shape[0]
    probs = np.array([float(decision_prob(pts[i])) for i in range(n)])
    violations = 0
    for i in range(n):
        for j in range(n):
            if D(probs[i], probs[j]) > d(pts[i], pts[j]):
                violations += 1
    return violations / (n * n)


def reconstruction_stats(
    f: Callable,
    points,
    epsilon: float,
    d: Callable | None = None,
) -> tuple[float, float]:
    """(large-error rate, average error) of a reconstruction map.

    large-error rate: fraction of points with d(x, f(x)) > epsilon.
    average error:    mean d(x, f(x)).

    By default d is the Euclidean distance, computed row-wise; f is
    applied to the stacked point matrix in one call.
    """
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        raise ValueError("empty points")
    if epsilon < 0.0:
        raise ValueError("epsilon must be >= 0")
    if pts.ndim == 1:
        pts = pts[:, None]
    recon = np.asarray(f(pts), dtype=float)
    if recon.shape != pts.shape:
        raise ValueError(f"reconstruction shape {recon.shape} != input shape {pts.shape}")
    if d is None:
        errors = np.linalg.norm(pts - recon, axis=1)
    else:
        errors = np.array([float(d(pts[i], recon[i])) for i in range(pts.shape[0])])
    return float(np.mean(errors > epsilon)), float(np.mean(errors))


# ---------------------------------------------------------------------------
# Cost-sensitive risks
# ---------------------------------------------------------------------------


def cost_sensitive_risk(
    rule: DecisionRule,
    joint: DiscreteJoint,
    target: Literal["y", "s"],
    c: float,
) -> float:
    """c * p(decision=1, T=0) + (1-c) * p(decision=0, T=1) for T in {Y, S}."""
    check_probability(c, "c")
    r = _rule_vector(rule, joint)
    if target == "y":
        pt = joint.require_y()
    elif target == "s":
        pt = joint.ps_given_x
    else:
        raise ValueError(f"target must be 'y' or 's', got {target!r}")
    false_pos = float(np.dot(joint.px * (1.0 - pt), r))
    false_neg = float(np.dot(joint.px * pt, 1.0 - r))
    return c * false_pos + (1.0 - c) * false_neg


def combined_risk(rule: DecisionRule, joint: DiscreteJoint, params: CostParams) -> float:
    """Target risk minus lam times sensitive risk; may be negative."""
    r_y = cost_sensitive_risk(rule, joint, "y", params.c_y)
    r_s = cost_sensitive_risk(rule, joint, "s", params.c_s)
    return r_y - params.lam * r_s


def target_risk_generic(
    rule: DecisionRule,
    joint: DiscreteJoint,
    D: Callable[[float, float], float] = absolute_difference,
) -> float:
    """Expected pointwise divergence between the decision probabilities
    and the target conditionals: E_x[D(p(decision=1|x), p(Y=1|x))].

    This is the comparison-function form of the target risk; the
    cost-sensitive form above is what the experiment reports use.
    """
    r = _rule_vector(rule, joint)
    py = joint.require_y()
    vals = np.array([D(float(r[i]), float(py[i])) for i in range(r.size)])
    return float(np.dot(joint.px, vals))


def empirical_cost_sensitive_risk(decisions, labels, c: float) -> float:
    """Plug-in cost-sensitive risk from observed decision/label bits:
    c * freq(decision=1, label=0) + (1-c) * freq(decision=0, label=1)."""
    check_probability(c, "c")
    dec = np.asarray(decisions, dtype=float)
    lab = np.asarray(labels, dtype=float)
    if dec.size != lab.size:
        raise ValueError("decisions and labels must have equal length")
    if dec.size == 0:
        raise ValueError("empty inputs")
    fp = float(np.mean((dec == 1.0) & (lab == 0.0)))
    fn = float(np.mean((dec == 0.0) & (lab == 1.0)))
    return c * fp + (1.0 - c) * fn


def empirical_combined_risk(decisions, y_labels, s_labels, params: CostParams) -> float:
    """Plug-in combined risk from observed bits."""
    r_y = empirical_cost_sensitive_risk(decisions, y_labels, params.c_y)
    r_s = empirical_cost_sensitive_risk(decisions, s_labels, params.c_s)
    return r_y - params.lam * r_s
