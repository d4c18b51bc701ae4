"""Brute-force ground truth on small discrete instances.

For a joint with n support points there are 2^n deterministic decision
rules.  Statistical parity and the combined risk are affine in the
rule's entries, so the extremum over all randomized rules is attained
at a deterministic one and exhaustive enumeration is exact.  For
disparate impact (a ratio of two affine functions) the maximum over
deterministic rules is asserted to be exact as a tested property on
random instances rather than assumed.

These enumerations exist to verify the certificates: every bound must
dominate every enumerated rule (soundness) and be attained by one
(tightness, where claimed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .certificates import di_certificate, sp_certificate_ber, sp_certificate_entropy
from .metrics import CostParams
from .probability import DiscreteJoint, marginal_s, marginal_y

ENUMERATION_CAP = 20


class EnumerationCapError(ValueError):
    """Support too large for exhaustive rule enumeration."""


@dataclass(frozen=True)
class EnumerationResult:
    best_value: float
    best_rule: np.ndarray
    rules_evaluated: int


def _all_rules(n: int) -> np.ndarray:
    """All 2^n deterministic rules as a (2^n, n) 0/1 matrix; row index i
    is the rule whose entry for support point j is bit j of i."""
    if n > ENUMERATION_CAP:
        raise EnumerationCapError(
            f"enumeration cap exceeded: support {n} > {ENUMERATION_CAP}"
        )
    masks = np.arange(2**n, dtype=np.int64)
    return ((masks[:, None] >> np.arange(n)) & 1).astype(float)


def _check_s_interior(joint: DiscreteJoint) -> tuple[float, float]:
    p_s1 = marginal_s(joint)
    p_s0 = 1.0 - p_s1
    if p_s1 <= 0.0 or p_s0 <= 0.0:
        raise ValueError("sensitive group empty")
    return p_s1, p_s0


def max_sp(joint: DiscreteJoint) -> EnumerationResult:
    """Maximum oriented statistical parity over all deterministic rules.

    The signed parity of a rule r is sum_x a_x r_x with
    a_x = px [ p(S=1|x)/p(S=1) - p(S=0|x)/p(S=0) ], and the a_x sum to
    zero, so the maximum of the oriented value equals the maximum of
    the signed value; no orientation pass is needed here.
    """
    p_s1, p_s0 = _check_s_interior(joint)
    coeff = joint.px * (joint.ps_given_x / p_s1 - (1.0 - joint.ps_given_x) / p_s0)
    rules = _all_rules(joint.support_size)
    values = rules @ coeff
    best = int(np.argmax(values))
    return EnumerationResult(
        best_value=float(values[best]),
        best_rule=rules[best].copy(),
        rules_evaluated=rules.shape[0],
    )


def min_ber(joint: DiscreteJoint) -> EnumerationResult:
    """Minimum balanced error rate (predicting S) over deterministic rules."""
    p_s1, p_s0 = _check_s_interior(joint)
    coeff = 0.5 * joint.px * ((1.0 - joint.ps_given_x) / p_s0 - joint.ps_given_x / p_s1)
    rules = _all_rules(joint.support_size)
    values = 0.5 + rules @ coeff
    best = int(np.argmin(values))
    return EnumerationResult(
        best_value=float(values[best]),
        best_rule=rules[best].copy(),
        rules_evaluated=rules.shape[0],
    )


def max_di(joint: DiscreteJoint) -> EnumerationResult:
    """Maximum signed disparate impact over deterministic rules.

    Rules with p(decision=1, S=1) = 0 are skipped because DI is
    undefined there.  The value is computed in the fixed S orientation
    (the same frame in which the DI certificate is stated)."""
    p_s1, p_s0 = _check_s_interior(joint)
    rules = _all_rules(joint.support_size)
    pos_s1 = rules @ (joint.px * joint.ps_given_x)
    pos_s0 = rules @ (joint.px * (1.0 - joint.ps_given_x))
    valid = pos_s1 > 0.0
    if not np.any(valid):
        raise ValueError("DI undefined for every rule")
    di = np.full(rules.shape[0], -np.inf)
    di[valid] = 1.0 - (pos_s0[valid] / p_s0) / (pos_s1[valid] / p_s1)
    best = int(np.argmax(di))
    return EnumerationResult(
        best_value=float(di[best]),
        best_rule=rules[best].copy(),
        rules_evaluated=rules.shape[0],
    )


def _rys_coefficients(joint: DiscreteJoint, params: CostParams) -> tuple[np.ndarray, float]:
    """Combined risk of rule r is base + sum_x coeff_x r_x, where base is
    the risk of the constant-0 rule."""
    py = joint.require_y()
    ps = joint.ps_given_x
    coeff = joint.px * (
        (params.c_y - py) - params.lam * (params.c_s - ps)
    )
    base = (1.0 - params.c_y) * marginal_y(joint) - params.lam * (1.0 - params.c_s) * marginal_s(joint)
    return coeff, base


def min_rys(joint: DiscreteJoint, params: CostParams) -> EnumerationResult:
    """Minimum combined risk over deterministic rules.

    Equals the analytic threshold rule 1(p(Y=1|x) - c_y > lam (p(S=1|x) - c_s))
    up to ties in the strict inequality, which do not change the value."""
    _check_s_interior(joint)
    coeff, base = _rys_coefficients(joint, params)
    rules = _all_rules(joint.support_size)
    values = base + rules @ coeff
    best = int(np.argmin(values))
    return EnumerationResult(
        best_value=float(values[best]),
        best_rule=rules[best].copy(),
        rules_evaluated=rules.shape[0],
    )


def analytic_min_rys_value(joint: DiscreteJoint, params: CostParams) -> float:
    """Closed-form optimum of the combined risk: the threshold rule's
    coefficient sum plus the constant-0 rule's risk."""
    coeff, base = _rys_coefficients(joint, params)
    rule = (coeff < 0.0).astype(float)
    return float(base + rule @ coeff)


def collapse_joint(joint: DiscreteJoint, f_map) -> DiscreteJoint:
    """Push the joint through a support-to-support map f.

    Points mapped to the same image are merged: the merged mass is the
    fiber's total mass and the merged conditionals are the mass-weighted
    averages, which is exactly the distribution of (f(X), S, Y)."""
    f = np.asarray(f_map, dtype=int)
    if f.shape != (joint.support_size,):
        raise ValueError("f_map must assign an image to every support point")
    if np.any(f < 0) or np.any(f >= joint.support_size):
        raise ValueError("f_map images must be support indices")
    images, inverse = np.unique(f, return_inverse=True)
    px = np.bincount(inverse, weights=joint.px)
    ps = np.bincount(inverse, weights=joint.px * joint.ps_given_x) / px
    py = None
    if joint.has_y:
        py = np.bincount(inverse, weights=joint.px * joint.require_y()) / px
    return DiscreteJoint(px=px, ps_given_x=np.clip(ps, 0.0, 1.0),
                         py_given_x=None if py is None else np.clip(py, 0.0, 1.0))


def exact_cost_of_mistrust(joint: DiscreteJoint, f_map, params: CostParams) -> float:
    """Exact excess optimal combined risk from deciding on f(X) instead
    of X: min over fiber-constant rules minus min over all rules."""
    collapsed = collapse_joint(joint, f_map)
    return min_rys(collapsed, params).best_value - min_rys(joint, params).best_value


def exact_lipschitz_constants(joint: DiscreteJoint, points) -> tuple[float, float]:
    """Exact moduli of x -> p(Y=1|x) and x -> p(S=1|x) over all support
    pairs, for supports embedded at the given points: the max of
    |delta conditional| / distance."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] != joint.support_size:
        raise ValueError("one embedding point per support point required")
    py = joint.require_y()
    ps = joint.ps_given_x
    l_y = 0.0
    l_s = 0.0
    for i in range(pts.shape[0]):
        for j in range(i + 1, pts.shape[0]):
            dist = float(np.linalg.norm(pts[i] - pts[j]))
            if dist == 0.0:
                if py[i] != py[j] or ps[i] != ps[j]:
                    raise ValueError("coincident points with different conditionals")
                continue
            l_y = max(l_y, abs(float(py[i] - py[j])) / dist)
            l_s = max(l_s, abs(float(ps[i] - ps[j])) / dist)
    return l_y, l_s


def random_joint(
    rng: np.random.Generator,
    support_size: int,
    with_y: bool = False,
    interior_margin: float = 0.0,
) -> DiscreteJoint:
    """Seeded random instance: normalized uniform masses and uniform
    conditionals, optionally kept away from {0, 1} by a margin."""
    if support_size < 1:
        raise ValueError("support_size must be >= 1")
    raw = rng.random(support_size) + 1e-9
    px = raw / raw.sum()
    lo, hi = interior_margin, 1.0 - interior_margin
    ps = rng.uniform(lo, hi, size=support_size)
    py = rng.uniform(lo, hi, size=support_size) if with_y else None
    return DiscreteJoint(px=px, ps_given_x=ps, py_given_x=py)


@dataclass(frozen=True)
class VerificationSummary:
    """Outcome of the randomized bound-verification suite."""

    joints_checked: int
    violations: int
    max_sp_tightness_gap: float
    max_sp_soundness_gap: float
    max_di_tightness_gap: float
    max_dominance_gap: float
    max_rys_gap: float

    @property
    def ok(self) -> bool:
        return self.violations == 0


def run_verification(
    seed: int,
    n_joints: int = 500,
    max_support: int = 10,
    tol: float = 1e-9,
) -> VerificationSummary:
    """Verify the statistical-parity and disparate-impact bounds plus
    the analytic combined-risk optimum against exhaustive enumeration on
    seeded random joints.  Returns worst gaps and a violation count."""
    rng = np.random.default_rng(seed)
    violations = 0
    sp_tight = sp_sound = di_tight = dom = rys = 0.0
    for _ in range(n_joints):
        size = int(rng.integers(2, max_support + 1))
        joint = random_joint(rng, size, with_y=True)
        p_s1 = marginal_s(joint)
        if p_s1 <= 1e-9 or p_s1 >= 1.0 - 1e-9:
            continue

        sp_best = max_sp(joint)
        ber_bound = sp_certificate_ber(joint.ps_given_x, joint.px, p_s1)
        ent_bound = sp_certificate_entropy(joint.ps_given_x, joint.px, p_s1)
        sp_tight = max(sp_tight, abs(sp_best.best_value - ber_bound))
        sp_sound = max(sp_sound, sp_best.best_value - ber_bound)
        dom = max(dom, ber_bound - ent_bound)
        if abs(sp_best.best_value - ber_bound) > tol or ber_bound > ent_bound + tol:
            violations += 1

        eta = float(joint.ps_given_x.max())
        if eta < 1.0 - 1e-6 and eta > 0.0:
            di_best = max_di(joint)
            di_bound = di_certificate(eta, p_s1)
            di_tight = max(di_tight, abs(di_best.best_value - di_bound))
            if abs(di_best.best_value - di_bound) > tol:
                violations += 1

        params = CostParams(
            c_y=float(rng.uniform(0.05, 0.95)),
            c_s=float(rng.uniform(0.05, 0.95)),
            lam=float(rng.uniform(0.0, 3.0)),
        )
        enum_value = min_rys(joint, params).best_value
        analytic = analytic_min_rys_value(joint, params)
        rys = max(rys, abs(enum_value - analytic))
        if abs(enum_value - analytic) > 1e-12:
            violations += 1

    return VerificationSummary(
        joints_checked=n_joints,
        violations=violations,
        max_sp_tightness_gap=sp_tight,
        max_sp_soundness_gap=sp_sound,
        max_di_tightness_gap=di_tight,
        max_dominance_gap=dom,
        max_rys_gap=rys,
    )
