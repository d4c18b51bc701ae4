"""Exact finite probability machinery.

Everything downstream (fairness metrics, certificates, brute-force
oracles) is built on top of a single substrate: a finite joint
distribution over a discrete input alphabet X with a binary sensitive
bit S and an optional binary target bit Y.  The joint is stored as the
marginal p(X=x) together with the conditionals p(S=1|X=x) and
p(Y=1|X=x), which is the natural parameterization for every quantity
computed in this package.

Conventions:
  - 0 * log2(0) := 0, so degenerate distributions are valid inputs.
  - Probabilities are doubles; marginals must sum to 1 within 1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PROB_ATOL = 1e-12


def check_probability(value: float, name: str = "p") -> float:
    """Validate a scalar probability and return it as a float.

    Raises ValueError for NaN/Inf or values outside [0, 1].
    """
    v = float(value)
    if not math.isfinite(v):
        raise ValueError(f"{name} must be finite, got {value!r}")
    if v < 0.0 or v > 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {v}")
    return v


def _as_prob_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"{name} entries must be in [0, 1]")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class DiscreteJoint:
    """Finite joint distribution over (X, S) and optionally Y.

    Fields:
        px:         marginal probabilities p(X=x), one entry per support
                    point, non-negative and summing to 1 within 1e-12.
        ps_given_x: conditionals p(S=1|X=x) in [0, 1].
        py_given_x: optional conditionals p(Y=1|X=x) in [0, 1].
    """

    px: np.ndarray
    ps_given_x: np.ndarray
    py_given_x: np.ndarray | None = None

    def __post_init__(self) -> None:
        px = np.asarray(self.px, dtype=float)
        if px.ndim != 1 or px.size < 1:
            raise ValueError("px must be a non-empty vector")
        if not np.all(np.isfinite(px)) or np.any(px < 0.0):
            raise ValueError("px entries must be finite and >= 0")
        if abs(px.sum() - 1.0) > PROB_ATOL:
            raise ValueError(f"px must sum to 1 within {PROB_ATOL}, got {px.sum()!r}")
        px = px.copy()
        px.flags.writeable = False
        object.__setattr__(self, "px", px)

        ps = _as_prob_vector(self.ps_given_x, "ps_given_x")
        if ps.size != px.size:
            raise ValueError("ps_given_x length must equal px length")
        object.__setattr__(self, "ps_given_x", ps)

        if self.py_given_x is not None:
            py = _as_prob_vector(self.py_given_x, "py_given_x")
            if py.size != px.size:
                raise ValueError("py_given_x length must equal px length")
            object.__setattr__(self, "py_given_x", py)

    @property
    def support_size(self) -> int:
        return int(self.px.size)

    @property
    def has_y(self) -> bool:
        return self.py_given_x is not None

    def require_y(self) -> np.ndarray:
        if self.py_given_x is None:
            raise ValueError("joint has no target conditionals p(Y=1|X=x)")
        return self.py_given_x


def empirical_joint(x_indices, s_labels, y_labels=None) -> DiscreteJoint:
    """Empirical joint distribution from a finite sample.

    Support points are the distinct observed x values in sorted order;
    values never observed are excluded.  Marginals and conditionals are
    plain counting frequencies.
    """
    x = np.asarray(x_indices)
    s = np.asarray(s_labels, dtype=float)
    if x.size == 0:
        raise ValueError("empty sample")
    if s.size != x.size:
        raise ValueError(f"length mismatch: {x.size} x values vs {s.size} s labels")
    if np.any((s != 0.0) & (s != 1.0)):
        raise ValueError("s_labels must be bits")

    _, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    n = x.size
    px = counts / n
    ps = np.bincount(inverse, weights=s) / counts

    py = None
    if y_labels is not None:
        y = np.asarray(y_labels, dtype=float)
        if y.size != x.size:
            raise ValueError(f"length mismatch: {x.size} x values vs {y.size} y labels")
        if np.any((y != 0.0) & (y != 1.0)):
            raise ValueError("y_labels must be bits")
        py = np.bincount(inverse, weights=y) / counts

    return DiscreteJoint(px=px, ps_given_x=ps, py_given_x=py)


def marginal_s(joint: DiscreteJoint) -> float:
    """p(S=1) by total probability over the support."""
    return float(np.dot(joint.px, joint.ps_given_x))


def marginal_y(joint: DiscreteJoint) -> float:
    """p(Y=1) by total probability over the support."""
    return float(np.dot(joint.px, joint.require_y()))


def binary_entropy(p):
    """Entropy in bits of a Bernoulli(p) variable, with 0*log2(0) = 0.

    Accepts a scalar or an array; the return type matches the input.
    """
    arr = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("p must be finite")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError("p must be in [0, 1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = -np.where(arr > 0.0, arr * np.log2(arr, where=arr > 0.0), 0.0)
        q = 1.0 - arr
        terms -= np.where(q > 0.0, q * np.log2(q, where=q > 0.0), 0.0)
    if np.ndim(p) == 0:
        return float(terms)
    return terms


_BISECTION_TOL = 1e-12


def inverse_binary_entropy(h: float) -> float:
    """The unique p in [0, 1/2] with binary_entropy(p) = h.

    No closed form exists; solved by bisection to absolute tolerance
    1e-12 in p, far below every tolerance used by the certificates.
    """
    hv = float(h)
    if not math.isfinite(hv) or hv < 0.0 or hv > 1.0:
        raise ValueError(f"entropy value must be in [0, 1], got {h!r}")
    if hv == 0.0:
        return 0.0
    if hv == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    while hi - lo > _BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < hv:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def conditional_entropy(joint: DiscreteJoint) -> float:
    """H(S|X) in bits: the px-weighted average of H_b(p(S=1|X=x))."""
    return float(np.dot(joint.px, binary_entropy(joint.ps_given_x)))
