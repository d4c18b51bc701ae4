import numpy as np
import pytest
from hypothesis import given, strategies as st

from faircert.probability import (
    DiscreteJoint,
    binary_entropy,
    conditional_entropy,
    empirical_joint,
    inverse_binary_entropy,
    marginal_s,
)
from faircert.oracle import random_joint

# -p log2 p - (1-p) log2 (1-p) at p = 0.8, evaluated with 30-digit
# arithmetic and frozen here.
H_08 = 0.7219280948873623


class TestEmpiricalJoint:
    def test_direct_counting(self):
        joint = empirical_joint([0, 0, 1, 1], [1, 0, 1, 1])
        np.testing.assert_allclose(joint.px, [0.5, 0.5])
        np.testing.assert_allclose(joint.ps_given_x, [0.5, 1.0])

    def test_singleton(self):
        joint = empirical_joint([0], [1])
        np.testing.assert_allclose(joint.px, [1.0])
        np.testing.assert_allclose(joint.ps_given_x, [1.0])

    def test_perfectly_separated(self):
        joint = empirical_joint([0, 1] * 5, [1, 0] * 5)
        np.testing.assert_allclose(joint.ps_given_x, [1.0, 0.0])

    def test_unobserved_values_excluded(self):
        joint = empirical_joint([0, 0, 5, 5, 9], [1, 0, 1, 1, 0])
        assert joint.support_size == 3

    def test_empty_sample(self):
        with pytest.raises(ValueError, match="empty sample"):
            empirical_joint([], [])

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="length mismatch"):
            empirical_joint([0, 1], [1])

    def test_frequencies_reproduced_exactly(self):
        rng = np.random.default_rng(3)
        x = rng.integers(0, 7, size=200)
        s = rng.integers(0, 2, size=200)
        y = rng.integers(0, 2, size=200)
        joint = empirical_joint(x, s, y)
        values, counts = np.unique(x, return_counts=True)
        assert np.all(joint.px == counts / 200)
        for i, v in enumerate(values):
            assert joint.ps_given_x[i] == s[x == v].sum() / counts[i]
            assert joint.py_given_x[i] == y[x == v].sum() / counts[i]


class TestDiscreteJointInvariants:
    def test_px_must_sum_to_one(self):
        with pytest.raises(ValueError, match="sum to 1"):
            DiscreteJoint(px=[0.5, 0.6], ps_given_x=[0.5, 0.5])

    def test_conditionals_in_unit_interval(self):
        with pytest.raises(ValueError):
            DiscreteJoint(px=[1.0], ps_given_x=[1.5])

    def test_length_consistency(self):
        with pytest.raises(ValueError):
            DiscreteJoint(px=[0.5, 0.5], ps_given_x=[0.5])

    def test_arrays_immutable(self, two_point_joint):
        with pytest.raises(ValueError):
            two_point_joint.px[0] = 0.9


class TestMarginal:
    def test_two_point_by_hand(self, two_point_joint):
        # 0.5 * 0.8 + 0.5 * 0.2
        assert marginal_s(two_point_joint) == pytest.approx(0.5, abs=1e-15)

    def test_all_ones(self):
        joint = DiscreteJoint(px=[0.3, 0.7], ps_given_x=[1.0, 1.0])
        assert marginal_s(joint) == 1.0


class TestBinaryEntropy:
    def test_maximum(self):
        assert binary_entropy(0.5) == 1.0

    def test_degenerate_convention(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    def test_high_precision_value(self):
        assert binary_entropy(0.8) == pytest.approx(H_08, abs=1e-15)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            binary_entropy(-0.1)
        with pytest.raises(ValueError):
            binary_entropy(1.1)

    @given(st.floats(min_value=0.0, max_value=1.0))
    def test_symmetric(self, p):
        q = 1.0 - p
        if 1.0 - q == p:
            # p and q are exact floating-point complements: the formula
            # evaluates identically with the roles swapped.
            assert binary_entropy(p) == binary_entropy(q)
        else:
            # rounding in 1 - p perturbs the argument before the call
            assert binary_entropy(p) == pytest.approx(binary_entropy(q), abs=1e-12)

    def test_vectorized_matches_scalar(self):
        ps = np.linspace(0.0, 1.0, 17)
        np.testing.assert_array_equal(binary_entropy(ps), [binary_entropy(p) for p in ps])


class TestInverseBinaryEntropy:
    def test_endpoints(self):
        assert inverse_binary_entropy(1.0) == 0.5
        assert inverse_binary_entropy(0.0) == 0.0

    def test_known_value(self):
        assert inverse_binary_entropy(0.721928) == pytest.approx(0.2, abs=1e-6)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            inverse_binary_entropy(1.5)

    def test_round_trip_on_grid(self):
        for h in np.linspace(0.0, 1.0, 1000):
            assert abs(binary_entropy(inverse_binary_entropy(h)) - h) <= 1e-9

    def test_monotone_on_grid(self):
        values = [inverse_binary_entropy(h) for h in np.linspace(0.0, 1.0, 500)]
        assert all(a <= b for a, b in zip(values, values[1:]))


class TestConditionalEntropy:
    def test_two_point_by_hand(self, two_point_joint):
        # 0.5 * H(0.8) + 0.5 * H(0.2) and H is symmetric
        assert conditional_entropy(two_point_joint) == pytest.approx(H_08, abs=1e-15)

    def test_uninformative_input(self):
        joint = DiscreteJoint(px=[0.25, 0.75], ps_given_x=[0.3, 0.3])
        assert conditional_entropy(joint) == pytest.approx(
            binary_entropy(marginal_s(joint)), abs=1e-12
        )

    def test_deterministic_conditionals(self):
        joint = DiscreteJoint(px=[0.5, 0.5], ps_given_x=[0.0, 1.0])
        assert conditional_entropy(joint) == 0.0

    def test_conditioning_reduces_entropy(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            joint = random_joint(rng, int(rng.integers(1, 9)))
            bound = binary_entropy(marginal_s(joint))
            assert conditional_entropy(joint) <= bound + 1e-12
