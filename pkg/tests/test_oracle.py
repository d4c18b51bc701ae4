import numpy as np
import pytest

from faircert.certificates import di_certificate, sp_certificate_ber
from faircert.metrics import CostParams, DecisionRule, disparate_impact_signed, statistical_parity
from faircert.oracle import (
    EnumerationCapError,
    analytic_min_rys_value,
    collapse_joint,
    exact_cost_of_mistrust,
    max_di,
    max_sp,
    min_ber,
    min_rys,
    random_joint,
    run_verification,
)
from faircert.probability import DiscreteJoint, marginal_s, marginal_y


class TestMaxSp:
    def test_two_point_by_hand(self, two_point_joint):
        result = max_sp(two_point_joint)
        assert result.best_value == pytest.approx(0.6, abs=1e-12)
        np.testing.assert_array_equal(result.best_rule, [1.0, 0.0])
        assert result.rules_evaluated == 4

    def test_independent_s(self):
        joint = DiscreteJoint(px=[0.3, 0.7], ps_given_x=[0.4, 0.4])
        assert max_sp(joint).best_value == pytest.approx(0.0, abs=1e-12)

    def test_singleton_support(self):
        joint = DiscreteJoint(px=[1.0], ps_given_x=[0.5])
        assert max_sp(joint).best_value == pytest.approx(0.0, abs=1e-12)

    def test_cap(self):
        joint = random_joint(np.random.default_rng(0), 21)
        with pytest.raises(EnumerationCapError, match="enumeration cap"):
            max_sp(joint)

    def test_best_rule_reproduces_best_value(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            joint = random_joint(rng, int(rng.integers(2, 8)), interior_margin=0.02)
            result = max_sp(joint)
            sp, _ = statistical_parity(DecisionRule(result.best_rule), joint)
            assert sp == pytest.approx(result.best_value, abs=1e-12)


class TestMinBer:
    def test_two_point_by_hand(self, two_point_joint):
        result = min_ber(two_point_joint)
        assert result.best_value == pytest.approx(0.2, abs=1e-12)
        np.testing.assert_array_equal(result.best_rule, [1.0, 0.0])

    def test_independent_s(self):
        joint = DiscreteJoint(px=[0.5, 0.5], ps_given_x=[0.3, 0.3])
        assert min_ber(joint).best_value == pytest.approx(0.5, abs=1e-12)

    def test_s_function_of_x(self):
        joint = DiscreteJoint(px=[0.2, 0.8], ps_given_x=[1.0, 0.0])
        assert min_ber(joint).best_value == pytest.approx(0.0, abs=1e-12)

    def test_threshold_rule_is_optimal(self):
        rng = np.random.default_rng(15)
        for _ in range(200):
            joint = random_joint(rng, int(rng.integers(2, 9)), interior_margin=0.01)
            m = marginal_s(joint)
            enumerated = min_ber(joint).best_value
            threshold_rule = DecisionRule((joint.ps_given_x >= m).astype(float))
            from faircert.metrics import balanced_error_rate

            assert balanced_error_rate(threshold_rule, joint) == pytest.approx(
                enumerated, abs=1e-12
            )

    def test_sp_ber_identity(self):
        rng = np.random.default_rng(16)
        for _ in range(500):
            joint = random_joint(rng, int(rng.integers(2, 11)), interior_margin=0.01)
            assert max_sp(joint).best_value == pytest.approx(
                1.0 - 2.0 * min_ber(joint).best_value, abs=1e-12
            )


class TestMaxDi:
    def test_two_point_by_hand(self, two_point_joint):
        result = max_di(two_point_joint)
        assert result.best_value == pytest.approx(0.75, abs=1e-12)
        np.testing.assert_array_equal(result.best_rule, [1.0, 0.0])

    def test_independent_s(self):
        joint = DiscreteJoint(px=[0.5, 0.5], ps_given_x=[0.4, 0.4])
        assert max_di(joint).best_value == pytest.approx(0.0, abs=1e-12)

    def test_pure_point_reaches_one(self):
        joint = DiscreteJoint(px=[0.25, 0.75], ps_given_x=[1.0, 0.4])
        assert max_di(joint).best_value == pytest.approx(1.0, abs=1e-12)

    def test_randomized_rules_never_beat_deterministic_max(self):
        # the enumerated maximum over deterministic rules is the global
        # maximum over randomized rules as well
        rng = np.random.default_rng(17)
        for _ in range(100):
            joint = random_joint(rng, int(rng.integers(2, 7)), interior_margin=0.02)
            best = max_di(joint).best_value
            for _ in range(20):
                rule = DecisionRule(rng.random(joint.support_size))
                try:
                    value = disparate_impact_signed(rule, joint)
                except ValueError:
                    continue
                assert value <= best + 1e-9


class TestCertificateTightness:
    def test_sp_bound_tight_and_sound_on_exact_joints(self):
        rng = np.random.default_rng(18)
        for _ in range(200):
            joint = random_joint(rng, int(rng.integers(2, 11)), interior_margin=0.01)
            p_s1 = marginal_s(joint)
            bound = sp_certificate_ber(joint.ps_given_x, joint.px, p_s1)
            best = max_sp(joint)
            assert best.best_value <= bound + 1e-9
            assert best.best_value == pytest.approx(bound, abs=1e-9)

    def test_di_bound_tight_and_sound_on_exact_joints(self):
        rng = np.random.default_rng(19)
        for _ in range(200):
            joint = random_joint(rng, int(rng.integers(2, 11)), interior_margin=0.01)
            eta = float(joint.ps_given_x.max())
            if eta >= 1.0 - 1e-6:
                continue
            bound = di_certificate(eta, marginal_s(joint))
            best = max_di(joint)
            assert best.best_value <= bound + 1e-9
            assert best.best_value == pytest.approx(bound, abs=1e-9)


class TestMinRys:
    def test_lambda_zero_is_bayes_rule(self):
        rng = np.random.default_rng(20)
        joint = random_joint(rng, 6, with_y=True)
        params = CostParams(c_y=0.5, c_s=0.5, lam=0.0)
        result = min_rys(joint, params)
        bayes = (joint.py_given_x > 0.5).astype(float)
        np.testing.assert_array_equal(result.best_rule, bayes)

    def test_matches_analytic_form_on_random_instances(self):
        rng = np.random.default_rng(22)
        for _ in range(500):
            joint = random_joint(rng, int(rng.integers(2, 9)), with_y=True)
            params = CostParams(
                c_y=float(rng.random()),
                c_s=float(rng.random()),
                lam=float(rng.uniform(0.0, 3.0)),
            )
            enumerated = min_rys(joint, params).best_value
            assert enumerated == pytest.approx(
                analytic_min_rys_value(joint, params), abs=1e-12
            )

    def test_no_cost_when_signals_agree_on_merged_points(self):
        # two equiprobable points whose optimal decisions agree; mapping
        # both to one point cannot change the optimum
        joint = DiscreteJoint(
            px=[0.5, 0.5], ps_given_x=[0.6, 0.55], py_given_x=[0.9, 0.8]
        )
        params = CostParams(c_y=0.5, c_s=0.5, lam=1.0)
        assert exact_cost_of_mistrust(joint, [0, 0], params) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_maximum_cost_when_collapsed_optimum_flips(self):
        # opposite-signed points: collapsing forces the constant-0
        # decision, so the cost reaches its ceiling for this optimum
        joint = DiscreteJoint(
            px=[0.5, 0.5], ps_given_x=[0.5, 0.9], py_given_x=[0.8, 0.4]
        )
        params = CostParams(c_y=0.5, c_s=0.5, lam=1.0)
        collapsed = collapse_joint(joint, [0, 0])
        assert min_rys(collapsed, params).best_rule.sum() == 0  # constant 0
        rys_max = (1 - params.c_y) * marginal_y(joint) - params.lam * (
            1 - params.c_s
        ) * marginal_s(joint)
        cost = exact_cost_of_mistrust(joint, [0, 0], params)
        assert cost == pytest.approx(
            rys_max - min_rys(joint, params).best_value, abs=1e-12
        )
        assert cost > 0.0


class TestExactCostOfMistrust:
    def test_identity_map(self):
        rng = np.random.default_rng(23)
        joint = random_joint(rng, 5, with_y=True)
        params = CostParams(c_y=0.4, c_s=0.6, lam=1.2)
        assert exact_cost_of_mistrust(joint, np.arange(5), params) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_never_negative(self):
        rng = np.random.default_rng(24)
        for _ in range(300):
            size = int(rng.integers(2, 8))
            joint = random_joint(rng, size, with_y=True)
            f_map = rng.integers(0, size, size=size)
            params = CostParams(
                c_y=float(rng.random()),
                c_s=float(rng.random()),
                lam=float(rng.uniform(0.0, 3.0)),
            )
            assert exact_cost_of_mistrust(joint, f_map, params) >= -1e-12

    def test_zero_when_analytic_rule_agrees_on_fibers(self):
        rng = np.random.default_rng(25)
        found = 0
        while found < 50:
            size = int(rng.integers(3, 8))
            joint = random_joint(rng, size, with_y=True)
            params = CostParams(
                c_y=float(rng.random()),
                c_s=float(rng.random()),
                lam=float(rng.uniform(0.0, 2.0)),
            )
            decisions = min_rys(joint, params).best_rule
            # merge only points with equal optimal decisions
            groups = {0.0: [], 1.0: []}
            for i, d in enumerate(decisions):
                groups[float(d)].append(i)
            f_map = np.arange(size)
            for members in groups.values():
                if len(members) > 1:
                    f_map[members] = members[0]
            if np.all(f_map == np.arange(size)):
                continue
            found += 1
            assert exact_cost_of_mistrust(joint, f_map, params) == pytest.approx(
                0.0, abs=1e-12
            )


class TestCollapse:
    def test_mass_and_conditionals(self):
        joint = DiscreteJoint(
            px=[0.2, 0.3, 0.5], ps_given_x=[1.0, 0.0, 0.4], py_given_x=[1.0, 1.0, 0.0]
        )
        collapsed = collapse_joint(joint, [0, 0, 2])
        np.testing.assert_allclose(collapsed.px, [0.5, 0.5])
        np.testing.assert_allclose(collapsed.ps_given_x, [0.4, 0.4])
        np.testing.assert_allclose(collapsed.py_given_x, [1.0, 0.0])

    def test_preserves_marginals(self):
        rng = np.random.default_rng(26)
        for _ in range(100):
            size = int(rng.integers(2, 9))
            joint = random_joint(rng, size, with_y=True)
            f_map = rng.integers(0, size, size=size)
            collapsed = collapse_joint(joint, f_map)
            assert marginal_s(collapsed) == pytest.approx(marginal_s(joint), abs=1e-12)
            assert marginal_y(collapsed) == pytest.approx(marginal_y(joint), abs=1e-12)


class TestVerificationSuite:
    def test_five_hundred_joints_no_violations(self):
        summary = run_verification(seed=1, n_joints=500, max_support=10)
        assert summary.ok
        assert summary.max_sp_tightness_gap <= 1e-9
        assert summary.max_di_tightness_gap <= 1e-9
        assert summary.max_dominance_gap <= 0.0 + 1e-9
        assert summary.max_rys_gap <= 1e-12

    def test_deterministic(self):
        a = run_verification(seed=5, n_joints=50)
        b = run_verification(seed=5, n_joints=50)
        assert a == b
