import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mpirl.domains import DEFAULT_MPMCE_GAMMAS, DomainKind, ExpertSet, Regime, make_experts
from mpirl.mce import (
    InnerConfig,
    WarmStartCache,
    display_reward,
    dual_function_value,
    duality_gap,
    ml_objective,
    primal_dual_gap,
    solve_inner_dual,
)
from mpirl.mdp import causal_entropy, occupancy_measure, reward_feature_expectation, soft_value_iteration

from conftest import random_mdp

TRUTH = DEFAULT_MPMCE_GAMMAS[DomainKind.TOY]


@pytest.fixture(scope="module")
def soft_toy(toy):
    return make_experts(toy, TRUTH, Regime.ENTROPY_REGULARIZED)


def soft_experts(mdp, theta, gammas):
    reward = mdp.linear_reward(theta)
    return ExpertSet([soft_value_iteration(mdp, g, reward=reward)[1] for g in gammas], gammas, Regime.ENTROPY_REGULARIZED)


def kl_oracle(mdp, theta, experts, gammas):
    reward = mdp.linear_reward(theta)
    total = 0.0
    for pol, g in zip(experts.policies, gammas):
        _, probs = soft_value_iteration(mdp, g, reward=reward)
        mu = occupancy_measure(mdp, pol, g).mu_sa
        total += np.sum(mu * (np.log(pol) - np.log(probs)))
    return mdp.temperature * total


class TestDualQuantities:
    @given(st.integers(0, 5000))
    @settings(max_examples=15, deadline=None)
    def test_gradient_matches_finite_differences(self, seed):
        mdp = random_mdp(seed, n_states=4, n_actions=2)
        rng = np.random.default_rng(seed)
        gammas = (0.3, 0.7)
        experts = soft_experts(mdp, rng.normal(size=4), gammas)
        theta = rng.normal(size=4)
        # analytic gradient: sum_k g_k(theta) - g*_k with entered-state feature counts
        grad = np.zeros(4)
        for pol, g in zip(experts.policies, gammas):
            _, probs = soft_value_iteration(mdp, g, reward=mdp.linear_reward(theta))
            grad += reward_feature_expectation(mdp, probs, g) - reward_feature_expectation(mdp, pol, g)
        h = 1e-6
        fd = np.array(
            [
                (dual_function_value(mdp, theta + h * e, gammas, experts) - dual_function_value(mdp, theta - h * e, gammas, experts))
                / (2 * h)
                for e in np.eye(4)
            ]
        )
        assert np.allclose(fd, grad, rtol=1e-5, atol=1e-7 * max(1.0, np.abs(grad).max()))

    @given(st.integers(0, 5000))
    @settings(max_examples=15, deadline=None)
    def test_gap_is_expected_kl(self, seed):
        mdp = random_mdp(seed, n_states=4, n_actions=3)
        rng = np.random.default_rng(seed)
        gammas = (0.2, 0.8)
        experts = soft_experts(mdp, rng.normal(size=4), gammas)
        theta = rng.normal(size=4)
        gap = primal_dual_gap(mdp, theta, experts, gammas)
        assert gap >= -1e-10
        assert gap == pytest.approx(kl_oracle(mdp, theta, experts, gammas), rel=1e-7, abs=1e-9)

    def test_dual_value_decomposition(self, toy, soft_toy):
        theta = np.array([0.5, -1.0, 2.0, 3.0])
        expert_entropy = sum(causal_entropy(toy, p, g) for p, g in zip(soft_toy.policies, TRUTH))
        d = dual_function_value(toy, theta, TRUTH, soft_toy)
        assert d - toy.temperature * expert_entropy == pytest.approx(primal_dual_gap(toy, theta, soft_toy, TRUTH))

    def test_zero_at_truth(self, toy, soft_toy):
        assert primal_dual_gap(toy, toy.reward, soft_toy, TRUTH) == pytest.approx(0.0, abs=1e-9)
        assert duality_gap(toy, toy.reward, soft_toy, TRUTH) == pytest.approx(0.0, abs=1e-9)


class TestInnerSolver:
    @pytest.mark.parametrize("method", ["lbfgs", "gradient"])
    def test_recovers_random_experts(self, method):
        mdp = random_mdp(3, n_states=4, n_actions=3)
        theta_true = np.array([1.0, -0.5, 0.3, 2.0])
        gammas = (0.4, 0.8)
        experts = soft_experts(mdp, theta_true, gammas)
        out = solve_inner_dual(mdp, experts, gammas, InnerConfig(method=method))
        assert out.feasible
        assert out.dual.primal_dual_gap <= 1e-6
        for pol, probs in zip(experts.policies, out.dual.policies):
            assert np.max(np.abs(pol - probs)) <= 1e-3

    def test_truth_is_a_fixed_point(self, toy, soft_toy):
        out = solve_inner_dual(toy, soft_toy, TRUTH, r_max=10)
        assert out.feasible and abs(out.dual.duality_gap) <= 1e-3
        for pol, probs, g in zip(soft_toy.policies, out.dual.policies, TRUTH):
            mu_star = occupancy_measure(toy, pol, g).mu_sa
            mu_hat = occupancy_measure(toy, probs, g).mu_sa
            assert np.max(np.abs(mu_star - mu_hat)) <= 1e-3
        assert out.score == pytest.approx(out.dual.entropies.sum())

    def test_infeasible_scores_negative_gap(self, toy, soft_toy):
        out = solve_inner_dual(toy, soft_toy, TRUTH, InnerConfig(epsilon=1e-12, max_grad_steps=3))
        assert not out.feasible
        assert out.score == pytest.approx(-abs(out.dual.primal_dual_gap))

    def test_cold_and_warm_starts_agree(self, toy, soft_toy):
        cold = solve_inner_dual(toy, soft_toy, (0.3, 0.6, 0.9))
        warm = solve_inner_dual(toy, soft_toy, (0.3, 0.6, 0.9), theta0=cold.dual.theta)
        assert warm.dual.primal_dual_gap <= cold.dual.primal_dual_gap + 1e-9

    def test_to_dict_has_schema_keys(self, toy, soft_toy):
        d = solve_inner_dual(toy, soft_toy, TRUTH).dual.to_dict()
        assert {"theta", "gammas", "duality_gap", "entropies", "policies"} <= set(d)

    def test_rejects_unknown_method(self):
        with pytest.raises(ValueError):
            InnerConfig(method="newton")


class TestMlObjective:
    def test_finite_inside_and_nan_at_edges(self, toy, soft_toy):
        rep = ml_objective(toy, toy.reward, (0.0, 0.5, 0.95), soft_toy)
        assert np.isnan(rep.grad_delta[0])
        assert np.all(np.isfinite(rep.grad_delta[1:]))
        assert rep.value == pytest.approx(rep.per_expert.sum())

    def test_likelihood_peaks_at_expert_policy(self, toy, soft_toy):
        # the expert's own log-likelihood is maximal when theta reproduces it
        at_truth = ml_objective(toy, toy.reward, TRUTH, soft_toy).value
        off = ml_objective(toy, toy.reward + np.array([0.0, 1.0, 0.0, 0.0]), TRUTH, soft_toy).value
        assert at_truth > off


class TestHelpers:
    def test_display_reward_anchor(self, toy):
        r = display_reward(toy, np.array([1.0, 2.0, 3.0, 4.0]), 10.0)
        assert r[3] == pytest.approx(10.0)
        assert np.allclose(np.diff(r), 1.0)

    def test_cache_returns_nearest(self):
        cache = WarmStartCache()
        assert cache.nearest([0.1, 0.2]) is None
        cache.add([0.1, 0.2], np.zeros(3))
        cache.add([0.8, 0.9], np.ones(3))
        assert np.array_equal(cache.nearest([0.7, 0.95]), np.ones(3))
        assert len(cache) == 2
