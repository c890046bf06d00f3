import numpy as np
import pytest

from mpirl.domains import DEFAULT_MPMCE_GAMMAS, DomainKind, ExpertSet, Regime, make_experts
from mpirl.identifiability import (
    Classification,
    build_phi_b,
    classify,
    grid_scan,
    rank_classify,
    scan_rows,
)
from mpirl.mdp import soft_value_iteration

from conftest import random_mdp

TRUTH = DEFAULT_MPMCE_GAMMAS[DomainKind.TOY]


@pytest.fixture(scope="module")
def soft_toy(toy):
    return make_experts(toy, TRUTH, Regime.ENTROPY_REGULARIZED)


def random_soft_problem(seed, K):
    mdp = random_mdp(seed, n_states=4, n_actions=3)
    rng = np.random.default_rng(seed)
    gammas = np.sort(rng.uniform(0.05, 0.95, size=K))
    policies = [soft_value_iteration(mdp, g)[1] for g in gammas]
    return mdp, ExpertSet(policies, gammas, Regime.ENTROPY_REGULARIZED), gammas


class TestSystem:
    def test_shape_and_row_order(self, toy, soft_toy):
        phi, b = build_phi_b(toy, soft_toy, TRUTH)
        n, m, K = 4, 3, 3
        assert phi.shape == (K * m * n, (K + 1) * n)
        # block for expert 1, action 2
        rows = slice((1 * m + 2) * n, (1 * m + 3) * n)
        assert np.allclose(phi[rows, :n], toy.transitions[2])
        assert np.allclose(phi[rows, 2 * n : 3 * n], TRUTH[1] * toy.transitions[2] - np.eye(n))
        assert np.allclose(b[rows], np.log(soft_toy.policies[1][:, 2]))

    def test_true_reward_solves(self, toy, soft_toy):
        phi, b = build_phi_b(toy, soft_toy, TRUTH)
        values = [soft_value_iteration(toy, g)[0].v for g in TRUTH]
        x = np.concatenate([toy.reward, *values])
        assert np.max(np.abs(phi @ x - b)) <= 1e-8

    def test_constant_shift_stays_a_solution(self, toy, soft_toy):
        rep = classify(toy, soft_toy, TRUTH)
        phi, b = build_phi_b(toy, soft_toy, TRUTH)
        x = np.linalg.lstsq(phi, b, rcond=None)[0]
        c = 3.7
        shifted = x.copy()
        shifted[:4] += c
        for k, g in enumerate(TRUTH):
            shifted[(k + 1) * 4 : (k + 2) * 4] += c / (1 - g)
        assert np.max(np.abs(phi @ shifted - b)) <= 1e-6
        assert rep.rank_phi == phi.shape[1] - 1

    def test_rejects_zero_probabilities(self, toy):
        E = ExpertSet([np.eye(3)[[0, 0, 0, 0]]])
        with pytest.raises(ValueError):
            build_phi_b(toy, E, [0.5])


class TestClassification:
    def test_truth_is_unique(self, toy, soft_toy):
        rep = classify(toy, soft_toy, TRUTH)
        assert rep.classification is Classification.UNIQUE
        assert rep.consistent and rep.residual <= 1e-8
        assert np.allclose(rep.reward_solution - rep.reward_solution.mean(), toy.reward - toy.reward.mean(), atol=1e-6)

    def test_wrong_discounts_have_no_reward(self, toy, soft_toy):
        assert classify(toy, soft_toy, (0.4, 0.5, 0.95)).classification is Classification.NO_REWARD

    def test_single_expert_is_underdetermined(self, toy, soft_toy):
        rep = classify(toy, soft_toy.subset([0]), [0.3])
        assert rep.consistent
        assert rep.classification is Classification.UNDERDETERMINED

    @pytest.mark.parametrize("K", [2, 3])
    def test_consistent_at_truth_on_random_mdps(self, K):
        for seed in range(20):
            mdp, experts, gammas = random_soft_problem(seed, K)
            assert classify(mdp, experts, gammas).consistent, seed

    def test_rank_invariances(self, toy, soft_toy):
        phi, b = build_phi_b(toy, soft_toy, (0.3, 0.6, 0.9))
        base = rank_classify(phi, b)
        perm = np.random.default_rng(0).permutation(len(b))
        assert rank_classify(phi[perm], b[perm]).rank_phi == base.rank_phi
        assert rank_classify(phi[perm], b[perm]).rank_phi_b == base.rank_phi_b
        hot = toy.replace(temperature=2.5)
        phi2, b2 = build_phi_b(hot, soft_toy, (0.3, 0.6, 0.9))
        assert np.allclose(b2, 2.5 * b)
        r2 = rank_classify(phi2, b2)
        assert (r2.rank_phi, r2.rank_phi_b) == (base.rank_phi, base.rank_phi_b)

    def test_empty_system(self):
        rep = rank_classify(np.zeros((0, 3)), np.zeros(0))
        assert rep.rank_phi == 0


class TestScans:
    def test_k2_scan_is_unique_everywhere(self, toy, soft_toy):
        results = grid_scan(toy, soft_toy, 0.1, k_range=[0, 1])
        assert results
        assert all(rep.classification is Classification.UNIQUE and rep.rank_phi == 11 for _, rep in results)

    def test_diagonal_skipped_and_rows(self, toy, soft_toy):
        results = grid_scan(toy, soft_toy, 0.25, k_range=[0, 1])
        assert all(abs(g[0] - g[1]) >= 0.125 for g, _ in results)
        rows = scan_rows(results, {tuple(map(float, results[0][0])): 0.5})
        assert rows[0][-1] == 0.5 and np.isnan(rows[1][-1])
        assert rows[0][2:5] == (11, 11, "UniqueUpToConstant")
