"""Reward-transfer evaluation, discount-order recovery and value curves."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .domains import DomainSpec, randomize_environment
from .mdp import TabularMdp, policy_value, value_iteration

log = logging.getLogger(__name__)

VALUE_GUARD = 1e-9
SEED_STRIDE = 1_000_000
MAX_RESAMPLES = 1000


@dataclass
class GenEvalConfig:
    domain: DomainSpec
    learned_reward: np.ndarray
    true_reward: Optional[np.ndarray] = None
    n_envs: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.n_envs < 1:
            raise ValueError("n_envs must be at least 1")
        self.learned_reward = np.asarray(self.learned_reward, dtype=float)
        if self.true_reward is not None:
            self.true_reward = np.asarray(self.true_reward, dtype=float)
            if self.true_reward.shape != self.learned_reward.shape:
                raise ValueError("learned and true rewards must have the same length")


@dataclass
class GenEvalReport:
    per_env: np.ndarray
    seeds: list
    resampled: list = field(default_factory=list)

    @property
    def mean(self) -> float:
        return float(np.mean(self.per_env))

    @property
    def sd(self) -> float:
        # population standard deviation
        return float(np.std(self.per_env))

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "sd": self.sd,
            "per_env": np.asarray(self.per_env).tolist(),
            "seeds": [int(s) for s in self.seeds],
        }


def start_value(mdp: TabularMdp, policy, gamma: float, reward) -> float:
    return float(mdp.rho0 @ policy_value(mdp, policy, gamma, reward_override=reward))


def transfer_regret(mdp: TabularMdp, gamma: float, true_reward, learned_reward) -> Optional[float]:
    """Normalized value lost by acting optimally for the learned reward.

    Returns ``None`` when the optimal value is too close to zero to normalize by.
    """
    _, pi_star = value_iteration(mdp, gamma, reward=true_reward)
    _, pi_hat = value_iteration(mdp, gamma, reward=learned_reward)
    v_star = start_value(mdp, pi_star, gamma, true_reward)
    if abs(v_star) < VALUE_GUARD:
        return None
    v_hat = start_value(mdp, pi_hat, gamma, true_reward)
    return (v_star - v_hat) / abs(v_star)


def generalization_error(config: GenEvalConfig, base: Optional[TabularMdp] = None) -> GenEvalReport:
    """Average transfer regret over seeded random environments.

    Environment ``i`` uses seed ``config.seed * SEED_STRIDE + j`` where ``j``
    starts at ``i`` and walks past seeds already consumed by resampling.
    """
    base = config.domain.build() if base is None else base
    true_reward = base.reward if config.true_reward is None else config.true_reward
    if true_reward.shape != config.learned_reward.shape:
        raise ValueError("learned reward does not match the domain size")
    per_env, seeds, resampled = [], [], []
    j = 0
    offset = int(config.seed) * SEED_STRIDE
    while len(per_env) < config.n_envs:
        if len(resampled) > MAX_RESAMPLES:
            raise RuntimeError("too many environments with a vanishing optimal value")
        env_seed = offset + j
        j += 1
        mdp, gamma = randomize_environment(config.domain, base, env_seed)
        regret = transfer_regret(mdp, gamma, true_reward, config.learned_reward)
        if regret is None:
            log.info("environment seed %d has a near-zero optimal value, resampling", env_seed)
            resampled.append(env_seed)
            continue
        per_env.append(regret)
        seeds.append(env_seed)
    return GenEvalReport(np.array(per_env), seeds, resampled)


def _midpoint(t) -> float:
    if np.ndim(t) == 0:
        return float(t)
    lo, hi = t
    return 0.5 * (float(lo) + float(hi))


def order_recovery(learned_gammas: Sequence[float], truth: Sequence) -> bool:
    """Whether the learned discounts rank the experts as the truth does.

    ``truth`` entries may be scalars or ``(lo, hi)`` intervals, which are
    replaced by their midpoints.
    """
    learned = np.asarray(learned_gammas, dtype=float)
    ref = np.array([_midpoint(t) for t in truth])
    if learned.shape != ref.shape:
        raise ValueError("learned and true discounts must have equal length")
    return bool(np.array_equal(np.argsort(learned, kind="stable"), np.argsort(ref, kind="stable")))


def value_curves(mdp: TabularMdp, reward, policies: Sequence, gamma_grid: Sequence[float]) -> list:
    """Rows ``(gamma, policy_index, value)`` of the start-state value of each policy."""
    reward = np.asarray(reward, dtype=float)
    rows = []
    for g in gamma_grid:
        for i, pol in enumerate(policies):
            rows.append((float(g), i, start_value(mdp, pol, float(g), reward)))
    return rows
