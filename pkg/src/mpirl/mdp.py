"""Exact tabular MDP machinery.

Conventions used throughout the package:

* ``transitions[a, s, s']`` is the probability of moving to ``s'`` when taking
  action ``a`` in state ``s``.
* Rewards attach to the state being entered: ``Q(s, a) = sum_s' T(s'|s,a) (r(s') + gamma V(s'))``.
* States flagged ``absorbing`` self-loop with probability one. Under the
  standard (hard) Bellman equations they are terminal: once inside, no further
  reward accrues, so their value is zero. The entropy-regularized machinery
  works with the plain stochastic kernel, where a self-loop keeps paying the
  absorbing reward and the per-step entropy bonus.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import logsumexp

GAMMA_CAP = 0.999999
CONVERGENCE_TOL = 1e-12
MAX_ITERS = 100_000
POLICY_EPS = 1e-12
TIE_TOL = 1e-10


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver exhausts its budget."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class MdpValidationError(ValueError):
    pass


def cap_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"discount factor must lie in [0, 1], got {gamma}")
    return min(gamma, GAMMA_CAP)


def _frozen(x) -> np.ndarray:
    arr = np.array(x, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TabularMdp:
    """Finite MDP with next-state rewards.

    ``features`` defaults to the identity so that a linear reward
    ``theta @ features[s]`` is just ``theta[s]``.
    """

    transitions: np.ndarray
    reward: np.ndarray
    rho0: np.ndarray
    features: Optional[np.ndarray] = None
    temperature: float = 1.0
    absorbing: Optional[np.ndarray] = None
    name: str = field(default="mdp", compare=False)

    def __post_init__(self):
        T = np.array(self.transitions, dtype=float)
        if T.ndim != 3 or T.shape[1] != T.shape[2]:
            raise MdpValidationError(f"transitions must have shape (A, S, S), got {T.shape}")
        n_actions, n_states, _ = T.shape
        bad = np.argwhere((T < 0).any(axis=2) | (np.abs(T.sum(axis=2) - 1.0) > 1e-12))
        if len(bad):
            a, s = bad[0]
            raise MdpValidationError(
                f"transition row (a={a}, s={s}) is not a probability distribution"
            )
        reward = np.array(self.reward, dtype=float)
        if reward.shape != (n_states,):
            raise MdpValidationError(f"reward must have length {n_states}")
        rho0 = np.array(self.rho0, dtype=float)
        if rho0.shape != (n_states,) or (rho0 < 0).any() or abs(rho0.sum() - 1.0) > 1e-12:
            raise MdpValidationError("rho0 must be a distribution over states")
        features = np.eye(n_states) if self.features is None else np.array(self.features, dtype=float)
        if features.ndim != 2 or features.shape[0] != n_states:
            raise MdpValidationError("features must have shape (S, d)")
        if not self.temperature > 0:
            raise MdpValidationError("temperature must be positive")
        absorbing = (
            np.zeros(n_states, dtype=bool)
            if self.absorbing is None
            else np.array(self.absorbing, dtype=bool)
        )
        if absorbing.shape != (n_states,):
            raise MdpValidationError("absorbing mask must have length S")
        for s in np.flatnonzero(absorbing):
            if not np.allclose(T[:, s, s], 1.0):
                raise MdpValidationError(f"absorbing state {s} must self-loop under every action")
        absorbing.setflags(write=False)
        object.__setattr__(self, "transitions", _frozen(T))
        object.__setattr__(self, "reward", _frozen(reward))
        object.__setattr__(self, "rho0", _frozen(rho0))
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "absorbing", absorbing)
        object.__setattr__(self, "temperature", float(self.temperature))

    @property
    def n_states(self) -> int:
        return self.transitions.shape[1]

    @property
    def n_actions(self) -> int:
        return self.transitions.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def kernel(self, terminal: bool) -> np.ndarray:
        """Transition kernel used for backups.

        With ``terminal=True`` rows of absorbing states are zeroed, which is
        how the hard Bellman equations stop accruing reward after absorption.
        """
        if not terminal or not self.absorbing.any():
            return self.transitions
        T = self.transitions.copy()
        T[:, self.absorbing, :] = 0.0
        return T

    def replace(self, **changes) -> "TabularMdp":
        fields_ = dict(
            transitions=self.transitions,
            reward=self.reward,
            rho0=self.rho0,
            features=self.features,
            temperature=self.temperature,
            absorbing=self.absorbing,
            name=self.name,
        )
        fields_.update(changes)
        return TabularMdp(**fields_)

    def linear_reward(self, theta) -> np.ndarray:
        return self.features @ np.asarray(theta, dtype=float)


@dataclass(frozen=True)
class ValueReport:
    v: np.ndarray
    q: np.ndarray
    gamma: float
    soft: bool
    iterations: int = 0


@dataclass(frozen=True)
class OccupancyMeasure:
    mu_sa: np.ndarray
    gamma: float

    @property
    def mu_s(self) -> np.ndarray:
        return self.mu_sa.sum(axis=1)


# -- policy helpers -------------------------------------------------------


def as_stochastic(policy, n_actions: int, eps: float = POLICY_EPS) -> np.ndarray:
    """Return an (S, A) probability matrix.

    Integer vectors are read as deterministic policies. One-hot rows are
    clipped at ``eps`` and renormalized so that logs stay finite.
    """
    policy = np.asarray(policy)
    if policy.ndim == 1:
        probs = np.zeros((policy.shape[0], n_actions))
        probs[np.arange(policy.shape[0]), policy.astype(int)] = 1.0
    else:
        probs = np.array(policy, dtype=float)
    if eps > 0:
        probs = np.maximum(probs, eps)
        probs /= probs.sum(axis=1, keepdims=True)
    return probs


def greedy(q: np.ndarray, tie_tol: float = TIE_TOL) -> np.ndarray:
    """Greedy actions with ties resolved to the lowest action index."""
    scale = max(1.0, float(np.max(np.abs(q))))
    best = q.max(axis=1, keepdims=True)
    return np.argmax(q >= best - tie_tol * scale, axis=1)


def _policy_kernel(T: np.ndarray, probs: np.ndarray) -> np.ndarray:
    return np.einsum("sa,asn->sn", probs, T)


def _q_from_v(T: np.ndarray, reward: np.ndarray, v: np.ndarray, gamma: float) -> np.ndarray:
    return np.einsum("asn,n->sa", T, reward + gamma * v)


# -- hard planning ------------------------------------------------------------


def policy_value(mdp: TabularMdp, policy, gamma: float, reward_override=None, terminal: bool = True):
    """Exact evaluation: solve ``(I - gamma T^pi) V = T^pi r``."""
    gamma = cap_gamma(gamma)
    reward = mdp.reward if reward_override is None else np.asarray(reward_override, dtype=float)
    probs = as_stochastic(policy, mdp.n_actions, eps=0.0)
    P = _policy_kernel(mdp.kernel(terminal), probs)
    return np.linalg.solve(np.eye(mdp.n_states) - gamma * P, P @ reward)


def value_iteration(
    mdp: TabularMdp,
    gamma: float,
    reward=None,
    terminal: bool = True,
    tol: float = CONVERGENCE_TOL,
    max_iters: int = MAX_ITERS,
):
    """Optimal values and the greedy deterministic policy.

    Bellman sweeps are interleaved with exact evaluation of the current greedy
    policy, which makes convergence insensitive to discounts close to one.
    Returns ``(ValueReport, actions)``.
    """
    gamma = cap_gamma(gamma)
    reward = mdp.reward if reward is None else np.asarray(reward, dtype=float)
    T = mdp.kernel(terminal)
    v = np.zeros(mdp.n_states)
    residual = np.inf
    previous = None
    for it in range(1, max_iters + 1):
        q = _q_from_v(T, reward, v, gamma)
        actions = greedy(q)
        v_new = q.max(axis=1)
        residual = float(np.max(np.abs(v_new - v)))
        scale = max(1.0, float(np.max(np.abs(v_new))))
        if residual < tol * scale:
            v = v_new
            break
        # a greedy policy that reproduces itself is optimal up to tie tolerance
        if previous is not None and np.array_equal(actions, previous) and residual <= 10 * TIE_TOL * scale:
            break
        previous = actions
        # jump to the exact value of the greedy policy
        P = T[actions, np.arange(mdp.n_states), :]
        v = np.linalg.solve(np.eye(mdp.n_states) - gamma * P, P @ reward)
    else:
        raise ConvergenceError("value iteration did not converge", residual)
    q = _q_from_v(T, reward, v, gamma)
    v = q.max(axis=1)
    return ValueReport(v=v, q=q, gamma=gamma, soft=False, iterations=it), greedy(q)


# -- soft planning ------------------------------------------------------------


def _soft_improve(q: np.ndarray, lam: float):
    v = lam * logsumexp(q / lam, axis=1)
    probs = np.exp((q - v[:, None]) / lam)
    probs /= probs.sum(axis=1, keepdims=True)
    return v, probs


def _entropy_bonus(probs: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(probs > 0, probs * np.log(probs), 0.0)
    return -plogp.sum(axis=1)


def soft_value_iteration(
    mdp: TabularMdp,
    gamma: float,
    reward=None,
    temperature: Optional[float] = None,
    tol: float = CONVERGENCE_TOL,
    max_iters: int = MAX_ITERS,
    init_policy: Optional[np.ndarray] = None,
):
    """Entropy-regularized optimal values and the Boltzmann policy.

    Soft policy iteration (exact linear evaluation of each Boltzmann policy)
    does the heavy lifting; plain soft Bellman sweeps finish the job and
    provide the convergence certificate. ``init_policy`` warm-starts the
    policy iteration. Returns ``(ValueReport, probs)``.
    """
    gamma = cap_gamma(gamma)
    lam = mdp.temperature if temperature is None else float(temperature)
    reward = mdp.reward if reward is None else np.asarray(reward, dtype=float)
    T = mdp.transitions
    n = mdp.n_states
    r_sa = np.einsum("asn,n->sa", T, reward)
    if init_policy is None:
        probs = np.full((n, mdp.n_actions), 1.0 / mdp.n_actions)
    else:
        probs = as_stochastic(init_policy, mdp.n_actions)
    v = np.zeros(n)
    for _ in range(200):
        P = _policy_kernel(T, probs)
        target = (probs * r_sa).sum(axis=1) + lam * _entropy_bonus(probs)
        v_pi = np.linalg.solve(np.eye(n) - gamma * P, target)
        q = r_sa + gamma * np.einsum("asn,n->sa", T, v_pi)
        v_new, probs_new = _soft_improve(q, lam)
        step = float(np.max(np.abs(v_new - v_pi)))
        v, probs = v_pi, probs_new
        if not np.all(np.isfinite(v)):
            break
        if step < tol * max(1.0, float(np.max(np.abs(v_pi)))):
            break
    if not np.all(np.isfinite(v)):
        v = np.zeros(n)
    residual = np.inf
    for it in range(1, max_iters + 1):
        q = r_sa + gamma * np.einsum("asn,n->sa", T, v)
        v_new, probs = _soft_improve(q, lam)
        residual = float(np.max(np.abs(v_new - v)))
        v = v_new
        if residual < tol * max(1.0, float(np.max(np.abs(v)))):
            break
    else:
        raise ConvergenceError("soft value iteration did not converge", residual)
    q = r_sa + gamma * np.einsum("asn,n->sa", T, v)
    v, probs = _soft_improve(q, lam)
    return ValueReport(v=v, q=q, gamma=gamma, soft=True, iterations=it), probs


# -- visitation statistics ---------------------------------------------------


def occupancy_measure(mdp: TabularMdp, policy, gamma: float) -> OccupancyMeasure:
    """Discounted state-action visitation counts from a direct linear solve."""
    gamma = float(gamma)
    if not 0.0 <= gamma < 1.0:
        raise ValueError("occupancy measures need gamma in [0, 1)")
    probs = as_stochastic(policy, mdp.n_actions, eps=0.0)
    P = _policy_kernel(mdp.transitions, probs)
    A = np.eye(mdp.n_states) - gamma * P.T
    if np.linalg.cond(A) > 1e14:
        raise np.linalg.LinAlgError("singular flow system")
    mu_s = np.linalg.solve(A, mdp.rho0)
    return OccupancyMeasure(mu_sa=mu_s[:, None] * probs, gamma=gamma)


def flow_residual(mdp: TabularMdp, occ: OccupancyMeasure) -> float:
    inflow = mdp.rho0 + occ.gamma * np.einsum("sa,asn->n", occ.mu_sa, mdp.transitions)
    return float(np.max(np.abs(occ.mu_sa.sum(axis=1) - inflow)))


def feature_expectation(mdp: TabularMdp, policy, gamma: float) -> np.ndarray:
    """Discounted feature counts of visited states, ``sum_s mu(s) phi(s)``."""
    return mdp.features.T @ occupancy_measure(mdp, policy, gamma).mu_s


def reward_feature_expectation(mdp: TabularMdp, policy, gamma: float) -> np.ndarray:
    """Discounted feature counts of entered states.

    This is the statistic paired with next-state rewards: the expected
    discounted return of ``policy`` under ``r = features @ theta`` equals
    ``theta @ reward_feature_expectation(...)``. It relates to the visited-state
    count by ``f = phi^T rho0 + gamma * g``.
    """
    occ = occupancy_measure(mdp, policy, gamma)
    entered = np.einsum("sa,asn->n", occ.mu_sa, mdp.transitions)
    return mdp.features.T @ entered


def causal_entropy(mdp: TabularMdp, policy, gamma: float) -> float:
    """``sum_{s,a} -mu(s,a) log pi(a|s)`` with ``0 log 0 = 0``."""
    probs = as_stochastic(policy, mdp.n_actions)
    occ = occupancy_measure(mdp, probs, gamma)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(occ.mu_sa > 0, -occ.mu_sa * np.log(probs), 0.0)
    return float(terms.sum())


def q_gap_identity(mdp: TabularMdp, actions, gamma: float, reward=None, terminal: bool = True):
    """Q-gaps ``Q(s, pi(s)) - Q(s, a)`` from the closed form
    ``(T(.|s,pi(s)) - T(.|s,a)) (I - gamma T^pi)^{-1} r``.
    """
    gamma = cap_gamma(gamma)
    reward = mdp.reward if reward is None else np.asarray(reward, dtype=float)
    T = mdp.kernel(terminal)
    n = mdp.n_states
    actions = np.asarray(actions, dtype=int)
    P = T[actions, np.arange(n), :]
    u = np.linalg.solve(np.eye(n) - gamma * P, reward)
    return np.stack([(P - T[a]) @ u for a in range(mdp.n_actions)], axis=1)
