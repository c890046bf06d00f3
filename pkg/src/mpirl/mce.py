"""Multi-horizon maximum-causal-entropy IRL via its Lagrangian dual.

Rewards are linear in state features, ``r = features @ theta``, and are paid
on the state being entered. The matching statistic is therefore the
discounted feature count of entered states,
``g = sum_{s,a} mu(s,a) sum_s' T(s'|s,a) phi(s')``. With this choice

* the soft value of the start distribution is ``theta @ g + lam * H``,
* the dual objective is ``D(theta) = sum_k rho0 @ V_k(theta) - theta @ g*_k``,
  with gradient ``sum_k g_k(theta) - g*_k``,
* and ``D(theta) - lam * sum_k H*_k = lam * sum_k E_{mu*_k}[KL(pi*_k || pi_k(theta))]``,
  which is the primal-dual gap. It vanishes exactly when one ``theta``
  reproduces every expert, so it is the feasibility signal.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .domains import ExpertSet
from .mdp import (
    TabularMdp,
    as_stochastic,
    occupancy_measure,
    soft_value_iteration,
)

EPSILON = 1e-3
MAX_GRAD_STEPS = 5000
STEP_SIZE = 0.1
GRAD_TOL = 1e-6
GAP_STOP = 1e-9
FD_STEP = 1e-5


def _entropy_terms(mu_sa: np.ndarray, probs: np.ndarray) -> float:
    probs = as_stochastic(probs, probs.shape[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(mu_sa > 0, -mu_sa * np.log(probs), 0.0)
    return float(t.sum())


def _entered(mdp: TabularMdp, mu_sa: np.ndarray) -> np.ndarray:
    return mdp.features.T @ np.einsum("sa,asn->n", mu_sa, mdp.transitions)


@dataclass(frozen=True)
class ExpertStats:
    """Occupancy, entered-feature counts and causal entropy of each expert at the candidate discounts."""

    gammas: np.ndarray
    mu: list
    g: list
    entropy: np.ndarray

    @classmethod
    def compute(cls, mdp: TabularMdp, experts: ExpertSet, gammas: Sequence[float]) -> "ExpertStats":
        gammas = np.asarray(gammas, dtype=float)
        if len(gammas) != len(experts):
            raise ValueError("one discount per expert is required")
        mu, g, h = [], [], []
        for pol, gam in zip(experts.policies, gammas):
            occ = occupancy_measure(mdp, as_stochastic(pol, mdp.n_actions), gam)
            mu.append(occ.mu_sa)
            g.append(_entered(mdp, occ.mu_sa))
            h.append(_entropy_terms(occ.mu_sa, pol))
        return cls(gammas, mu, g, np.array(h))


@dataclass
class _DualEval:
    theta: np.ndarray
    policies: list
    values: list
    g: list
    entropy: np.ndarray
    dual: float  # D(theta)
    grad: np.ndarray  # ascent direction sum_k g*_k - g_k(theta)
    loglik: float  # L(theta) = -D / lam + const-free identity
    feature_gap: float  # sum_k theta @ (g_k(theta) - g*_k)


def _evaluate(mdp: TabularMdp, theta: np.ndarray, stats: ExpertStats, warm: Optional[list] = None) -> _DualEval:
    lam = mdp.temperature
    reward = mdp.linear_reward(theta)
    policies, values, gs, hs = [], [], [], []
    dual = 0.0
    loglik = 0.0
    for k, gam in enumerate(stats.gammas):
        init = None if warm is None else warm[k]
        rep, probs = soft_value_iteration(mdp, gam, reward=reward, init_policy=init)
        occ = occupancy_measure(mdp, probs, gam)
        gk = _entered(mdp, occ.mu_sa)
        policies.append(probs)
        values.append(rep.v)
        gs.append(gk)
        hs.append(_entropy_terms(occ.mu_sa, probs))
        dual += float(mdp.rho0 @ rep.v - theta @ stats.g[k])
        loglik += float(np.sum(stats.mu[k] * np.log(as_stochastic(probs, mdp.n_actions))))
    grad = sum(stats.g[k] - gs[k] for k in range(len(gs)))
    fgap = float(sum(theta @ (gs[k] - stats.g[k]) for k in range(len(gs))))
    return _DualEval(theta, policies, values, gs, np.array(hs), dual, grad, loglik, fgap)


# -- public quantities -----------------------------------------------------------


def duality_gap(mdp: TabularMdp, theta, experts: ExpertSet, gammas) -> float:
    """``sum_k theta @ (g_k(theta) - g*_k)`` for the soft-optimal policies under ``theta``."""
    theta = np.asarray(theta, dtype=float)
    return _evaluate(mdp, theta, ExpertStats.compute(mdp, experts, gammas)).feature_gap


def dual_function_value(mdp: TabularMdp, theta, gammas, experts: ExpertSet) -> float:
    """``sum_k lam * H_k(theta) + theta @ (g_k(theta) - g*_k)``."""
    theta = np.asarray(theta, dtype=float)
    ev = _evaluate(mdp, theta, ExpertStats.compute(mdp, experts, gammas))
    return float(mdp.temperature * ev.entropy.sum() + ev.feature_gap)


def primal_dual_gap(mdp: TabularMdp, theta, experts: ExpertSet, gammas) -> float:
    """Dual value minus the experts' own entropy; nonnegative, zero iff ``theta`` reproduces them all."""
    theta = np.asarray(theta, dtype=float)
    stats = ExpertStats.compute(mdp, experts, gammas)
    ev = _evaluate(mdp, theta, stats)
    return float(ev.dual - mdp.temperature * stats.entropy.sum())


@dataclass
class MlObjectiveReport:
    value: float
    per_expert: np.ndarray
    grad_delta: np.ndarray  # dL/d logit(gamma_k); nan where gamma_k is 0 or 1


def _loglik_terms(mdp: TabularMdp, theta: np.ndarray, gammas: np.ndarray, experts: ExpertSet) -> np.ndarray:
    reward = mdp.linear_reward(theta)
    out = []
    for pol, gam in zip(experts.policies, gammas):
        mu = occupancy_measure(mdp, as_stochastic(pol, mdp.n_actions), gam).mu_sa
        _, probs = soft_value_iteration(mdp, gam, reward=reward)
        out.append(float(np.sum(mu * np.log(as_stochastic(probs, mdp.n_actions)))))
    return np.array(out)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def ml_objective(mdp: TabularMdp, theta, gammas, experts: ExpertSet, fd_step: float = FD_STEP) -> MlObjectiveReport:
    """Discounted log-likelihood of the experts, with central-difference
    derivatives in the logit of each discount.
    """
    theta = np.asarray(theta, dtype=float)
    gammas = np.asarray(gammas, dtype=float)
    per = _loglik_terms(mdp, theta, gammas, experts)
    grad = np.full(len(gammas), np.nan)
    for k, gam in enumerate(gammas):
        if not 0.0 < gam < 1.0:
            continue
        delta = np.log(gam) - np.log1p(-gam)
        sub = experts.subset([k])
        hi = _loglik_terms(mdp, theta, np.array([_sigmoid(delta + fd_step)]), sub)[0]
        lo = _loglik_terms(mdp, theta, np.array([_sigmoid(delta - fd_step)]), sub)[0]
        grad[k] = (hi - lo) / (2 * fd_step)
    return MlObjectiveReport(float(per.sum()), per, grad)


# -- inner solver -------------------------------------------------------------


@dataclass
class InnerConfig:
    """``method`` is ``"lbfgs"`` (quasi-Newton on the dual) or ``"gradient"``
    (fixed-step ascent with step halving).
    """

    epsilon: float = EPSILON
    max_grad_steps: int = MAX_GRAD_STEPS
    step_size: float = STEP_SIZE
    grad_tol: float = GRAD_TOL
    gap_stop: float = GAP_STOP
    method: str = "lbfgs"

    def __post_init__(self):
        if self.method not in ("lbfgs", "gradient"):
            raise ValueError(f"unknown inner solver {self.method!r}")


@dataclass
class DualSolution:
    theta: np.ndarray
    gammas: np.ndarray
    policies: list
    values: list
    duality_gap: float
    primal_dual_gap: float
    entropies: np.ndarray
    reward: np.ndarray
    iterations: int = 0
    converged: bool = False

    def to_dict(self) -> dict:
        return {
            "theta": self.theta.tolist(),
            "gammas": self.gammas.tolist(),
            "duality_gap": float(self.duality_gap),
            "primal_dual_gap": float(self.primal_dual_gap),
            "entropies": self.entropies.tolist(),
            "policies": [p.tolist() for p in self.policies],
            "reward": self.reward.tolist(),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
        }


@dataclass
class InnerOutcome:
    score: float
    feasible: bool
    dual: DualSolution
    flags: list = field(default_factory=list)


def display_reward(mdp: TabularMdp, theta: np.ndarray, r_max: Optional[float]) -> np.ndarray:
    """Shift to mean zero, then move the best absorbing state to ``r_max``."""
    r = mdp.linear_reward(theta)
    r = r - r.mean()
    if r_max is not None and mdp.absorbing.any():
        r = r + (r_max - r[mdp.absorbing].max())
    return r


def _ascent(mdp, stats, theta, h_star, cfg):
    ev = _evaluate(mdp, theta, stats)
    step = cfg.step_size
    it = 0
    flags = []
    converged = False
    while it < cfg.max_grad_steps:
        if np.linalg.norm(ev.grad) < cfg.grad_tol or ev.dual - h_star <= cfg.gap_stop:
            converged = True
            break
        it += 1
        cand = _evaluate(mdp, ev.theta + step * ev.grad, stats, warm=ev.policies)
        if cand.dual <= ev.dual + 1e-14 * max(1.0, abs(ev.dual)):
            ev = cand
        else:
            step *= 0.5
            if step < 1e-12:
                flags.append("step_underflow")
                break
    if not converged and not flags:
        flags.append("max_grad_steps")
    return ev, it, converged, flags


def _lbfgs(mdp, stats, theta, h_star, cfg):
    state = {"ev": _evaluate(mdp, theta, stats)}
    best = {"ev": state["ev"]}

    def fun(x):
        ev = _evaluate(mdp, x, stats, warm=state["ev"].policies)
        state["ev"] = ev
        if ev.dual < best["ev"].dual:
            best["ev"] = ev
        return ev.dual - h_star, -ev.grad

    res = minimize(
        fun,
        theta,
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": cfg.max_grad_steps, "gtol": cfg.grad_tol, "ftol": 1e-15, "maxls": 50},
    )
    ev = best["ev"]
    converged = np.linalg.norm(ev.grad) < cfg.grad_tol or ev.dual - h_star <= cfg.gap_stop or res.success
    flags = [] if converged else [f"lbfgs: {res.message}"]
    return ev, int(res.nit), bool(converged), flags


def solve_inner_dual(
    mdp: TabularMdp,
    experts: ExpertSet,
    gammas,
    config: Optional[InnerConfig] = None,
    theta0=None,
    r_max: Optional[float] = None,
) -> InnerOutcome:
    """Fit a shared ``theta`` by maximizing the experts' log-likelihood
    (equivalently minimizing the convex dual) and score the discounts.

    With ``method="gradient"`` the step starts at ``config.step_size`` and is
    halved whenever a step would lower the objective.
    """
    cfg = InnerConfig() if config is None else config
    gammas = np.asarray(gammas, dtype=float)
    stats = ExpertStats.compute(mdp, experts, gammas)
    h_star = mdp.temperature * stats.entropy.sum()
    theta = np.zeros(mdp.n_features) if theta0 is None else np.array(theta0, dtype=float)
    run = _ascent if cfg.method == "gradient" else _lbfgs
    ev, it, converged, flags = run(mdp, stats, theta, h_star, cfg)
    gap = float(ev.dual - h_star)
    feasible = gap <= cfg.epsilon
    dual = DualSolution(
        theta=ev.theta,
        gammas=gammas,
        policies=ev.policies,
        values=ev.values,
        duality_gap=ev.feature_gap,
        primal_dual_gap=gap,
        entropies=ev.entropy,
        reward=display_reward(mdp, ev.theta, r_max),
        iterations=it,
        converged=converged,
    )
    score = float(ev.entropy.sum()) if feasible else -abs(gap)
    return InnerOutcome(score, feasible, dual, flags)


class WarmStartCache:
    """Remembers fitted parameters and hands out those of the nearest discounts."""

    def __init__(self):
        self._lock = threading.Lock()
        self._items = []

    def nearest(self, gammas) -> Optional[np.ndarray]:
        gammas = np.asarray(gammas, dtype=float)
        with self._lock:
            if not self._items:
                return None
            d = [np.linalg.norm(g - gammas) for g, _ in self._items]
            return self._items[int(np.argmin(d))][1].copy()

    def add(self, gammas, theta) -> None:
        with self._lock:
            self._items.append((np.asarray(gammas, dtype=float).copy(), np.asarray(theta).copy()))

    def __len__(self) -> int:
        return len(self._items)
