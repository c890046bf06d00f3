"""End-to-end fits: an outer search over discounts wrapped around an inner IRL solve."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bayesopt import OuterConfig, OuterTrace, run_outer
from .domains import ExpertSet
from .lp import L1_PENALTY, IrlSolution, mplp_inner, naive_mplp
from .mce import DualSolution, InnerConfig, WarmStartCache, solve_inner_dual
from .mdp import TabularMdp, value_iteration


@dataclass
class FitResult:
    trace: OuterTrace
    gammas: np.ndarray
    reward: np.ndarray
    solution: object  # IrlSolution or DualSolution
    feasible: bool = True
    notes: dict = field(default_factory=dict)


def mplp_objective(mdp: TabularMdp, experts: ExpertSet, l1_penalty: float = L1_PENALTY, r_max: float = 10.0):
    """Outer objective for the multi-horizon LP. Infeasible discounts raise,
    which the outer loop records at its failure floor.
    """

    def objective(gammas):
        sol = mplp_inner(mdp, experts, gammas, l1_penalty=l1_penalty, r_max=r_max)
        return sol.objective, sol

    return objective


def naive_objective(mdp: TabularMdp, experts: ExpertSet, l1_penalty: float = L1_PENALTY, r_max: float = 10.0):
    def objective(gammas):
        sol = naive_mplp(mdp, experts, gammas, l1_penalty=l1_penalty, r_max=r_max)
        if not np.isfinite(sol.objective):
            raise ValueError("naive LP infeasible")
        return sol.objective, sol

    return objective


def mce_objective(
    mdp: TabularMdp,
    experts: ExpertSet,
    config: Optional[InnerConfig] = None,
    r_max: Optional[float] = None,
    cache: Optional[WarmStartCache] = None,
):
    """Outer objective for multi-horizon MCE; warm-starts from the nearest
    previously solved discounts when a cache is supplied.
    """

    def objective(gammas):
        theta0 = None if cache is None else cache.nearest(gammas)
        out = solve_inner_dual(mdp, experts, gammas, config=config, theta0=theta0, r_max=r_max)
        if cache is not None:
            cache.add(gammas, out.dual.theta)
        return out.score, out

    return objective


def fit_mplp(
    mdp: TabularMdp,
    experts: ExpertSet,
    outer: Optional[OuterConfig] = None,
    l1_penalty: float = L1_PENALTY,
    r_max: float = 10.0,
    naive: bool = False,
) -> FitResult:
    make = naive_objective if naive else mplp_objective
    trace = run_outer(make(mdp, experts, l1_penalty, r_max), len(experts), outer)
    sol: Optional[IrlSolution] = trace.best_payload
    if sol is None:
        return FitResult(trace, None, None, None, feasible=False)
    return FitResult(trace, np.asarray(trace.best_gammas), sol.reward, sol)


def fit_mpmce(
    mdp: TabularMdp,
    experts: ExpertSet,
    outer: Optional[OuterConfig] = None,
    inner: Optional[InnerConfig] = None,
    r_max: Optional[float] = None,
    warm_start: bool = True,
) -> FitResult:
    cache = WarmStartCache() if warm_start else None
    trace = run_outer(mce_objective(mdp, experts, inner, r_max, cache), len(experts), outer)
    out = trace.best_payload
    if out is None:
        return FitResult(trace, None, None, None, feasible=False)
    dual: DualSolution = out.dual
    return FitResult(trace, np.asarray(trace.best_gammas), dual.reward, dual, out.feasible, {"flags": out.flags})


def reconstructs_experts(mdp: TabularMdp, reward, gammas: Sequence[float], experts: ExpertSet) -> list:
    """Per expert, whether the greedy policy under ``(reward, gamma_k)`` equals its actions."""
    out = []
    for g, target in zip(gammas, experts.actions):
        _, actions = value_iteration(mdp, g, reward=np.asarray(reward, dtype=float))
        out.append(bool(np.array_equal(actions, target)))
    return out
