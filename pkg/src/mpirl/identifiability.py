"""Rank tests for whether any reward reproduces entropy-regularized experts.

For expert ``k`` and action ``a`` the soft Bellman equations read
``lam * log pi_k(a|.) = T_a r + gamma_k T_a V_k - V_k``. Stacking them over
``(k, a)`` gives a linear system ``Phi x = b`` in ``x = (r, V_1, ..., V_K)``.
Adding ``c`` to ``r`` and ``c / (1 - gamma_k)`` to ``V_k`` leaves it unchanged,
so ``rank(Phi) <= (K + 1)|S| - 1`` always.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .bayesopt import lattice
from .domains import DomainSpec, ExpertSet
from .evaluation import GenEvalConfig, generalization_error
from .mdp import TabularMdp, as_stochastic, cap_gamma

RANK_TOL = 1e-8
BORDERLINE_FACTOR = 10.0


class Classification(str, enum.Enum):
    NO_REWARD = "NoReward"
    UNIQUE = "UniqueUpToConstant"
    UNDERDETERMINED = "Underdetermined"


def build_phi_b(mdp: TabularMdp, experts: ExpertSet, gammas: Sequence[float], clip: Optional[float] = None):
    """Rows are ordered by expert, then action, then state."""
    gammas = np.asarray(gammas, dtype=float)
    if len(gammas) != len(experts):
        raise ValueError("one discount per expert is required")
    n, m = mdp.n_states, mdp.n_actions
    K = len(experts)
    T = mdp.transitions
    I = np.eye(n)
    phi = np.zeros((K * m * n, (K + 1) * n))
    b = np.zeros(K * m * n)
    for k, (pol, g) in enumerate(zip(experts.policies, gammas)):
        probs = np.asarray(pol, dtype=float) if clip is None else as_stochastic(pol, m, eps=clip)
        if (probs <= 0).any():
            raise ValueError("expert policies must be strictly positive; clip them first")
        g = cap_gamma(g)
        for a in range(m):
            rows = slice((k * m + a) * n, (k * m + a + 1) * n)
            phi[rows, :n] = T[a]
            phi[rows, (k + 1) * n : (k + 2) * n] = g * T[a] - I
            b[rows] = mdp.temperature * np.log(probs[:, a])
    return phi, b


@dataclass
class RankReport:
    rank_phi: int
    rank_phi_b: int
    classification: Classification
    singular_values: np.ndarray
    reward_solution: Optional[np.ndarray] = None
    residual: float = np.nan
    borderline: bool = False

    @property
    def consistent(self) -> bool:
        return self.rank_phi_b == self.rank_phi


def _rank(sv: np.ndarray, tol: float) -> tuple:
    if len(sv) == 0 or sv[0] == 0:
        return 0, False
    cut = tol * sv[0]
    near = (sv > cut / BORDERLINE_FACTOR) & (sv < cut * BORDERLINE_FACTOR)
    return int(np.sum(sv > cut)), bool(near.any())


def rank_classify(phi: np.ndarray, b: np.ndarray, rank_tol: float = RANK_TOL, n_states: Optional[int] = None) -> RankReport:
    """Numerical ranks of ``Phi`` and ``[Phi | b]`` by SVD, relative to the largest singular value.

    When consistent, ``reward_solution`` holds the minimum-norm solution,
    truncated to its reward block if ``n_states`` is given.
    """
    sv = np.linalg.svd(phi, compute_uv=False)
    sv_b = np.linalg.svd(np.column_stack([phi, b]), compute_uv=False)
    r, near = _rank(sv, rank_tol)
    rb, near_b = _rank(sv_b, rank_tol)
    n_cols = phi.shape[1]
    if rb > r:
        cls = Classification.NO_REWARD
    elif r >= n_cols - 1:
        cls = Classification.UNIQUE
    else:
        cls = Classification.UNDERDETERMINED
    sol, res = None, np.nan
    if rb == r:
        x = np.linalg.lstsq(phi, b, rcond=None)[0]
        res = float(np.max(np.abs(phi @ x - b))) if len(b) else 0.0
        sol = x if n_states is None else x[:n_states]
    return RankReport(r, rb, cls, sv, sol, res, near or near_b)


def classify(mdp: TabularMdp, experts: ExpertSet, gammas, rank_tol: float = RANK_TOL) -> RankReport:
    phi, b = build_phi_b(mdp, experts, gammas)
    return rank_classify(phi, b, rank_tol, n_states=mdp.n_states)


def grid_scan(
    mdp: TabularMdp,
    experts: ExpertSet,
    grid_step: float,
    k_range: Optional[Sequence[int]] = None,
    rank_tol: float = RANK_TOL,
) -> list:
    """Classify every lattice point whose coordinates are at least half a
    step apart. ``k_range`` selects which experts take part (default all).
    Returns ``(gammas, RankReport)`` pairs in lexicographic order.
    """
    sub = experts if k_range is None else experts.subset(list(k_range))
    return [(g, classify(mdp, sub, g, rank_tol)) for g in lattice(len(sub), grid_step)]


def scan_rows(results: list, gen_errors: Optional[dict] = None) -> list:
    rows = []
    for g, rep in results:
        row = [*map(float, g), rep.rank_phi, rep.rank_phi_b, rep.classification.value]
        if gen_errors is not None:
            row.append(gen_errors.get(tuple(map(float, g)), float("nan")))
        rows.append(tuple(row))
    return rows


def gen_error_heatmap(
    mdp: TabularMdp,
    experts_k2: ExpertSet,
    grid_step: float,
    n_envs: int,
    seed: int,
    domain: DomainSpec,
    rank_tol: float = RANK_TOL,
) -> list:
    """``(gamma_1, gamma_2, error)`` for each consistent off-diagonal lattice point."""
    if len(experts_k2) != 2:
        raise ValueError("the heatmap needs exactly two experts")
    rows = []
    for g, rep in grid_scan(mdp, experts_k2, grid_step, rank_tol=rank_tol):
        if not rep.consistent:
            continue
        cfg = GenEvalConfig(domain, rep.reward_solution, mdp.reward, n_envs=n_envs, seed=seed)
        rows.append((float(g[0]), float(g[1]), generalization_error(cfg, base=mdp).mean))
    return rows
