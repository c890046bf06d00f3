"""Linear-programming IRL: single-horizon LP-IRL, the naive multi-horizon
extension, the distinguishability LP and the multi-horizon inner problem.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .domains import ExpertSet
from .mdp import TabularMdp, cap_gamma

FEASIBILITY_TOL = 1e-7
Z_TOL = 1e-6
L1_PENALTY = 0.1


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class LpNumericalError(RuntimeError):
    """The backend failed for a reason other than infeasibility/unboundedness."""


class InfeasibleGamma(ValueError):
    """No reward makes every expert uniquely optimal somewhere under these discounts."""


@dataclass
class LpProblem:
    """``maximize c @ x`` s.t. ``A_ub x <= b_ub``, ``A_eq x == b_eq``, ``lo <= x <= hi``."""

    c: np.ndarray
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    lo: Optional[np.ndarray] = None
    hi: Optional[np.ndarray] = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.shape[0]
        self.lo = np.zeros(n) if self.lo is None else np.asarray(self.lo, dtype=float)
        self.hi = np.full(n, np.inf) if self.hi is None else np.asarray(self.hi, dtype=float)
        if self.lo.shape != (n,) or self.hi.shape != (n,):
            raise ValueError("bounds must match the number of variables")
        if (self.lo > self.hi).any():
            raise ValueError("lower bounds exceed upper bounds")
        for A, b, tag in [(self.A_ub, self.b_ub, "inequality"), (self.A_eq, self.b_eq, "equality")]:
            if (A is None) != (b is None):
                raise ValueError(f"{tag} matrix and right-hand side must be given together")
            if A is not None and (np.ndim(A) != 2 or np.shape(A)[1] != n or np.shape(A)[0] != len(b)):
                raise ValueError(f"{tag} constraint dimensions are inconsistent")

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]


@dataclass
class LpSolution:
    status: LpStatus
    x: Optional[np.ndarray]
    objective_value: float


def solve_lp(problem: LpProblem) -> LpSolution:
    """Solve with HiGHS (dual simplex); deterministic for a fixed problem."""
    bounds = [
        (None if np.isneginf(l) else l, None if np.isposinf(h) else h)
        for l, h in zip(problem.lo, problem.hi)
    ]
    res = linprog(
        -problem.c,
        A_ub=problem.A_ub,
        b_ub=problem.b_ub,
        A_eq=problem.A_eq,
        b_eq=problem.b_eq,
        bounds=bounds,
        method="highs-ds",
    )
    if res.status == 2:
        return LpSolution(LpStatus.INFEASIBLE, None, np.nan)
    if res.status == 3:
        return LpSolution(LpStatus.UNBOUNDED, None, np.inf)
    if res.status != 0:
        raise LpNumericalError(f"LP backend failed: {res.message}")
    return LpSolution(LpStatus.OPTIMAL, np.asarray(res.x), float(-res.fun))


# -- Q-gap operator -------------------------------------------------------


@dataclass
class QGapOperator:
    """Rows ``w_{k,s,a}`` with ``w @ r = Q_k(s, pi_k(s)) - Q_k(s, a)`` for ``a != pi_k(s)``."""

    matrix: np.ndarray
    expert: np.ndarray
    state: np.ndarray
    action: np.ndarray
    n_experts: int

    def __len__(self) -> int:
        return self.matrix.shape[0]

    def gaps(self, reward) -> np.ndarray:
        return self.matrix @ np.asarray(reward, dtype=float)

    def rows_of(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.expert == k)


def _gap_rows(mdp: TabularMdp, actions: np.ndarray, gamma: float) -> tuple:
    T = mdp.kernel(terminal=True)
    n = mdp.n_states
    P = T[actions, np.arange(n), :]
    inv = np.linalg.inv(np.eye(n) - cap_gamma(gamma) * P)
    rows, states, acts = [], [], []
    for s in range(n):
        for a in range(mdp.n_actions):
            if a == actions[s]:
                continue
            rows.append((P[s] - T[a, s]) @ inv)
            states.append(s)
            acts.append(a)
    return np.array(rows).reshape(-1, n), np.array(states, dtype=int), np.array(acts, dtype=int)


def build_qgap_operator(mdp: TabularMdp, experts: ExpertSet, gammas: Sequence[float]) -> QGapOperator:
    gammas = np.asarray(gammas, dtype=float)
    if len(gammas) != len(experts):
        raise ValueError("one discount per expert is required")
    blocks, ks, ss, as_ = [], [], [], []
    for k, (actions, g) in enumerate(zip(experts.actions, gammas)):
        W, s, a = _gap_rows(mdp, actions, g)
        blocks.append(W)
        ks.append(np.full(len(s), k))
        ss.append(s)
        as_.append(a)
    return QGapOperator(
        matrix=np.vstack(blocks),
        expert=np.concatenate(ks),
        state=np.concatenate(ss),
        action=np.concatenate(as_),
        n_experts=len(experts),
    )


# -- solutions ----------------------------------------------------------------


@dataclass
class IrlSolution:
    reward: np.ndarray
    gammas: np.ndarray
    objective: float
    omega: list = field(default_factory=list)
    status: str = "optimal"
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "reward": np.asarray(self.reward).tolist(),
            "gammas": np.asarray(self.gammas).tolist(),
            "objective": float(self.objective),
            "omega": [list(map(int, t)) for t in self.omega],
            "status": self.status,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IrlSolution":
        return cls(
            reward=np.asarray(d["reward"], dtype=float),
            gammas=np.asarray(d["gammas"], dtype=float),
            objective=float(d["objective"]),
            omega=[tuple(t) for t in d.get("omega", [])],
            status=d.get("status", "optimal"),
            diagnostics=d.get("diagnostics", {}),
        )


# -- shared LP layout ---------------------------------------------------------
#
# Variables are laid out as [r_plus (S), r_minus (S), extra...]. The reward is
# r = r_plus - r_minus, and sum(r_plus + r_minus) is its l1 norm at optimum.


def _reward_block(W: np.ndarray) -> np.ndarray:
    return np.hstack([W, -W])


def _reward_bounds(n: int, r_max: float) -> tuple:
    return np.zeros(2 * n), np.full(2 * n, float(r_max))


def _box_rows(n: int, n_extra: int, r_max: float) -> tuple:
    # |r_plus - r_minus| <= r_max
    I = np.eye(n)
    A = np.vstack([np.hstack([I, -I]), np.hstack([-I, I])])
    A = np.hstack([A, np.zeros((2 * n, n_extra))])
    return A, np.full(2 * n, float(r_max))


def _extract_reward(x: np.ndarray, n: int) -> np.ndarray:
    r = x[:n] - x[n : 2 * n]
    r[np.abs(r) < 1e-12] = 0.0
    return r


def _per_state(l1_penalty: float, n: int) -> float:
    # the penalty acts on mean |r| so one coefficient suits domains of any size
    if l1_penalty < 0:
        raise ValueError("l1_penalty must be non-negative")
    return float(l1_penalty) / n


def _min_gap_lp(op: QGapOperator, rows_per_state: list, n: int, l1_penalty: float, r_max: float):
    """``max sum_j m_j - l1 * mean|r|`` with ``m_j <= gap`` over the rows of group j and all gaps >= 0."""
    n_groups = len(rows_per_state)
    W = op.matrix
    n_vars = 2 * n + n_groups
    c = np.concatenate([np.full(2 * n, -_per_state(l1_penalty, n)), np.ones(n_groups)])
    A_nonneg = np.hstack([-_reward_block(W), np.zeros((len(W), n_groups))])
    A_min = np.zeros((sum(len(r) for r in rows_per_state), n_vars))
    i = 0
    for j, rows in enumerate(rows_per_state):
        for row in rows:
            A_min[i, : 2 * n] = -_reward_block(W[row : row + 1])[0]
            A_min[i, 2 * n + j] = 1.0
            i += 1
    A_box, b_box = _box_rows(n, n_groups, r_max)
    A = np.vstack([A_nonneg, A_min, A_box])
    b = np.concatenate([np.zeros(len(W) + len(A_min)), b_box])
    lo, hi = _reward_bounds(n, r_max)
    lo = np.concatenate([lo, np.full(n_groups, -np.inf)])
    hi = np.concatenate([hi, np.full(n_groups, np.inf)])
    return solve_lp(LpProblem(c, A, b, lo=lo, hi=hi))


def _state_groups(op: QGapOperator) -> list:
    groups = []
    for k in range(op.n_experts):
        for s in np.unique(op.state[op.expert == k]):
            groups.append(np.flatnonzero((op.expert == k) & (op.state == s)))
    return groups


def lp_irl_single(mdp: TabularMdp, expert, gamma: float, l1_penalty: float = L1_PENALTY, r_max: float = 10.0) -> IrlSolution:
    """Classic LP-IRL: maximize the summed per-state minimal Q-gap of one expert."""
    actions = np.asarray(expert)
    if actions.ndim == 2:
        actions = np.argmax(actions, axis=1)
    experts = ExpertSet([np.eye(mdp.n_actions)[actions]])
    op = build_qgap_operator(mdp, experts, [gamma])
    sol = _min_gap_lp(op, _state_groups(op), mdp.n_states, l1_penalty, r_max)
    if sol.status is not LpStatus.OPTIMAL:
        raise LpNumericalError(f"single-horizon LP returned {sol.status.value}")
    return IrlSolution(
        reward=_extract_reward(sol.x, mdp.n_states),
        gammas=np.array([float(gamma)]),
        objective=sol.objective_value,
    )


def naive_mplp(
    mdp: TabularMdp,
    experts: ExpertSet,
    gammas: Sequence[float],
    l1_penalty: float = L1_PENALTY,
    r_max: float = 10.0,
) -> IrlSolution:
    """The straightforward multi-expert extension: sum of every expert's
    per-state minimal gaps, with all gaps kept nonnegative.
    """
    op = build_qgap_operator(mdp, experts, gammas)
    sol = _min_gap_lp(op, _state_groups(op), mdp.n_states, l1_penalty, r_max)
    if sol.status is not LpStatus.OPTIMAL:
        # every expert weakly optimal may be impossible when experts share a discount
        return IrlSolution(
            reward=np.zeros(mdp.n_states),
            gammas=np.asarray(gammas, dtype=float),
            objective=-np.inf,
            status=sol.status.value,
        )
    return IrlSolution(
        reward=_extract_reward(sol.x, mdp.n_states),
        gammas=np.asarray(gammas, dtype=float),
        objective=sol.objective_value,
    )


# -- distinguishability -------------------------------------------------------


@dataclass
class OmegaReport:
    omega_k: list
    slack: np.ndarray
    feasible: bool
    reward: np.ndarray
    pair_witness: dict = field(default_factory=dict)

    def pairs(self) -> list:
        return [(k, s, a) for k, members in enumerate(self.omega_k) for s, a in sorted(members)]


def _check_pairs(experts: ExpertSet, omega_k: list) -> tuple:
    actions = experts.actions
    witness = {}
    feasible = True
    for i in range(len(experts)):
        for j in range(len(experts)):
            if i == j:
                continue
            states = [s for s, a in omega_k[i] if actions[j][s] == a]
            witness[(i, j)] = min(states) if states else None
            feasible &= bool(states)
    return feasible, witness


def compute_omega(
    mdp: TabularMdp,
    experts: ExpertSet,
    gammas: Sequence[float],
    r_max: Optional[float] = None,
    z_tol: float = Z_TOL,
) -> OmegaReport:
    """Find the pairs that some bounded reward separates strictly.

    Solves ``min 1'z`` s.t. ``gap + z >= 1``, ``gap >= 0``, ``z >= 0``,
    ``|r| <= r_max``; pairs with zero slack form ``Omega_k``.
    """
    op = build_qgap_operator(mdp, experts, gammas)
    n, m = mdp.n_states, len(op)
    W = op.matrix
    c = np.concatenate([np.zeros(2 * n), -np.ones(m)])
    A_sep = np.hstack([-_reward_block(W), -np.eye(m)])
    A_nonneg = np.hstack([-_reward_block(W), np.zeros((m, m))])
    A = np.vstack([A_sep, A_nonneg])
    b = np.concatenate([-np.ones(m), np.zeros(m)])
    if r_max is not None:
        A_box, b_box = _box_rows(n, m, r_max)
        A, b = np.vstack([A, A_box]), np.concatenate([b, b_box])
    lo, hi = _reward_bounds(n, np.inf if r_max is None else r_max)
    lo = np.concatenate([lo, np.zeros(m)])
    hi = np.concatenate([hi, np.full(m, np.inf)])
    sol = solve_lp(LpProblem(c, A, b, lo=lo, hi=hi))
    if sol.status is not LpStatus.OPTIMAL:
        raise LpNumericalError(f"distinguishability LP returned {sol.status.value}")
    z = sol.x[2 * n :]
    omega_k = [set() for _ in range(len(experts))]
    for row in np.flatnonzero(z <= z_tol):
        omega_k[op.expert[row]].add((int(op.state[row]), int(op.action[row])))
    feasible, witness = _check_pairs(experts, omega_k)
    return OmegaReport(omega_k, z, feasible, _extract_reward(sol.x, n), witness)


def mplp_inner(
    mdp: TabularMdp,
    experts: ExpertSet,
    gammas: Sequence[float],
    omega: Optional[OmegaReport] = None,
    l1_penalty: float = L1_PENALTY,
    r_max: float = 10.0,
) -> IrlSolution:
    """Maximize the smallest gap over ``Omega`` minus ``l1_penalty * mean|r|``,
    keeping every gap nonnegative.
    """
    gammas = np.asarray(gammas, dtype=float)
    if omega is None:
        omega = compute_omega(mdp, experts, gammas)
    if not omega.feasible:
        raise InfeasibleGamma(f"no reward separates the experts under discounts {gammas.tolist()}")
    op = build_qgap_operator(mdp, experts, gammas)
    n, W = mdp.n_states, op.matrix
    members = [
        row
        for row in range(len(op))
        if (int(op.state[row]), int(op.action[row])) in omega.omega_k[op.expert[row]]
    ]
    c = np.concatenate([np.full(2 * n, -_per_state(l1_penalty, n)), [1.0]])
    A_nonneg = np.hstack([-_reward_block(W), np.zeros((len(W), 1))])
    A_t = np.hstack([-_reward_block(W[members]), np.ones((len(members), 1))])
    A_box, b_box = _box_rows(n, 1, r_max)
    A = np.vstack([A_nonneg, A_t, A_box])
    b = np.concatenate([np.zeros(len(W) + len(members)), b_box])
    lo, hi = _reward_bounds(n, r_max)
    lo = np.concatenate([lo, [-np.inf if members else 0.0]])
    hi = np.concatenate([hi, [np.inf if members else 0.0]])
    sol = solve_lp(LpProblem(c, A, b, lo=lo, hi=hi))
    if sol.status is not LpStatus.OPTIMAL:
        raise LpNumericalError(f"inner LP returned {sol.status.value}")
    reward = _extract_reward(sol.x, n)
    return IrlSolution(
        reward=reward,
        gammas=gammas,
        objective=sol.objective_value,
        omega=omega.pairs(),
        diagnostics={"t": float(sol.x[-1]), "min_gap": float(np.min(op.gaps(reward), initial=0.0))},
    )
