"""Benchmark MDPs, expert sets and randomized variants for transfer tests."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .mdp import TabularMdp, soft_value_iteration, value_iteration

# grid action order
RIGHT, DOWN, LEFT, UP = range(4)
_MOVES = {RIGHT: (0, 1), DOWN: (1, 0), LEFT: (0, -1), UP: (-1, 0)}

BIG_SMALL_SHAPE = (4, 6)
CLIFF_SHAPE = (3, 6)
RANDOM_GAMMA_MAX = 0.999


class DomainKind(str, enum.Enum):
    TOY = "toy"
    BIG_SMALL = "big_small"
    CLIFF = "cliff"


class Regime(str, enum.Enum):
    STANDARD = "standard"
    ENTROPY_REGULARIZED = "entropy_regularized"


class AssumptionViolation(ValueError):
    """Two experts share the same policy, so they cannot be told apart."""


@dataclass(frozen=True)
class DomainSpec:
    kind: DomainKind
    grid_rows: Optional[int] = None
    grid_cols: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", DomainKind(self.kind))
        if self.kind is not DomainKind.TOY:
            default = BIG_SMALL_SHAPE if self.kind is DomainKind.BIG_SMALL else CLIFF_SHAPE
            rows = default[0] if self.grid_rows is None else int(self.grid_rows)
            cols = default[1] if self.grid_cols is None else int(self.grid_cols)
            min_dim = 3 if self.kind is DomainKind.CLIFF else 2
            if rows < min_dim or cols < min_dim:
                raise ValueError(f"{self.kind.value} grid must be at least {min_dim}x{min_dim}")
            object.__setattr__(self, "grid_rows", rows)
            object.__setattr__(self, "grid_cols", cols)

    def build(self) -> TabularMdp:
        if self.kind is DomainKind.TOY:
            return build_toy()
        if self.kind is DomainKind.BIG_SMALL:
            return build_big_small(self.grid_rows, self.grid_cols)
        return build_cliff(self.grid_rows, self.grid_cols)


@dataclass
class ExpertSet:
    policies: list
    true_gammas: Optional[np.ndarray] = None
    regime: Regime = Regime.STANDARD

    def __post_init__(self):
        self.policies = [np.asarray(p, dtype=float) for p in self.policies]
        self.regime = Regime(self.regime)
        if self.true_gammas is not None:
            self.true_gammas = np.asarray(self.true_gammas, dtype=float)
            if len(self.true_gammas) != len(self.policies):
                raise ValueError("one true discount per expert is required")

    def __len__(self) -> int:
        return len(self.policies)

    @property
    def actions(self) -> list:
        """Deterministic action vectors (only meaningful for hard experts)."""
        return [np.argmax(p, axis=1) for p in self.policies]

    def subset(self, idx: Sequence[int]) -> "ExpertSet":
        gam = None if self.true_gammas is None else self.true_gammas[list(idx)]
        return ExpertSet([self.policies[i] for i in idx], gam, self.regime)

    def to_dict(self) -> dict:
        return {
            "policies": [p.tolist() for p in self.policies],
            "true_gammas": None if self.true_gammas is None else self.true_gammas.tolist(),
            "regime": self.regime.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExpertSet":
        return cls(d["policies"], d.get("true_gammas"), d.get("regime", "standard"))


# -- toy ----------------------------------------------------------------------

TOY_REWARD = (0.0, 6.0, 7.0, 10.0)
TOY_SUCCESS = (0.95, 0.9, 0.6)
TOY_TARGETS = (3, 1, 2)


def _toy_transitions(success: Sequence[float]) -> np.ndarray:
    T = np.zeros((3, 4, 4))
    for a, (dst, p) in enumerate(zip(TOY_TARGETS, success)):
        T[a, 0, dst] = p
        T[a, 0, 0] = 1.0 - p
    T[:, 1, 3] = 1.0
    T[:, 2, 3] = 1.0
    T[:, 3, 3] = 1.0
    return T


def build_toy() -> TabularMdp:
    """Four-state MDP where the optimal action at s0 depends on the horizon."""
    return TabularMdp(
        transitions=_toy_transitions(TOY_SUCCESS),
        reward=np.array(TOY_REWARD),
        rho0=np.array([1.0, 0.0, 0.0, 0.0]),
        absorbing=np.array([False, False, False, True]),
        name="toy",
    )


# -- grids --------------------------------------------------------------------


def _grid_kernel(rows: int, cols: int, absorbing: np.ndarray, intended: float) -> np.ndarray:
    """Slip dynamics: the intended move w.p. ``intended``, each other move
    w.p. ``(1 - intended) / 3``. Bumping into a wall leaves the agent in place.
    """
    n = rows * cols
    T = np.zeros((4, n, n))
    other = (1.0 - intended) / 3.0
    for s in range(n):
        if absorbing[s]:
            T[:, s, s] = 1.0
            continue
        r, c = divmod(s, cols)
        dest = {}
        for m, (dr, dc) in _MOVES.items():
            rr, cc = r + dr, c + dc
            dest[m] = rr * cols + cc if 0 <= rr < rows and 0 <= cc < cols else s
        for a in range(4):
            for m in range(4):
                T[a, s, dest[m]] += intended if m == a else other
    return T


def _uniform_over(mask: np.ndarray) -> np.ndarray:
    rho0 = mask.astype(float)
    return rho0 / rho0.sum()


def build_big_small(rows: int = BIG_SMALL_SHAPE[0], cols: int = BIG_SMALL_SHAPE[1]) -> TabularMdp:
    """Deterministic grid: +2 exit bottom-left, +20 exit bottom-right, -2 per step."""
    if rows < 2 or cols < 2:
        raise ValueError("big-small grid must be at least 2x2")
    n = rows * cols
    small, large = (rows - 1) * cols, rows * cols - 1
    absorbing = np.zeros(n, dtype=bool)
    absorbing[[small, large]] = True
    reward = np.full(n, -2.0)
    reward[small], reward[large] = 2.0, 20.0
    return TabularMdp(
        transitions=_grid_kernel(rows, cols, absorbing, 1.0),
        reward=reward,
        rho0=_uniform_over(~absorbing),
        absorbing=absorbing,
        name="big_small",
    )


def build_cliff(rows: int = CLIFF_SHAPE[0], cols: int = CLIFF_SHAPE[1]) -> TabularMdp:
    """Slippery grid with a cliff along the top row and the goal at its right end."""
    if rows < 3 or cols < 3:
        raise ValueError("cliff grid must be at least 3x3")
    n = rows * cols
    goal = cols - 1
    absorbing = np.zeros(n, dtype=bool)
    absorbing[:cols] = True
    reward = np.full(n, -1.0)
    reward[cols : 2 * cols] = -2.0
    reward[:cols] = -10.0
    reward[goal] = 20.0
    return TabularMdp(
        transitions=_grid_kernel(rows, cols, absorbing, 0.9),
        reward=reward,
        rho0=_uniform_over(~absorbing),
        absorbing=absorbing,
        name="cliff",
    )


# -- expert sets ----------------------------------------------------------------


def _distinct_or_raise(policies: list, gammas: Sequence[float], atol: float = 1e-9) -> None:
    for i in range(len(policies)):
        for j in range(i + 1, len(policies)):
            if np.max(np.abs(policies[i] - policies[j])) <= atol:
                raise AssumptionViolation(
                    f"discounts {gammas[i]} and {gammas[j]} produce the same expert policy"
                )


def make_experts(mdp: TabularMdp, gammas: Sequence[float], regime=Regime.STANDARD) -> ExpertSet:
    gammas = np.asarray(gammas, dtype=float)
    if len(gammas) < 1:
        raise ValueError("need at least one discount factor")
    if (np.diff(gammas) <= 0).any():
        raise ValueError("expert discounts must be strictly increasing")
    if (gammas < 0).any() or (gammas >= 1).any():
        raise ValueError("expert discounts must lie in [0, 1)")
    regime = Regime(regime)
    policies = []
    for g in gammas:
        if regime is Regime.STANDARD:
            _, actions = value_iteration(mdp, g)
            policies.append(np.eye(mdp.n_actions)[actions])
        else:
            _, probs = soft_value_iteration(mdp, g)
            policies.append(probs)
    _distinct_or_raise(policies, gammas)
    return ExpertSet(policies, gammas, regime)


# -- randomized environments -------------------------------------------------


def randomize_environment(spec: DomainSpec, base: TabularMdp, rng_seed: int):
    """Perturbed dynamics plus a random discount, reproducible from the seed."""
    rng = np.random.default_rng(rng_seed)
    spec = DomainSpec(spec.kind, spec.grid_rows, spec.grid_cols, spec.seed)
    if spec.kind is DomainKind.TOY:
        success = rng.uniform(0.0, 1.0, size=3)
        T = _toy_transitions(success)
    else:
        rows, cols = base_shape(spec, base)
        eps = rng.uniform(0.0, 1.0)
        T = _grid_kernel(rows, cols, base.absorbing, eps)
    gamma = float(rng.uniform(0.0, RANDOM_GAMMA_MAX))
    return base.replace(transitions=T), gamma


def base_shape(spec: DomainSpec, base: TabularMdp) -> tuple:
    if spec.grid_rows * spec.grid_cols != base.n_states:
        raise ValueError("domain spec does not match the base MDP size")
    return spec.grid_rows, spec.grid_cols


DEFAULT_MPLP_GAMMAS = {
    DomainKind.TOY: (0.2, 0.65, 0.95),
    DomainKind.BIG_SMALL: (0.1, 0.44, 0.935),
    DomainKind.CLIFF: (0.17, 0.40, 0.735),
}

DEFAULT_MPMCE_GAMMAS = {
    DomainKind.TOY: (0.3, 0.5, 0.95),
    DomainKind.BIG_SMALL: (0.1, 0.45, 0.9),
    DomainKind.CLIFF: (0.0, 0.2, 0.52),
}
