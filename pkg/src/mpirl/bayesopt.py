"""Gaussian-process Bayesian optimization over discount vectors in [0, 1]^K."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize
from scipy.stats import norm, qmc

log = logging.getLogger(__name__)

LENGTH_BOUNDS = (0.01, 2.0)
SIGNAL_BOUNDS = (1e-2, 1e2)
NOISE_BOUNDS = (1e-8, 1e-1)
JITTERS = (0.0, 1e-10, 1e-8, 1e-6, 1e-4)
VAR_FLOOR = 1e-10


# -- GP surrogate ---------------------------------------------------------------


def matern52(X1: np.ndarray, X2: np.ndarray, length_scales, signal_var: float) -> np.ndarray:
    d = (X1[:, None, :] - X2[None, :, :]) / np.asarray(length_scales)
    r = np.sqrt(5.0 * np.sum(d * d, axis=-1))
    return signal_var * (1.0 + r + r * r / 3.0) * np.exp(-r)


def _cholesky(K: np.ndarray):
    for jitter in JITTERS:
        try:
            return cho_factor(K + jitter * np.eye(len(K)), lower=True)
        except np.linalg.LinAlgError:
            continue
    raise np.linalg.LinAlgError("kernel matrix is not positive definite after maximal jitter")


@dataclass
class GpSurrogate:
    """Exact GP regression with a Matern-5/2 ARD kernel on standardized targets."""

    X: np.ndarray
    y: np.ndarray
    length_scales: np.ndarray
    signal_var: float = 1.0
    noise_var: float = 1e-6
    y_mean: float = 0.0
    y_scale: float = 1.0
    _chol: Any = field(default=None, repr=False)
    _alpha: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        self.length_scales = np.broadcast_to(
            np.asarray(self.length_scales, dtype=float), (self.X.shape[1],)
        ).copy()
        if len(self.y) < 1 or len(self.y) != len(self.X):
            raise ValueError("need at least one observation with matching inputs")
        self._factor()

    @classmethod
    def fit(cls, X, y, rng: np.random.Generator, n_restarts: int = 8) -> "GpSurrogate":
        """Standardize ``y`` and pick hyperparameters by maximum marginal likelihood."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
        y_mean = float(np.mean(y))
        y_scale = float(np.std(y))
        if not y_scale > 1e-12:
            y_scale = 1.0
        z = (y - y_mean) / y_scale
        dim = X.shape[1]
        bounds = [np.log(LENGTH_BOUNDS)] * dim + [np.log(SIGNAL_BOUNDS), np.log(NOISE_BOUNDS)]
        lo = np.array([b[0] for b in bounds])
        hi = np.array([b[1] for b in bounds])
        starts = [np.concatenate([np.full(dim, np.log(0.3)), [0.0, np.log(1e-4)]])]
        starts += [rng.uniform(lo, hi) for _ in range(max(n_restarts - 1, 0))]
        best = None
        for x0 in starts:
            res = minimize(_neg_log_marginal, x0, args=(X, z), method="L-BFGS-B", bounds=bounds)
            if best is None or res.fun < best.fun:
                best = res
        p = best.x
        return cls(
            X, y, np.exp(p[:dim]), float(np.exp(p[dim])), float(np.exp(p[dim + 1])), y_mean, y_scale
        )

    @property
    def z(self) -> np.ndarray:
        return (self.y - self.y_mean) / self.y_scale

    def _factor(self):
        K = matern52(self.X, self.X, self.length_scales, self.signal_var)
        K[np.diag_indices_from(K)] += self.noise_var
        self._chol = _cholesky(K)
        self._alpha = cho_solve(self._chol, self.z)

    def predict_standardized(self, Xq) -> tuple:
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        Ks = matern52(Xq, self.X, self.length_scales, self.signal_var)
        mean = Ks @ self._alpha
        v = cho_solve(self._chol, Ks.T)
        var = self.signal_var - np.sum(Ks * v.T, axis=1)
        var[var < VAR_FLOOR * self.signal_var] = 0.0
        return mean, var

    def predict(self, Xq) -> tuple:
        mean, var = self.predict_standardized(Xq)
        return self.y_mean + self.y_scale * mean, var * self.y_scale**2


def _neg_log_marginal(params: np.ndarray, X: np.ndarray, z: np.ndarray) -> float:
    dim = X.shape[1]
    ls, sig, noise = np.exp(params[:dim]), np.exp(params[dim]), np.exp(params[dim + 1])
    K = matern52(X, X, ls, sig)
    K[np.diag_indices_from(K)] += noise
    try:
        c, low = cho_factor(K, lower=True)
    except np.linalg.LinAlgError:
        return 1e25
    alpha = cho_solve((c, low), z)
    return float(0.5 * z @ alpha + np.sum(np.log(np.diag(c))) + 0.5 * len(z) * np.log(2 * np.pi))


def fit_predict(surrogate: GpSurrogate, query) -> tuple:
    """Posterior means and variances in the original units of ``y``."""
    return surrogate.predict(query)


def expected_improvement(surrogate: GpSurrogate, query, best: Optional[float] = None) -> np.ndarray:
    """EI for maximization, computed on the standardized scale."""
    mean, var = surrogate.predict_standardized(query)
    best = float(np.max(surrogate.z)) if best is None else (best - surrogate.y_mean) / surrogate.y_scale
    sd = np.sqrt(var)
    gain = mean - best
    ei = np.maximum(gain, 0.0)
    pos = sd > 0
    zz = gain[pos] / sd[pos]
    ei[pos] = gain[pos] * norm.cdf(zz) + sd[pos] * norm.pdf(zz)
    return np.maximum(ei, 0.0)


# -- admissible points -------------------------------------------------------------


def _isotonic(v: np.ndarray) -> np.ndarray:
    """Least-squares nondecreasing fit (pool adjacent violators)."""
    blocks = []  # (mean, weight)
    for x in v:
        blocks.append([float(x), 1])
        while len(blocks) > 1 and blocks[-2][0] > blocks[-1][0]:
            m2, w2 = blocks.pop()
            m1, w1 = blocks.pop()
            blocks.append([(m1 * w1 + m2 * w2) / (w1 + w2), w1 + w2])
    return np.concatenate([np.full(w, m) for m, w in blocks])


def project_distinct(x, min_sep: float) -> np.ndarray:
    """Nearest point of ``[0, 1]^K`` whose coordinates are pairwise ``min_sep`` apart."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    k = len(x)
    if min_sep <= 0 or k < 2:
        return x
    if (k - 1) * min_sep > 1:
        raise ValueError("cannot fit that many separated discounts in [0, 1]")
    order = np.argsort(x, kind="stable")
    steps = np.arange(k) * min_sep
    w = _isotonic(x[order] - steps)
    w = np.clip(w, 0.0, 1.0 - (k - 1) * min_sep)
    out = np.empty(k)
    out[order] = w + steps
    return out


def is_distinct(x, min_sep: float) -> bool:
    x = np.sort(np.asarray(x, dtype=float))
    return bool(np.all(np.diff(x) >= min_sep - 1e-15))


# -- outer loop ------------------------------------------------------------------


@dataclass
class TraceRecord:
    iteration: int
    gammas: np.ndarray
    score: float
    best_so_far: float
    failed: bool = False


@dataclass
class OuterTrace:
    records: list = field(default_factory=list)
    best_gammas: Optional[np.ndarray] = None
    best_score: float = -np.inf
    best_payload: Any = None

    def __len__(self) -> int:
        return len(self.records)

    @property
    def best_so_far(self) -> np.ndarray:
        return np.array([r.best_so_far for r in self.records])

    def csv_rows(self) -> list:
        return [(r.iteration, *r.gammas.tolist(), r.score, r.best_so_far) for r in self.records]

    def to_dict(self) -> dict:
        return {
            "records": [
                {
                    "iteration": r.iteration,
                    "gammas": r.gammas.tolist(),
                    "score": r.score,
                    "best_so_far": r.best_so_far,
                    "failed": r.failed,
                }
                for r in self.records
            ],
            "best_gammas": None if self.best_gammas is None else self.best_gammas.tolist(),
            "best_score": self.best_score,
        }


@dataclass
class OuterConfig:
    n_init: Optional[int] = None  # defaults to 5 * K
    max_iter: int = 100
    seed: int = 0
    min_separation: float = 1e-3
    n_candidates: int = 256
    n_local: int = 8
    n_restarts: int = 8
    failure_floor: Optional[float] = None
    stop_when: Optional[Callable[[float, Any], bool]] = None


class _Recorder:
    def __init__(self, objective, floor: Optional[float]):
        self.objective = objective
        self.floor = floor
        self.trace = OuterTrace()
        self.X, self.y, self.failed = [], [], []

    def _floor(self) -> float:
        if self.floor is not None:
            return float(self.floor)
        ok = [y for y, f in zip(self.y, self.failed) if not f]
        if not ok:
            return -1.0
        return min(ok) - 3.0 * (max(ok) - min(ok))

    def evaluate(self, gammas: np.ndarray):
        payload, failed = None, False
        try:
            out = self.objective(gammas)
            score, payload = out if isinstance(out, tuple) else (out, None)
            score = float(score)
            if not np.isfinite(score):
                raise FloatingPointError("objective returned a non-finite score")
        except Exception as exc:  # recorded, optimization continues
            log.info("evaluation at %s failed: %s", np.round(gammas, 6).tolist(), exc)
            score, failed = self._floor(), True
        tr = self.trace
        if not failed and score > tr.best_score:
            tr.best_score, tr.best_gammas, tr.best_payload = score, gammas.copy(), payload
        tr.records.append(TraceRecord(len(tr.records), gammas.copy(), score, tr.best_score, failed))
        self.X.append(gammas.copy())
        self.y.append(score)
        self.failed.append(failed)
        return score, payload

    def targets(self) -> np.ndarray:
        y = np.array(self.y, dtype=float)
        fail = np.array(self.failed)
        if fail.any():
            y[fail] = self._floor()
        return y


def _maximize_ei(gp: GpSurrogate, dim: int, cfg: OuterConfig, rng: np.random.Generator, seen) -> np.ndarray:
    sobol = qmc.Sobol(d=dim, scramble=True, seed=rng)
    cand = sobol.random(cfg.n_candidates)
    ei = expected_improvement(gp, cand)
    starts = cand[np.argsort(-ei, kind="stable")[: cfg.n_local]]

    def neg(x):
        return -float(expected_improvement(gp, x[None, :])[0])

    best_x, best_v = starts[0], -np.inf
    for x0 in starts:
        res = minimize(neg, x0, method="L-BFGS-B", bounds=[(0.0, 1.0)] * dim)
        x = project_distinct(res.x, cfg.min_separation)
        v = -neg(x)
        if v > best_v:
            best_x, best_v = x, v
    if any(np.allclose(best_x, s, atol=1e-9) for s in seen):
        # acquisition collapsed onto a known point; explore instead
        best_x = project_distinct(rng.uniform(size=dim), cfg.min_separation)
    return best_x


def run_outer(objective: Callable, K: int, config: Optional[OuterConfig] = None, **overrides) -> OuterTrace:
    """Maximize ``objective(gammas)`` with uniform initialization followed by
    GP expected-improvement steps. ``objective`` returns a score or
    ``(score, payload)``; exceptions are recorded at the failure floor.
    """
    cfg = OuterConfig() if config is None else config
    if overrides:
        cfg = OuterConfig(**{**cfg.__dict__, **overrides})
    n_init = 5 * K if cfg.n_init is None else cfg.n_init
    if not cfg.max_iter >= n_init >= 1:
        raise ValueError("need max_iter >= n_init >= 1")
    rng = np.random.default_rng(cfg.seed)
    rec = _Recorder(objective, cfg.failure_floor)
    for _ in range(n_init):
        g = project_distinct(rng.uniform(size=K), cfg.min_separation)
        score, payload = rec.evaluate(g)
        if cfg.stop_when is not None and not rec.failed[-1] and cfg.stop_when(score, payload):
            return rec.trace
    while len(rec.trace) < cfg.max_iter:
        gp = GpSurrogate.fit(np.array(rec.X), rec.targets(), rng, cfg.n_restarts)
        g = _maximize_ei(gp, K, cfg, rng, rec.X)
        score, payload = rec.evaluate(g)
        if cfg.stop_when is not None and not rec.failed[-1] and cfg.stop_when(score, payload):
            break
    return rec.trace


def lattice(K: int, step: float, min_separation: Optional[float] = None) -> list:
    if step <= 0:
        raise ValueError("grid step must be positive")
    n = int(round(1.0 / step))
    axis = np.round(np.linspace(0.0, 1.0, n + 1), 12)
    sep = step / 2 if min_separation is None else min_separation
    return [np.array(p) for p in itertools.product(axis, repeat=K) if is_distinct(p, sep)]


def grid_search(objective: Callable, K: int, step: float, min_separation: Optional[float] = None) -> OuterTrace:
    """Exhaustive evaluation on the lattice ``{0, step, ..., 1}^K`` in lexicographic order."""
    points = lattice(K, step, min_separation)
    log.info("grid search over %d points", len(points))
    rec = _Recorder(objective, None)
    for p in points:
        rec.evaluate(p)
    return rec.trace
