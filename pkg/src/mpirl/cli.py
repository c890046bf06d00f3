"""Batch front end: ``mpirl run``, ``mpirl validate`` and ``mpirl domains export``.

A run is described by one JSON file::

    {
      "domain": {"kind": "toy"},
      "algorithm": "MplpIrl",
      "params": {"l1_penalty": 0.1, "bo": {"max_iter": 100}},
      "seed": 0,
      "output_dir": "out/toy_mplp"
    }

Exit codes: 0 success, 2 configuration error, 3 runtime failure. Runtime
failures leave an ``error.json`` record in the output directory.
"""

from __future__ import annotations

import argparse
import enum
import json
import logging
import sys
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import artifacts
from .bayesopt import OuterConfig, lattice
from .domains import (
    DEFAULT_MPLP_GAMMAS,
    DEFAULT_MPMCE_GAMMAS,
    DomainKind,
    DomainSpec,
    Regime,
    make_experts,
)
from .evaluation import GenEvalConfig, generalization_error, order_recovery, value_curves
from .identifiability import classify, scan_rows
from .lp import L1_PENALTY, InfeasibleGamma, mplp_inner, naive_mplp
from .mce import EPSILON, InnerConfig, solve_inner_dual
from .pipelines import fit_mplp, fit_mpmce, reconstructs_experts

log = logging.getLogger("mpirl")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
MAX_GRID_POINTS = 200_000


class Algorithm(str, enum.Enum):
    MPLP = "MplpIrl"
    MPMCE = "MpmceIrl"
    NAIVE = "NaiveLp"
    ID_SCAN = "IdScan"
    GEN_EVAL = "GenEval"
    VALUE_CURVES = "ValueCurves"
    EXPERTS = "Experts"


_TOP_KEYS = {"domain", "algorithm", "params", "seed", "output_dir"}
_DOMAIN_KEYS = {"kind", "grid_rows", "grid_cols", "seed"}
_BO_KEYS = {"n_init", "max_iter", "min_separation", "n_candidates", "n_local", "n_restarts", "failure_floor"}
_KIND_ALIASES = {"toy": "toy", "bigsmall": "big_small", "big_small": "big_small", "cliff": "cliff"}

# allowed parameter keys per algorithm; "expert_gammas" picks the ground-truth experts
_COMMON = {"expert_gammas", "temperature"}
_PARAMS = {
    Algorithm.MPLP: _COMMON | {"gammas", "l1_penalty", "r_max", "bo", "n_envs"},
    Algorithm.NAIVE: _COMMON | {"gammas", "l1_penalty", "r_max", "bo", "n_envs"},
    Algorithm.MPMCE: _COMMON | {"gammas", "epsilon", "r_max", "bo", "n_envs", "max_grad_steps", "inner_method"},
    Algorithm.ID_SCAN: _COMMON | {"grid_step", "k_range", "rank_tol", "gen_error", "n_envs", "max_grid_points"},
    Algorithm.GEN_EVAL: _COMMON | {"learned_reward", "n_envs"},
    Algorithm.VALUE_CURVES: _COMMON | {"reward", "gamma_step", "regime"},
    Algorithm.EXPERTS: _COMMON | {"gammas", "regime"},
}


class ConfigError(ValueError):
    def __init__(self, violations: list):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass
class ExperimentConfig:
    domain: DomainSpec
    algorithm: Algorithm
    params: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: Optional[str] = None

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        problems = validate(d)
        if problems:
            raise ConfigError(problems)
        dom = dict(d["domain"])
        dom["kind"] = _KIND_ALIASES[str(dom["kind"]).lower()]
        return cls(
            domain=DomainSpec(**dom),
            algorithm=Algorithm(d["algorithm"]),
            params=dict(d.get("params", {})),
            seed=int(d.get("seed", 0)),
            output_dir=d.get("output_dir"),
        )

    def to_dict(self) -> dict:
        return {
            "domain": {
                "kind": self.domain.kind.value,
                "grid_rows": self.domain.grid_rows,
                "grid_cols": self.domain.grid_cols,
                "seed": self.domain.seed,
            },
            "algorithm": self.algorithm.value,
            "params": self.params,
            "seed": self.seed,
            "output_dir": self.output_dir,
        }

    @property
    def mce_family(self) -> bool:
        return self.algorithm in (Algorithm.MPMCE, Algorithm.ID_SCAN)

    def regime(self) -> Regime:
        if "regime" in self.params:
            return Regime(self.params["regime"])
        return Regime.ENTROPY_REGULARIZED if self.mce_family else Regime.STANDARD

    def expert_gammas(self) -> tuple:
        if "expert_gammas" in self.params:
            return tuple(float(g) for g in self.params["expert_gammas"])
        table = DEFAULT_MPMCE_GAMMAS if self.regime() is Regime.ENTROPY_REGULARIZED else DEFAULT_MPLP_GAMMAS
        return table[self.domain.kind]

    def default_r_max(self) -> float:
        return 10.0 if self.domain.kind is DomainKind.TOY else 20.0

    def outer(self) -> OuterConfig:
        bo = dict(self.params.get("bo", {}))
        if self.algorithm is Algorithm.NAIVE:
            bo.setdefault("min_separation", 0.0)
        return OuterConfig(seed=self.seed, **bo)


# -- validation -----------------------------------------------------------------


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and np.isfinite(x)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _check_gammas(name: str, g, out: list, distinct: bool = True, increasing: bool = False) -> None:
    if not isinstance(g, list) or not g or not all(_is_number(v) for v in g):
        out.append(f"params.{name}: must be a non-empty list of numbers")
        return
    if any(not 0.0 <= v <= 1.0 for v in g):
        out.append(f"params.{name}: discounts must lie in [0, 1]")
    if distinct and len(set(float(v) for v in g)) < len(g):
        out.append(f"params.{name}: discounts must be pairwise distinct")
    if increasing and any(b <= a for a, b in zip(g, g[1:])):
        out.append(f"params.{name}: discounts must be strictly increasing")


def _check_positive(params: dict, key: str, out: list, integer: bool = False, allow_zero: bool = False) -> None:
    if key not in params:
        return
    v = params[key]
    ok = _is_int(v) if integer else _is_number(v)
    if not ok or v < 0 or (v == 0 and not allow_zero):
        kind = "integer" if integer else "number"
        bound = "non-negative" if allow_zero else "positive"
        out.append(f"params.{key}: must be a {bound} {kind}, got {v!r}")


def validate(d) -> list:
    """All problems with a raw config document; an empty list means runnable."""
    out = []
    if not isinstance(d, dict):
        return ["config must be a JSON object"]
    for k in sorted(set(d) - _TOP_KEYS):
        out.append(f"unknown key {k!r}")
    dom = d.get("domain")
    kind = None
    if not isinstance(dom, dict):
        out.append("domain: required object")
    else:
        for k in sorted(set(dom) - _DOMAIN_KEYS):
            out.append(f"domain: unknown key {k!r}")
        raw_kind = str(dom.get("kind", "")).lower()
        if raw_kind not in _KIND_ALIASES:
            out.append(f"domain.kind: must be one of toy, big_small, cliff, got {dom.get('kind')!r}")
        else:
            kind = DomainKind(_KIND_ALIASES[raw_kind])
        for k in ("grid_rows", "grid_cols"):
            if k in dom and dom[k] is not None:
                if kind is DomainKind.TOY:
                    out.append(f"domain.{k}: only applies to grid domains")
                elif not _is_int(dom[k]) or dom[k] < (3 if kind is DomainKind.CLIFF else 2):
                    out.append(f"domain.{k}: must be an integer of at least {3 if kind is DomainKind.CLIFF else 2}")
        if "seed" in dom and (not _is_int(dom["seed"]) or dom["seed"] < 0):
            out.append("domain.seed: must be an unsigned integer")
    if "seed" in d and (not _is_int(d["seed"]) or d["seed"] < 0):
        out.append("seed: must be an unsigned integer")
    if "output_dir" in d and d["output_dir"] is not None and not isinstance(d["output_dir"], str):
        out.append("output_dir: must be a string")
    try:
        algo = Algorithm(d.get("algorithm"))
    except ValueError:
        out.append(f"algorithm: must be one of {', '.join(a.value for a in Algorithm)}, got {d.get('algorithm')!r}")
        return out
    params = d.get("params", {})
    if not isinstance(params, dict):
        out.append("params: must be an object")
        return out
    for k in sorted(set(params) - _PARAMS[algo]):
        out.append(f"params: unknown key {k!r} for {algo.value}")
    for key in ("n_envs", "max_grad_steps", "max_grid_points"):
        _check_positive(params, key, out, integer=True)
    for key in ("r_max", "epsilon", "temperature", "rank_tol", "grid_step", "gamma_step"):
        _check_positive(params, key, out)
    _check_positive(params, "l1_penalty", out, allow_zero=True)
    for key in ("grid_step", "gamma_step"):
        if _is_number(params.get(key)) and params[key] > 1:
            out.append(f"params.{key}: must not exceed 1")
    if "expert_gammas" in params:
        _check_gammas("expert_gammas", params["expert_gammas"], out, increasing=True)
        if isinstance(params["expert_gammas"], list) and any(_is_number(v) and v >= 1 for v in params["expert_gammas"]):
            out.append("params.expert_gammas: expert discounts must be below 1")
    if "gammas" in params:
        K = len(params.get("expert_gammas", [])) or None
        _check_gammas("gammas", params["gammas"], out, increasing=algo is Algorithm.EXPERTS)
        if algo is Algorithm.EXPERTS and isinstance(params["gammas"], list):
            if any(_is_number(v) and v >= 1 for v in params["gammas"]):
                out.append("params.gammas: expert discounts must be below 1")
        elif K is not None and isinstance(params["gammas"], list) and len(params["gammas"]) != K:
            out.append("params.gammas: need one discount per expert")
    if algo is Algorithm.EXPERTS and "gammas" not in params:
        out.append("params.gammas: required for Experts")
    if algo is Algorithm.GEN_EVAL and "learned_reward" not in params:
        out.append("params.learned_reward: required for GenEval")
    for key in ("learned_reward", "reward"):
        if key in params and (not isinstance(params[key], list) or not all(_is_number(v) for v in params[key])):
            out.append(f"params.{key}: must be a list of numbers")
    if "regime" in params and params["regime"] not in [r.value for r in Regime]:
        out.append(f"params.regime: must be one of {', '.join(r.value for r in Regime)}")
    if "inner_method" in params and params["inner_method"] not in ("lbfgs", "gradient"):
        out.append("params.inner_method: must be 'lbfgs' or 'gradient'")
    if "gen_error" in params and not isinstance(params["gen_error"], bool):
        out.append("params.gen_error: must be a boolean")
    bo = params.get("bo")
    if bo is not None:
        if not isinstance(bo, dict):
            out.append("params.bo: must be an object")
        else:
            for k in sorted(set(bo) - _BO_KEYS):
                out.append(f"params.bo: unknown key {k!r}")
            for k in ("n_init", "max_iter", "n_candidates", "n_local", "n_restarts"):
                _check_positive(bo, k, out, integer=True)
            _check_positive(bo, "min_separation", out, allow_zero=True)
            if _is_int(bo.get("n_init")) and _is_int(bo.get("max_iter")) and bo["n_init"] > bo["max_iter"]:
                out.append("params.bo: n_init must not exceed max_iter")
    if algo is Algorithm.ID_SCAN:
        out.extend(_scan_size_violations(params))
    return out


def _scan_size_violations(params: dict) -> list:
    step = params.get("grid_step", 0.05)
    if not _is_number(step) or not 0 < step <= 1:
        return []
    K = len(params["k_range"]) if isinstance(params.get("k_range"), list) else len(params.get("expert_gammas", [0] * 3))
    n = int(round(1 / step)) + 1
    count = n**K
    limit = params.get("max_grid_points", MAX_GRID_POINTS)
    if _is_int(limit) and count > limit:
        return [
            f"params.grid_step: a K={K} scan at step {step} visits about {count} lattice points, "
            f"above max_grid_points={limit}; raise max_grid_points to run it"
        ]
    return []


# -- running -------------------------------------------------------------------


def _experts(cfg: ExperimentConfig, mdp):
    return make_experts(mdp, cfg.expert_gammas(), cfg.regime())


def _build_mdp(cfg: ExperimentConfig):
    mdp = cfg.domain.build()
    if "temperature" in cfg.params:
        mdp = mdp.replace(temperature=float(cfg.params["temperature"]))
    return mdp


def _gen_eval(cfg: ExperimentConfig, mdp, reward) -> dict:
    n_envs = int(cfg.params.get("n_envs", 100))
    return generalization_error(GenEvalConfig(cfg.domain, reward, mdp.reward, n_envs=n_envs, seed=cfg.seed), base=mdp).to_dict()


def _write_trace(out: Path, trace, K: int) -> None:
    artifacts.write_csv(out / "trace.csv", ["iteration", *artifacts.gamma_header(K), "score", "best_so_far"], trace.csv_rows())
    artifacts.write_json(out / "trace.json", trace.to_dict())


def _run_lp(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    mdp = _build_mdp(cfg)
    experts = _experts(cfg, mdp)
    artifacts.write_json(out / "experts.json", experts.to_dict())
    l1 = float(cfg.params.get("l1_penalty", L1_PENALTY))
    r_max = float(cfg.params.get("r_max", cfg.default_r_max()))
    naive = cfg.algorithm is Algorithm.NAIVE
    summary = {"algorithm": cfg.algorithm.value}
    if "gammas" in cfg.params:
        g = np.asarray(cfg.params["gammas"], dtype=float)
        try:
            sol = (naive_mplp if naive else mplp_inner)(mdp, experts, g, l1_penalty=l1, r_max=r_max)
        except InfeasibleGamma as exc:
            artifacts.write_json(out / "solution.json", {"status": "infeasible", "gammas": g, "message": str(exc)})
            return {**summary, "status": "infeasible"}
    else:
        fit = fit_mplp(mdp, experts, cfg.outer(), l1, r_max, naive=naive)
        _write_trace(out, fit.trace, len(experts))
        if fit.solution is None:
            artifacts.write_json(out / "solution.json", {"status": "infeasible", "message": "no feasible discounts found"})
            return {**summary, "status": "infeasible"}
        sol = fit.solution
        g = fit.gammas
    artifacts.write_json(out / "solution.json", sol.to_dict())
    if sol.status != "optimal" or sol.reward is None:
        return {**summary, "status": sol.status}
    gen = _gen_eval(cfg, mdp, sol.reward)
    artifacts.write_json(out / "gen_error.json", gen)
    summary.update(
        status=sol.status,
        gammas=g,
        order_recovered=order_recovery(g, cfg.expert_gammas()),
        reconstructs=reconstructs_experts(mdp, sol.reward, g, experts),
        gen_error_mean=gen["mean"],
    )
    return summary


def _run_mce(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    mdp = _build_mdp(cfg)
    experts = _experts(cfg, mdp)
    artifacts.write_json(out / "experts.json", experts.to_dict())
    inner = InnerConfig(
        epsilon=float(cfg.params.get("epsilon", EPSILON)),
        method=cfg.params.get("inner_method", "lbfgs"),
        **({"max_grad_steps": cfg.params["max_grad_steps"]} if "max_grad_steps" in cfg.params else {}),
    )
    r_max = float(cfg.params.get("r_max", cfg.default_r_max()))
    if "gammas" in cfg.params:
        g = np.asarray(cfg.params["gammas"], dtype=float)
        res = solve_inner_dual(mdp, experts, g, config=inner, r_max=r_max)
        dual, feasible, flags = res.dual, res.feasible, res.flags
    else:
        fit = fit_mpmce(mdp, experts, cfg.outer(), inner, r_max)
        _write_trace(out, fit.trace, len(experts))
        dual, feasible, flags, g = fit.solution, fit.feasible, fit.notes.get("flags", []), fit.gammas
    artifacts.write_json(out / "solution.json", {**dual.to_dict(), "feasible": feasible, "flags": flags})
    gen = _gen_eval(cfg, mdp, dual.reward)
    artifacts.write_json(out / "gen_error.json", gen)
    return {
        "algorithm": cfg.algorithm.value,
        "status": "feasible" if feasible else "infeasible",
        "gammas": g,
        "order_recovered": order_recovery(g, cfg.expert_gammas()),
        "gen_error_mean": gen["mean"],
    }


def _run_scan(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    mdp = _build_mdp(cfg)
    experts = _experts(cfg, mdp)
    if "k_range" in cfg.params:
        experts = experts.subset([int(k) for k in cfg.params["k_range"]])
    step = float(cfg.params.get("grid_step", 0.05))
    tol = float(cfg.params.get("rank_tol", 1e-8))
    points = lattice(len(experts), step)
    log.info("identifiability scan: %d lattice points", len(points))
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        reports = list(pool.map(lambda g: classify(mdp, experts, g, tol), points))
    results = list(zip(points, reports))
    header = [*artifacts.gamma_header(len(experts)), "rank_phi", "rank_phi_b", "classification"]
    gen = None
    if cfg.params.get("gen_error", False):
        n_envs = int(cfg.params.get("n_envs", 30))

        def err(item):
            g, rep = item
            if not rep.consistent:
                return None
            c = GenEvalConfig(cfg.domain, rep.reward_solution, mdp.reward, n_envs=n_envs, seed=cfg.seed)
            return tuple(map(float, g)), generalization_error(c, base=mdp).mean

        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            gen = dict(e for e in pool.map(err, results) if e is not None)
        header.append("gen_error")
    rows = scan_rows(results, gen)
    artifacts.write_csv(out / "scan.csv", header, rows)
    consistent = [list(map(float, g)) for g, rep in results if rep.consistent]
    return {
        "algorithm": cfg.algorithm.value,
        "n_points": len(points),
        "n_consistent": len(consistent),
        "consistent": consistent if len(consistent) <= 20 else consistent[:20],
        "n_borderline": sum(rep.borderline for _, rep in results),
    }


def _run_gen_eval(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    mdp = _build_mdp(cfg)
    reward = np.asarray(cfg.params["learned_reward"], dtype=float)
    if reward.shape != (mdp.n_states,):
        raise ValueError(f"learned_reward must have {mdp.n_states} entries")
    gen = _gen_eval(cfg, mdp, reward)
    artifacts.write_json(out / "gen_error.json", gen)
    return {"algorithm": cfg.algorithm.value, "gen_error_mean": gen["mean"], "gen_error_sd": gen["sd"]}


def _run_value_curves(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    mdp = _build_mdp(cfg)
    experts = make_experts(mdp, cfg.expert_gammas(), Regime(cfg.params.get("regime", "standard")))
    reward = np.asarray(cfg.params.get("reward", mdp.reward), dtype=float)
    step = float(cfg.params.get("gamma_step", 0.01))
    grid = np.round(np.linspace(0.0, 1.0, int(round(1 / step)) + 1), 12)
    rows = value_curves(mdp, reward, experts.policies, grid)
    artifacts.write_csv(out / "value_curves.csv", ["gamma", "policy_index", "value"], rows)
    return {"algorithm": cfg.algorithm.value, "n_rows": len(rows)}


def _run_experts(cfg: ExperimentConfig, out: Path, threads: int) -> dict:
    mdp = _build_mdp(cfg)
    experts = make_experts(mdp, cfg.params["gammas"], Regime(cfg.params.get("regime", "standard")))
    artifacts.write_json(out / "experts.json", experts.to_dict())
    return {"algorithm": cfg.algorithm.value, "n_experts": len(experts)}


_RUNNERS = {
    Algorithm.MPLP: _run_lp,
    Algorithm.NAIVE: _run_lp,
    Algorithm.MPMCE: _run_mce,
    Algorithm.ID_SCAN: _run_scan,
    Algorithm.GEN_EVAL: _run_gen_eval,
    Algorithm.VALUE_CURVES: _run_value_curves,
    Algorithm.EXPERTS: _run_experts,
}


def run(cfg: ExperimentConfig, out_dir=None, threads: int = 1) -> dict:
    """Execute one experiment and write its artifacts; returns the summary record."""
    out = Path(out_dir or cfg.output_dir or "out")
    out.mkdir(parents=True, exist_ok=True)
    artifacts.write_json(out / "config.json", cfg.to_dict())
    summary = _RUNNERS[cfg.algorithm](cfg, out, threads)
    artifacts.write_json(out / "summary.json", summary)
    return summary


# -- argument parsing -----------------------------------------------------------


def _load_config(path: str, seed_override: Optional[int]) -> dict:
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    if seed_override is not None and isinstance(d, dict):
        d["seed"] = seed_override
    return d


def _error_record(kind: str, message: str, violations: Optional[list] = None) -> dict:
    rec = {"error": kind, "message": message}
    if violations is not None:
        rec["violations"] = violations
    return rec


def _cmd_run(args) -> int:
    try:
        raw = _load_config(args.config, args.seed_override)
        cfg = ExperimentConfig.from_dict(raw)
    except ConfigError as exc:
        sys.stderr.write(artifacts.dumps(_error_record("config", "invalid configuration", exc.violations)))
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        sys.stderr.write(artifacts.dumps(_error_record("config", str(exc))))
        return EXIT_CONFIG
    out = Path(args.out or cfg.output_dir or "out")
    try:
        summary = run(cfg, out, threads=args.threads)
    except Exception as exc:
        log.debug("run failed", exc_info=True)
        out.mkdir(parents=True, exist_ok=True)
        rec = _error_record(type(exc).__name__, str(exc))
        rec["traceback"] = traceback.format_exc().splitlines()
        artifacts.write_json(out / "error.json", rec)
        sys.stderr.write(artifacts.dumps({k: rec[k] for k in ("error", "message")}))
        return EXIT_RUNTIME
    sys.stdout.write(artifacts.dumps(summary))
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        raw = _load_config(args.config, args.seed_override)
    except (OSError, json.JSONDecodeError) as exc:
        sys.stdout.write(artifacts.dumps({"violations": [str(exc)]}))
        return EXIT_CONFIG
    problems = validate(raw)
    sys.stdout.write(artifacts.dumps({"violations": problems}))
    return EXIT_OK if not problems else EXIT_CONFIG


def _cmd_export(args) -> int:
    try:
        spec = DomainSpec(_KIND_ALIASES.get(args.kind.lower(), args.kind), args.rows, args.cols)
    except ValueError as exc:
        sys.stderr.write(artifacts.dumps(_error_record("config", str(exc))))
        return EXIT_CONFIG
    text = artifacts.dumps(artifacts.mdp_to_dict(spec.build()))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mpirl", description="Multi-planning-horizon inverse reinforcement learning")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment")
    r.add_argument("--config", required=True)
    r.add_argument("--out", default=None, help="output directory (overrides output_dir)")
    r.add_argument("--seed-override", type=int, default=None)
    r.add_argument("--threads", type=int, default=1, help="bound on parallel evaluations")
    r.set_defaults(func=_cmd_run)

    v = sub.add_parser("validate", help="list every problem with a config")
    v.add_argument("--config", required=True)
    v.add_argument("--seed-override", type=int, default=None)
    v.set_defaults(func=_cmd_validate)

    d = sub.add_parser("domains", help="benchmark domains")
    dsub = d.add_subparsers(dest="domains_command", required=True)
    e = dsub.add_parser("export", help="write a benchmark MDP as JSON")
    e.add_argument("kind", help="toy, big_small or cliff")
    e.add_argument("--rows", type=int, default=None)
    e.add_argument("--cols", type=int, default=None)
    e.add_argument("--out", default=None, help="file to write (default stdout)")
    e.set_defaults(func=_cmd_export)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
