import json

import numpy as np
import pytest

from mpirl import artifacts
from mpirl.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, ExperimentConfig, main, run, validate
from mpirl.domains import ExpertSet


def cfg_file(tmp_path, d, name="config.json"):
    p = tmp_path / name
    p.write_text(json.dumps(d))
    return str(p)


def files(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


TOY_MPLP = {"domain": {"kind": "toy"}, "algorithm": "MplpIrl", "params": {}, "seed": 0}


class TestValidate:
    def test_valid_config_is_clean(self):
        assert validate(TOY_MPLP) == []

    def test_duplicated_discounts(self):
        d = {**TOY_MPLP, "params": {"gammas": [0.5, 0.5], "expert_gammas": [0.2, 0.9]}}
        assert any("distinct" in v for v in validate(d))

    def test_negative_n_envs(self):
        d = {**TOY_MPLP, "params": {"n_envs": -3}}
        assert any("n_envs" in v for v in validate(d))

    def test_reports_every_violation(self):
        d = {"domain": {"kind": "maze", "size": 3}, "algorithm": "MplpIrl", "params": {"n_envs": 0, "foo": 1}, "extra": 1}
        problems = validate(d)
        for needle in ("extra", "size", "domain.kind", "n_envs", "foo"):
            assert any(needle in v for v in problems), needle

    def test_required_per_algorithm(self):
        assert any("gammas" in v for v in validate({"domain": {"kind": "toy"}, "algorithm": "Experts"}))
        assert any("learned_reward" in v for v in validate({"domain": {"kind": "toy"}, "algorithm": "GenEval"}))

    def test_large_scan_is_guarded(self):
        d = {"domain": {"kind": "toy"}, "algorithm": "IdScan", "params": {"grid_step": 0.01}}
        assert any("max_grid_points" in v for v in validate(d))
        d["params"]["max_grid_points"] = 2_000_000
        assert validate(d) == []

    def test_cli_exit_codes(self, tmp_path):
        assert main(["validate", "--config", cfg_file(tmp_path, TOY_MPLP)]) == EXIT_OK
        bad = cfg_file(tmp_path, {**TOY_MPLP, "params": {"n_envs": -1}}, "bad.json")
        assert main(["validate", "--config", bad]) == EXIT_CONFIG
        assert main(["run", "--config", bad, "--out", str(tmp_path / "o")]) == EXIT_CONFIG

    def test_config_round_trip(self):
        cfg = ExperimentConfig.from_dict({**TOY_MPLP, "domain": {"kind": "BigSmall"}})
        again = ExperimentConfig.from_dict(cfg.to_dict())
        assert again == cfg


class TestRun:
    def test_experts_are_one_hot(self, tmp_path):
        d = {"domain": {"kind": "toy"}, "algorithm": "Experts", "params": {"gammas": [0.2, 0.6, 0.95]}}
        assert main(["run", "--config", cfg_file(tmp_path, d), "--out", str(tmp_path / "o")]) == EXIT_OK
        E = ExpertSet.from_dict(artifacts.read_json(tmp_path / "o" / "experts.json"))
        assert len(E) == 3
        for p in E.policies:
            assert set(np.unique(p)) <= {0.0, 1.0}
            assert np.all(p.sum(axis=1) == 1)

    def test_idscan_single_consistent_point(self, tmp_path):
        d = {"domain": {"kind": "toy"}, "algorithm": "IdScan", "params": {"grid_step": 0.05}}
        assert main(["run", "--config", cfg_file(tmp_path, d), "--out", str(tmp_path / "o"), "--threads", "2"]) == EXIT_OK
        header, rows = artifacts.read_csv(tmp_path / "o" / "scan.csv")
        assert header == ["gamma_1", "gamma_2", "gamma_3", "rank_phi", "rank_phi_b", "classification"]
        consistent = [r for r in rows if r[5] != "NoReward"]
        assert len(consistent) == 1
        assert np.allclose([float(v) for v in consistent[0][:3]], [0.3, 0.5, 0.95])

    def test_fixed_gammas_lp(self, tmp_path):
        d = {**TOY_MPLP, "params": {"gammas": [0.0, 0.35, 1.0], "n_envs": 10}}
        summary = run(ExperimentConfig.from_dict(d), tmp_path)
        assert summary["status"] == "optimal"
        assert summary["order_recovered"] and all(summary["reconstructs"])
        sol = artifacts.read_json(tmp_path / "solution.json")
        assert sol["reward"][2] > sol["reward"][1]
        assert {"config.json", "summary.json", "solution.json", "experts.json", "gen_error.json"} <= set(files(tmp_path))

    def test_infeasible_is_an_artifact_not_a_crash(self, tmp_path):
        d = {"domain": {"kind": "toy"}, "algorithm": "MpmceIrl", "params": {"gammas": [0.95, 0.5, 0.3], "epsilon": 1e-9, "n_envs": 3}}
        assert main(["run", "--config", cfg_file(tmp_path, d), "--out", str(tmp_path / "o")]) == EXIT_OK
        assert artifacts.read_json(tmp_path / "o" / "solution.json")["feasible"] is False
        assert artifacts.read_json(tmp_path / "o" / "summary.json")["status"] == "infeasible"

    def test_runtime_failure_writes_error_record(self, tmp_path):
        d = {"domain": {"kind": "toy"}, "algorithm": "GenEval", "params": {"learned_reward": [1.0, 2.0]}}
        assert main(["run", "--config", cfg_file(tmp_path, d), "--out", str(tmp_path / "o")]) == EXIT_RUNTIME
        rec = artifacts.read_json(tmp_path / "o" / "error.json")
        assert rec["error"] == "ValueError" and "learned_reward" in rec["message"]

    @pytest.mark.parametrize(
        "d",
        [
            {"domain": {"kind": "toy"}, "algorithm": "MplpIrl", "params": {"bo": {"n_init": 3, "max_iter": 6}, "n_envs": 5}},
            {"domain": {"kind": "toy"}, "algorithm": "MpmceIrl", "params": {"bo": {"n_init": 2, "max_iter": 3}, "n_envs": 5}},
            {"domain": {"kind": "cliff"}, "algorithm": "ValueCurves", "params": {"gamma_step": 0.1}},
        ],
        ids=["mplp", "mpmce", "curves"],
    )
    def test_byte_identical_reruns(self, tmp_path, d):
        cfg = cfg_file(tmp_path, {**d, "seed": 3})
        assert main(["run", "--config", cfg, "--out", str(tmp_path / "a")]) == EXIT_OK
        assert main(["run", "--config", cfg, "--out", str(tmp_path / "b")]) == EXIT_OK
        a, b = files(tmp_path / "a"), files(tmp_path / "b")
        assert a == b
        for name, blob in a.items():
            if name.endswith(".json"):
                json.loads(blob)

    def test_seed_override(self, tmp_path):
        d = {"domain": {"kind": "toy"}, "algorithm": "GenEval", "params": {"learned_reward": [0, 6, 7, 10], "n_envs": 3}}
        main(["run", "--config", cfg_file(tmp_path, d), "--out", str(tmp_path / "o"), "--seed-override", "9"])
        assert artifacts.read_json(tmp_path / "o" / "config.json")["seed"] == 9


class TestExport:
    def test_export_round_trips(self, tmp_path, cliff):
        out = tmp_path / "cliff.json"
        assert main(["domains", "export", "cliff", "--out", str(out)]) == EXIT_OK
        back = artifacts.load_mdp(out)
        assert np.array_equal(back.transitions, cliff.transitions)
        assert np.array_equal(back.reward, cliff.reward)

    def test_unknown_kind(self, tmp_path):
        assert main(["domains", "export", "maze"]) == EXIT_CONFIG
