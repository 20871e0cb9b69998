import json
import os
import subprocess
import sys

import numpy as np
import pytest

from projvol.harness import (
    ConfigError,
    ExperimentConfig,
    emit_csv,
    emit_json,
    fit_regret_constant,
    regret_model,
    resolve_delta_rho,
    run_experiment,
    run_replicated,
)
from projvol.projected_volume import analysis_delta, default_delta


class TestConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(d=0, epsilon=0.1).validate()
        with pytest.raises(ConfigError):
            ExperimentConfig(d=2, epsilon=1.5).validate()
        with pytest.raises(ConfigError):
            ExperimentConfig(d=2, epsilon=0.1, learner="nope").validate()
        with pytest.raises(ConfigError):
            ExperimentConfig(d=2, epsilon=0.1, delta_policy="explicit").validate()
        ExperimentConfig(d=2, epsilon=0.1).validate()

    def test_delta_policies(self):
        cfg = ExperimentConfig(d=3, epsilon=0.1)
        delta, rho, adapt = resolve_delta_rho(cfg)
        assert delta == pytest.approx(default_delta(3, 0.1))
        assert not adapt
        cfg2 = ExperimentConfig(d=3, epsilon=0.1, delta_policy="paper_main")
        delta2, _, adapt2 = resolve_delta_rho(cfg2)
        assert delta2 == pytest.approx(analysis_delta(3, 0.1))
        assert adapt2
        cfg3 = ExperimentConfig(d=3, epsilon=0.1, delta_policy="explicit", delta=0.02)
        assert resolve_delta_rho(cfg3)[0] == 0.02


class TestRunExperiment:
    def test_d1_halving_regret(self):
        # derived: 1-D halving from [-1, 1] at eps = 0.25 errs at most 3 times
        cfg = ExperimentConfig(d=1, epsilon=0.25, learner="projected_volume",
                               adversary="fixed_random", max_rounds=200, seed=0)
        found = []
        for seed in range(5):
            cfg = ExperimentConfig(d=1, epsilon=0.25, learner="projected_volume",
                                   adversary="fixed_random", max_rounds=200, seed=seed)
            rec = run_experiment(cfg)
            found.append(rec.summary["total_regret"])
            assert rec.summary["soundness_violations"] == 0
        assert max(found) <= 3

    def test_learner_never_sees_theta(self):
        # interface shape: the learner object has no access to the environment
        import projvol.projected_volume as pv
        import inspect

        sig = inspect.signature(pv.ProjectedVolumeLearner.observe)
        assert set(sig.parameters) == {"self", "u", "x", "side"}

    def test_adaptive_defers_and_recounts(self):
        cfg = ExperimentConfig(d=2, epsilon=2**-5, learner="projected_volume",
                               adversary="round_robin_adaptive", max_rounds=300, seed=1)
        rec = run_experiment(cfg)
        assert rec.summary["theta_star"] is not None
        assert all(row.mistake in (True, False) for row in rec.rows)
        assert rec.summary["total_regret"] == sum(1 for r in rec.rows if r.mistake)

    def test_replicas_deterministic_fold(self):
        cfg = ExperimentConfig(d=2, epsilon=0.1, learner="projected_volume",
                               adversary="fixed_random", max_rounds=150, seed=3, replicas=3)
        recs, agg = run_replicated(cfg)
        assert len(recs) == 3
        assert agg["regret_per_replica"] == [r.summary["total_regret"] for r in recs]
        recs2, agg2 = run_replicated(cfg)
        assert agg2 == agg

    def test_ellipsoid_and_centroid_run(self):
        for learner in ("ellipsoid", "centroid"):
            cfg = ExperimentConfig(d=2, epsilon=0.1, learner=learner,
                                   adversary="fixed_random", max_rounds=120, seed=2)
            rec = run_experiment(cfg)
            assert rec.summary["total_regret"] < 120
            assert rec.summary["soundness_violations"] == 0


class TestEmitters:
    def test_csv_header_and_consistency(self, tmp_path):
        cfg = ExperimentConfig(d=2, epsilon=0.1, max_rounds=3, seed=5,
                               learner="ellipsoid", adversary="fixed_random")
        rec = run_experiment(cfg)
        csv_path = tmp_path / "r.csv"
        json_path = tmp_path / "r.json"
        text = emit_csv(rec, csv_path)
        emit_json(rec, json_path)
        lines = text.strip().split("\n")
        assert lines[0] == "t,u,x,side,mistake,n_small,n_t_flag,min_width,phi_mc"
        assert len(lines) == 1 + 3
        payload = json.loads(json_path.read_text())
        assert payload["schema"] == "v1"
        assert payload["total_regret"] == sum(int(l.split(",")[4]) for l in lines[1:])

    def test_empty_run_header_only(self, tmp_path):
        cfg = ExperimentConfig(d=2, epsilon=0.1, max_rounds=5, seed=5,
                               learner="centroid", adversary="simplex_counterexample")
        rec = run_experiment(cfg)
        rec.rows = []
        text = emit_csv(rec, tmp_path / "empty.csv")
        assert text == "t,u,x,side,mistake,n_small,n_t_flag,min_width,phi_mc\n"

    def test_byte_identical_reruns(self, tmp_path):
        cfg = ExperimentConfig(d=2, epsilon=0.05, learner="projected_volume",
                               adversary="greedy_width", max_rounds=120, seed=7)
        t1 = emit_csv(run_experiment(cfg), tmp_path / "a.csv")
        t2 = emit_csv(run_experiment(cfg), tmp_path / "b.csv")
        assert t1 == t2
        j1 = emit_json(run_experiment(cfg), tmp_path / "a.json")
        j2 = emit_json(run_experiment(cfg), tmp_path / "b.json")
        assert j1 == j2

    def test_io_error_has_path_context(self):
        cfg = ExperimentConfig(d=1, epsilon=0.2, max_rounds=2, seed=0)
        rec = run_experiment(cfg)
        with pytest.raises(OSError, match="no/such/dir"):
            emit_csv(rec, "/no/such/dir/x.csv")


class TestFit:
    def test_exact_synthetic_recovery(self):
        pts = [(d, 0.01, 7.0 * d * np.log(d / 0.01)) for d in (2, 3, 4, 5)]
        C, resid = fit_regret_constant(pts, "d_log")
        assert C == pytest.approx(7.0, abs=1e-9)
        assert resid == pytest.approx(0.0, abs=1e-9)

    def test_model_mismatch_flags_large_residual(self):
        pts = [(d, 0.01, 3.0 * d * d * np.log(1 / (0.01 * np.sqrt(d)))) for d in (2, 3, 4, 5, 6)]
        _, resid_right = fit_regret_constant(pts, "d2_log")
        _, resid_wrong = fit_regret_constant(pts, "d_log")
        assert resid_right < 1e-9
        assert resid_wrong > 10 * max(resid_right, 1e-12)

    def test_needs_four_points(self):
        with pytest.raises(ConfigError):
            fit_regret_constant([(2, 0.1, 5.0)] * 3, "d_log")

    def test_model_values(self):
        assert regret_model("d_log", 2, 0.1) == pytest.approx(2 * np.log(20))
        assert regret_model("d2_log", 4, 0.01) == pytest.approx(16 * np.log(1 / (0.01 * 2)))


class TestCli:
    def _run(self, *args):
        return subprocess.run([sys.executable, "-m", "projvol.cli", *args],
                              capture_output=True, text=True)

    def test_run_writes_outputs(self, tmp_path):
        out = tmp_path / "demo"
        res = self._run("run", "--d", "1", "--epsilon", "0.25", "--rounds", "40",
                        "--seed", "3", "--out", str(out))
        assert res.returncode == 0, res.stderr
        assert out.with_suffix(".csv").exists() and out.with_suffix(".json").exists()

    def test_config_file_with_flag_override(self, tmp_path):
        cfgfile = tmp_path / "exp.cfg"
        cfgfile.write_text("d=1\nepsilon=0.25\nrounds=30\nseed=9\n")
        out = tmp_path / "demo2"
        res = self._run("run", "--config", str(cfgfile), "--seed", "11", "--out", str(out))
        assert res.returncode == 0, res.stderr
        payload = json.loads(out.with_suffix(".json").read_text())
        assert payload["config"]["seed"] == 11  # flag wins
        assert payload["config"]["max_rounds"] == 30

    def test_config_error_exit_code(self):
        res = self._run("run", "--d", "99", "--epsilon", "0.1")
        assert res.returncode == 2
        assert "config error" in res.stderr

    def test_sweep_and_fit(self, tmp_path):
        out = tmp_path / "sweep"
        res = self._run("sweep", "--d", "1,2", "--epsilon", "0.2", "--seeds", "2",
                        "--rounds", "120", "--out", str(out),
                        "--sampler-n", "300", "--sampler-burn-in", "150")
        assert res.returncode == 0, res.stderr
        summary = json.loads((out / "sweep_summary.json").read_text())
        assert len(summary["runs"]) == 4
        assert (out / "sweep_summary.csv").exists()
        res2 = self._run("fit", "--sweep-dir", str(out))
        assert res2.returncode == 0, res2.stderr
        assert "preferred" in res2.stdout

    def test_fit_missing_dir_is_config_error(self, tmp_path):
        res = self._run("fit", "--sweep-dir", str(tmp_path / "nope"))
        assert res.returncode == 2


class TestPhiTelemetry:
    def test_phi_column_populated_when_on(self):
        cfg = ExperimentConfig(d=2, epsilon=0.1, learner="projected_volume",
                               adversary="fixed_random", max_rounds=25, seed=1,
                               phi_on=True, phi_samples=1500)
        rec = run_experiment(cfg)
        vals = [row.phi_mc for row in rec.rows if row.phi_mc is not None]
        assert vals, "phi telemetry missing"
        assert all(v >= 0 for v in vals)

    def test_phi_off_by_default(self):
        cfg = ExperimentConfig(d=2, epsilon=0.1, max_rounds=5, seed=1)
        rec = run_experiment(cfg)
        assert all(row.phi_mc is None for row in rec.rows)
