from pathlib import Path

import numpy as np
import pytest

from subpred import ExperimentConfig, chordal_distance, load_config, run_experiment, run_single
from subpred.experiment import default_model, prepare, run_trial


class TestConfig:
    def test_defaults(self):
        cfg = ExperimentConfig(model=default_model())
        assert (cfg.Tini, cfg.Tf, cfg.T, cfg.T_sim, cfg.N) == (4, 4, 30, 50, 100)
        assert cfg.sigma == 0.02
        assert len(cfg.kappas) == 100
        assert cfg.kappas[-1] == 0.9

    def test_kappa_grid_overrides_N(self):
        cfg = ExperimentConfig(model=default_model(), kappa_grid=(0.1, 0.2))
        assert cfg.N == 2
        assert cfg.kappas == (0.1, 0.2)

    def test_invalid_lengths_rejected(self):
        with pytest.raises(ValueError, match="shorter"):
            ExperimentConfig(model=default_model(), T=5)
        with pytest.raises(ValueError, match="T_sim"):
            ExperimentConfig(model=default_model(), T_sim=3)

    def test_load_config_file(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("Tini = 2\nTf = 4\nN = 10\nsigma = 0.0\noutput_dir = results\n")
        cfg = load_config(path)
        assert (cfg.Tini, cfg.Tf, cfg.N, cfg.sigma) == (2, 4, 10, 0.0)
        assert cfg.output_dir == str(tmp_path / "results")

    def test_load_config_with_model_file(self, tmp_path, example_model):
        from subpred import format_model

        (tmp_path / "model.txt").write_text(format_model(example_model))
        (tmp_path / "exp.cfg").write_text("model = model.txt\nN = 3\n")
        cfg = load_config(tmp_path / "exp.cfg")
        np.testing.assert_array_equal(cfg.model.A, example_model.A)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("bogus = 1\n")
        with pytest.raises(ValueError, match="unknown"):
            load_config(path)


class TestRunExperiment:
    def test_row_counts_and_columns(self, small_config):
        trials, summaries = run_experiment(small_config)
        steps = small_config.T_sim - small_config.Tini - small_config.Tf + 1
        assert len(trials) == small_config.N * steps
        assert len(summaries) == small_config.N
        out = Path(small_config.output_dir)
        header = (out / "trials.csv").read_text().splitlines()[0]
        assert header == "n,kappa,t,prediction_error,bound,sigma_min_Mhat"
        header = (out / "summary.csv").read_text().splitlines()[0]
        assert header == "kappa,avg_error,avg_bound"
        assert len((out / "summary.csv").read_text().splitlines()) == small_config.N + 1

    def test_noise_free_zero_distance_gives_zero_error(self, tmp_path, example_model):
        cfg = ExperimentConfig(
            model=example_model,
            Tini=4,
            Tf=2,
            sigma=0.0,
            kappa_grid=(0.0,),
            output_dir=str(tmp_path / "o"),
        )
        _, summaries = run_experiment(cfg)
        assert summaries[0].avg_error <= 1e-9

    def test_bound_covers_error_when_certified(self, small_config):
        trials, _ = run_experiment(small_config, write=False)
        certified = [t for t in trials if t.bound is not None]
        assert certified, "expected at least some certified rows"
        for t in certified:
            assert t.bound >= t.prediction_error - 1e-12

    def test_determinism_byte_identical(self, tmp_path, example_model):
        texts = []
        for run in range(2):
            cfg = ExperimentConfig(
                model=example_model,
                Tini=2,
                Tf=2,
                T_sim=16,
                N=5,
                output_dir=str(tmp_path / f"run{run}"),
            )
            run_experiment(cfg)
            out = Path(cfg.output_dir)
            texts.append(
                ((out / "trials.csv").read_bytes(), (out / "summary.csv").read_bytes())
            )
        assert texts[0] == texts[1]

    def test_parallel_matches_serial(self, tmp_path, example_model):
        texts = []
        for jobs, name in ((1, "serial"), (3, "parallel")):
            cfg = ExperimentConfig(
                model=example_model,
                Tini=2,
                Tf=2,
                T_sim=16,
                N=6,
                output_dir=str(tmp_path / name),
            )
            run_experiment(cfg, jobs=jobs)
            out = Path(cfg.output_dir)
            texts.append(
                ((out / "trials.csv").read_bytes(), (out / "summary.csv").read_bytes())
            )
        assert texts[0] == texts[1]

    def test_kappa_measured_matches_family_member(self, small_config):
        workspace = prepare(small_config)
        out = run_trial(workspace, 4)
        assert abs(out.kappa - chordal_distance(workspace.basis, out.basis)) <= 1e-12
        assert abs(out.kappa - small_config.kappas[3]) <= 1e-6

    def test_trial_index_validated(self, small_config):
        workspace = prepare(small_config)
        with pytest.raises(ValueError, match="out of range"):
            run_trial(workspace, small_config.N + 1)

    def test_multichannel_pipeline(self, tmp_path):
        from helpers import random_model

        model = random_model(np.random.default_rng(8), n=2, m=2, p=2)
        cfg = ExperimentConfig(
            model=model, Tini=2, Tf=2, T=40, T_sim=12, N=3, kappa_max=0.2,
            output_dir=str(tmp_path / "mimo"),
        )
        trials, summaries = run_experiment(cfg)
        assert len(summaries) == 3
        assert all(t.prediction_error >= 0 for t in trials)
        records, _ = run_single(cfg, n=1)
        single = (tmp_path / "mimo" / "single_1.csv").read_text().splitlines()
        assert single[0] == "t,baseline_0,baseline_1,perturbed_0,perturbed_1,error,bound"
        assert len(records[0].baseline) == 2


class TestRunSingle:
    def test_error_column_matches_difference(self, small_config):
        records, _ = run_single(small_config, n=3, write=False)
        for rec in records:
            np.testing.assert_allclose(
                rec.error, abs(float(rec.baseline[0] - rec.perturbed[0])), atol=1e-12
            )

    def test_bound_covers_error_rowwise(self, small_config):
        records, _ = run_single(small_config, n=2, write=False)
        for rec in records:
            if rec.bound is not None:
                assert rec.bound >= rec.error - 1e-12

    def test_csv_schema(self, small_config):
        run_single(small_config, n=1)
        out = Path(small_config.output_dir) / "single_1.csv"
        lines = out.read_text().splitlines()
        assert lines[0] == "t,baseline,perturbed,error,bound"
        steps = small_config.T_sim - small_config.Tini - small_config.Tf + 1
        assert len(lines) == steps + 1
        assert lines[1].split(",")[0] == str(small_config.Tini)

    def test_reported_kappa_recoverable(self, small_config):
        _, kappa = run_single(small_config, n=5, write=False)
        workspace = prepare(small_config)
        out = run_trial(workspace, 5)
        assert abs(kappa - out.kappa) <= 1e-15
