import json
from importlib import resources

import numpy as np
import pytest

from excised_ensemble import ensemble
from excised_ensemble.cli import main

E11_CFG = str(resources.files("excised_ensemble.data") / "e11.cfg")


def run(args):
    return main([str(a) for a in args])


class TestDensityCommand:
    def test_writes_expected_csv(self, tmp_path):
        out = tmp_path / "density.csv"
        summary = tmp_path / "s.json"
        code = run(
            ["density", "--n", 2, "--cutoff", 0.1, "--grid", 40, "--poles", 6,
             "--out", out, "--summary", summary]
        )
        assert code == 0
        lines = out.read_text().split("\n")
        assert lines[0] == "theta,r1"
        assert len([ln for ln in lines if ln]) == 41
        meta = json.loads(summary.read_text())
        assert meta["theta_inf"] == pytest.approx(np.arccos(1 - 0.1 / 8))
        assert 0 < meta["normalization_ratio"] <= 1

    def test_byte_identical_reruns(self, tmp_path):
        paths = [(tmp_path / f"d{i}.csv", tmp_path / f"s{i}.json") for i in (1, 2)]
        for out, summ in paths:
            run(["density", "--n", 2, "--cutoff", 0.1, "--grid", 25, "--out", out, "--summary", summ])
        assert paths[0][0].read_bytes() == paths[1][0].read_bytes()

    def test_log_cutoff_precedence(self, tmp_path):
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        run(["density", "--n", 2, "--cutoff", 99.0, "--cutoff-log", np.log(0.1),
             "--grid", 25, "--out", a, "--summary", tmp_path / "sa.json"])
        run(["density", "--n", 2, "--cutoff-log", np.log(0.1),
             "--grid", 25, "--out", b, "--summary", tmp_path / "sb.json"])
        assert a.read_bytes() == b.read_bytes()


class TestSampleCommands:
    def test_sample_outputs(self, tmp_path):
        out = tmp_path / "hist.csv"
        summary = tmp_path / "summary.json"
        dump = tmp_path / "spectra.csv"
        code = run(
            ["sample", "--n", 2, "--count", 500, "--cutoff", 0.1, "--seed", 7,
             "--out", out, "--summary", summary, "--dump-spectra", dump]
        )
        assert code == 0
        meta = json.loads(summary.read_text())
        assert meta["accepted"] == 500
        assert meta["seed"] == 7
        assert meta["parameters"]["count"] == 500
        assert "version" in meta
        assert dump.read_text().startswith("theta_1,theta_2,log_lambda")

    def test_deterministic_for_seed(self, tmp_path):
        outs = []
        for i in (1, 2):
            out = tmp_path / f"h{i}.csv"
            run(["sample", "--n", 2, "--count", 300, "--cutoff", 0.1, "--seed", 11,
                 "--out", out, "--summary", tmp_path / f"s{i}.json"])
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_first_eigenvalue_command(self, tmp_path):
        out = tmp_path / "first.csv"
        code = run(
            ["first-eigenvalue", "--n", 2, "--count", 400, "--cutoff", 0.1,
             "--seed", 3, "--scale", 1.118, "--out", out, "--summary", tmp_path / "s.json"]
        )
        assert code == 0
        hist = ensemble.read_histogram_csv(out)
        assert np.sum(hist.values() * hist.widths) == pytest.approx(1.0, abs=1e-9)

    def test_one_level_histogram_mode(self, tmp_path):
        out = tmp_path / "one.csv"
        run(["sample", "--n", 2, "--count", 400, "--seed", 3, "--histogram", "one-level",
             "--out", out, "--summary", tmp_path / "s.json"])
        rows = [line.split(",") for line in out.read_text().strip().split("\n")[1:]]
        integral = sum((float(r) - float(l)) * float(v) for l, r, v in rows)
        assert integral == pytest.approx(2.0, abs=1e-9)


class TestMomentsCommand:
    def test_values(self, tmp_path):
        out = tmp_path / "m.json"
        assert run(["moments", "--n", 2, "--s", 1.0, "--out", out]) == 0
        meta = json.loads(out.read_text())
        assert meta["moment"] == pytest.approx(2.0, rel=1e-12)
        assert meta["h_exact"] == pytest.approx(8 / (3 * np.pi**2), rel=1e-10)


class TestCutoffCommand:
    def test_e11_values(self, tmp_path):
        out = tmp_path / "cut.json"
        code = run(["cutoff", "--config", E11_CFG, "--x", 400000, "--out", out])
        assert code == 0
        meta = json.loads(out.read_text())
        assert meta["N_std"] == pytest.approx(12.26, abs=0.005)
        assert meta["N_eff"] == pytest.approx(2.14, abs=0.005)
        assert meta["c_std"] == pytest.approx(2.188, abs=5e-4)
        assert meta["c_eff"] == pytest.approx(0.5916, abs=5e-4)

    def test_x_defaults_to_config(self, tmp_path):
        out = tmp_path / "cut.json"
        run(["cutoff", "--config", E11_CFG, "--out", out])
        assert json.loads(out.read_text())["X_bound"] == 400000


class TestApCountCommand:
    def test_csv_and_euler(self, tmp_path):
        out = tmp_path / "ap.csv"
        summary = tmp_path / "ap.json"
        code = run(["ap-count", "--config", E11_CFG, "--p-max", 200, "--euler-s", -0.5,
                    "--out", out, "--summary", summary])
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "p,a_p,lambda_p"
        first = lines[1].split(",")
        assert first[0] == "2" and first[1] == "-2"
        meta = json.loads(summary.read_text())
        assert 0.5 < meta["a_s_value"] < 1.0


class TestCompareCommand:
    def _write_hist(self, path, seed):
        spectra, _ = ensemble.sample_excised(ensemble.ExcisionSpec(2, np.log(0.1)), 3000, seed=seed)
        hist = ensemble.first_eigenvalue_distribution(spectra, ensemble.default_bin_edges(60))
        ensemble.write_histogram_csv(hist, path)
        return hist

    def test_identical_inputs_give_zero(self, tmp_path):
        a = tmp_path / "a.csv"
        self._write_hist(a, seed=1)
        out = tmp_path / "cmp.json"
        assert run(["compare", "--a", a, "--b", a, "--out", out]) == 0
        assert json.loads(out.read_text())["cdf_distance"] == 0.0

    def test_matches_library_distance(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        ha = self._write_hist(a, seed=1)
        hb = self._write_hist(b, seed=2)
        out = tmp_path / "cmp.json"
        run(["compare", "--a", a, "--b", b, "--out", out])
        expected = ensemble.cdf_distance(ha, hb)
        assert json.loads(out.read_text())["cdf_distance"] == pytest.approx(expected, rel=1e-12)

    def test_one_column_sample_loader(self, tmp_path):
        rng = np.random.default_rng(0)
        samples = tmp_path / "zeros.csv"
        np.savetxt(samples, rng.uniform(0.2, 1.4, size=500))
        hist_path = tmp_path / "h.csv"
        self._write_hist(hist_path, seed=5)
        out = tmp_path / "cmp.json"
        code = run(["compare", "--a", hist_path, "--b", samples, "--b-kind", "samples", "--out", out])
        assert code == 0
        assert 0 < json.loads(out.read_text())["cdf_distance"] < 1


class TestErrorPaths:
    def test_usage_error_exit_code(self):
        with pytest.raises(SystemExit) as exc:
            run(["sample", "--n", 2])  # missing required --count
        assert exc.value.code == 2

    def test_domain_error_exit_code(self, tmp_path):
        # cutoff above the attainable maximum
        code = run(["sample", "--n", 1, "--count", 10, "--cutoff-log", 5.0,
                    "--out", tmp_path / "h.csv", "--summary", tmp_path / "s.json"])
        assert code == 1

    def test_unreadable_config(self, tmp_path):
        code = run(["cutoff", "--config", tmp_path / "missing.cfg", "--out", tmp_path / "c.json"])
        assert code == 2
