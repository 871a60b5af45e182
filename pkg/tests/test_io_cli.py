"""File formats and the command-line workflow."""

import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from hamid.cli import main
from hamid.coherence import add_noise, simulate_trace
from hamid.errors import FileFormatError
from hamid.io import ModelFile, load_model, load_trace, save_model, save_trace

CHAIN3 = {
    "n": 3,
    "terms": [
        {"pauli": "ZII", "param": "omega1", "scale": 0.5},
        {"pauli": "IZI", "param": "omega2", "scale": 0.5},
        {"pauli": "IIZ", "param": "omega3", "scale": 0.5},
        {"pauli": "XXI", "param": "delta1", "scale": 0.5},
        {"pauli": "YYI", "param": "delta1", "scale": 0.5},
        {"pauli": "IXX", "param": "delta2", "scale": 0.5},
        {"pauli": "IYY", "param": "delta2", "scale": 0.5},
    ],
    "observables": ["XII"],
    "initial_state": {"plus_i_qubit": 0},
    "parameters": {"omega1": 1.3, "omega2": 2.4, "omega3": 1.7,
                   "delta1": 4.3, "delta2": 5.2},
}


@pytest.fixture()
def chain3_file(tmp_path):
    path = tmp_path / "chain3.json"
    path.write_text(json.dumps(CHAIN3))
    return path


class TestModelFile:
    def test_load_parses_structure(self, chain3_file):
        mf = load_model(chain3_file)
        assert mf.model.n == 3
        assert mf.model.parameter_names == ("omega1", "omega2", "omega3",
                                            "delta1", "delta2")
        assert len(mf.model.terms) == 7
        assert [el.label for el in mf.observables] == ["XII"]
        assert mf.model.nominal["delta2"] == 5.2

    def test_round_trip(self, chain3_file, tmp_path):
        mf = load_model(chain3_file)
        out = tmp_path / "copy.json"
        save_model(mf, out)
        again = load_model(out)
        assert again.model == mf.model
        assert again.observables == mf.observables
        assert again.initial_state == mf.initial_state

    def test_initial_state_variants(self, tmp_path):
        doc = dict(CHAIN3)
        for spec, check in [
            ({"plus_qubit": 1}, lambda v: abs(v[0] - 1 / np.sqrt(2)) < 1e-12),
            ({"basis": "010"}, lambda v: v[2] == 1.0),
            ({"amplitudes": [[1, 0]] + [[0, 0]] * 7}, lambda v: v[0] == 1.0),
        ]:
            doc["initial_state"] = spec
            path = tmp_path / "m.json"
            path.write_text(json.dumps(doc))
            psi = load_model(path).psi0()
            assert check(psi)

    def test_malformed_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(FileFormatError):
            load_model(path)
        path.write_text(json.dumps({"n": 2, "terms": [
            {"pauli": "XX"}], "observables": ["XI"]}))
        with pytest.raises(FileFormatError):
            load_model(path)


class TestTraceFile:
    def test_round_trip_bitwise(self, bench_trace, tmp_path):
        noisy = add_noise(bench_trace, 0.03, seed=9)
        p1 = tmp_path / "a.csv"
        p2 = tmp_path / "b.csv"
        save_trace(noisy, p1)
        loaded = load_trace(p1)
        assert loaded.dt == noisy.dt
        assert loaded.noise_sigma == 0.03
        assert loaded.seed == 9
        assert np.array_equal(loaded.samples, noisy.samples)
        save_trace(loaded, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_header_and_metadata(self, bench_trace, tmp_path):
        path = tmp_path / "t.csv"
        save_trace(bench_trace, path)
        text = path.read_text().splitlines()
        assert text[0].startswith("#")
        assert any(line.startswith("# dt =") for line in text)
        header = next(l for l in text if not l.startswith("#"))
        assert header == "t,y1"

    def test_missing_dt_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("t,y1\n0,1\n1,2\n")
        with pytest.raises(FileFormatError):
            load_trace(path)


class TestCli:
    def run(self, *args):
        return main([str(a) for a in args])

    def test_simulate_identify_round_trip(self, chain3_file, tmp_path, capsys):
        trace = tmp_path / "clean.csv"
        report = tmp_path / "report.json"
        assert self.run("simulate", "--model", chain3_file, "--dt", 0.0598,
                        "--duration", 20, "--out", trace) == 0
        assert len(load_trace(trace).samples) == 335
        code = self.run("identify", "--model", chain3_file, "--trace", trace,
                        "--seed", 0, "--starts", 40, "--out", report)
        assert code == 0
        doc = json.loads(report.read_text())
        assert doc["n_sigma"] == 6
        assert doc["n_classes"] == 1
        ests = doc["classes"][0]["estimates"]
        assert len(ests) == 4
        for est in ests:
            pars = est["parameters"]
            assert pars["omega1"] == pytest.approx(1.3, rel=1e-6)
            assert abs(pars["delta1"]) == pytest.approx(4.3, rel=1e-6)

    def test_simulate_deterministic(self, chain3_file, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            self.run("simulate", "--model", chain3_file, "--dt", 0.1,
                     "--duration", 5, "--sigma", 0.05, "--seed", 7,
                     "--out", out)
        assert a.read_bytes() == b.read_bytes()

    def test_identify_deterministic(self, chain3_file, tmp_path):
        trace = tmp_path / "t.csv"
        self.run("simulate", "--model", chain3_file, "--dt", 0.0598,
                 "--duration", 20, "--sigma", 0.02, "--seed", 3,
                 "--out", trace)
        reports = []
        for name in ("r1.json", "r2.json"):
            out = tmp_path / name
            self.run("identify", "--model", chain3_file, "--trace", trace,
                     "--seed", 5, "--starts", 24, "--rank", 6, "--out", out)
            reports.append(out.read_bytes())
        assert reports[0] == reports[1]

    def test_identify_dump_singular_values(self, chain3_file, tmp_path):
        trace = tmp_path / "t.csv"
        sv = tmp_path / "sv.csv"
        self.run("simulate", "--model", chain3_file, "--dt", 0.0598,
                 "--duration", 20, "--out", trace)
        self.run("identify", "--model", chain3_file, "--trace", trace,
                 "--dump-singular-values", sv)
        rows = sv.read_text().splitlines()
        assert rows[0] == "index,singular_value"
        assert len(rows) == 168

    def test_structural_mismatch_exit_code(self, tmp_path):
        # data from a chain whose coupling is truly zero: the measured end
        # evolves as a lone qubit and the Hankel rank stays at 2, not 4
        doc = {
            "n": 2,
            "terms": [
                {"pauli": "ZI", "param": "omega1", "scale": 0.5},
                {"pauli": "IZ", "param": "omega2", "scale": 0.5},
                {"pauli": "XX", "value": 0.0},
                {"pauli": "YY", "value": 0.0},
            ],
            "observables": ["XI"],
            "initial_state": {"plus_i_qubit": 0},
            "parameters": {"omega1": 1.1, "omega2": 0.8},
        }
        model = tmp_path / "m.json"
        model.write_text(json.dumps(doc))
        trace = tmp_path / "t.csv"
        assert self.run("simulate", "--model", model, "--dt", 0.2,
                        "--duration", 30, "--out", trace) == 0
        assert self.run("identify", "--model", model, "--trace", trace) == 3

    def test_no_solution_exit_code(self, chain3_file, tmp_path):
        trace = tmp_path / "t.csv"
        self.run("simulate", "--model", chain3_file, "--dt", 0.0598,
                 "--duration", 20, "--out", trace)
        # an impossible acceptance threshold leaves no admissible solution
        code = self.run("identify", "--model", chain3_file, "--trace", trace,
                        "--starts", 4, "--tol-residual", 1e-18)
        assert code == 2

    def test_parse_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        assert self.run("identify", "--model", bad,
                        "--trace", "nonexistent.csv") == 4

    def test_inspect_output(self, chain3_file, capsys):
        assert self.run("inspect", "--model", chain3_file) == 0
        out = capsys.readouterr().out
        assert "K = 6" in out
        for label in ("XII", "YII", "ZXI", "ZYI", "ZZX", "ZZY"):
            assert label in out
        assert "dt <" in out

    def test_inspect_warns_unidentifiable(self, tmp_path, capsys):
        doc = {
            "n": 2,
            "terms": [
                {"pauli": "ZI", "param": "a", "scale": 0.5},
                {"pauli": "IZ", "param": "b", "scale": 0.5},
            ],
            "observables": ["XI"],
            "initial_state": {"plus_i_qubit": 0},
        }
        model = tmp_path / "m.json"
        model.write_text(json.dumps(doc))
        assert self.run("inspect", "--model", model) == 0
        out = capsys.readouterr().out
        assert "WARNING" in out and "'b'" in out


class TestRobustnessCommand:
    def test_small_study_runs_and_is_deterministic(self, chain3_file,
                                                   tmp_path):
        outs = []
        for name in ("ra", "rb"):
            prefix = tmp_path / name
            code = main(["robustness", "--model", str(chain3_file),
                         "--dt", "0.0598", "--duration", "20",
                         "--sigma", "0.0,0.05", "--trajectories", "10",
                         "--seed", "21", "--starts", "12",
                         "--workers", "2", "--out", str(prefix)])
            assert code == 0
            outs.append((prefix.parent / (name + ".json")).read_bytes())
            for suffix in ("_rel_err_mean.csv", "_std.csv", "_boxplot.csv"):
                assert (prefix.parent / (name + suffix)).exists()
        assert outs[0] == outs[1]

    def test_zero_noise_gives_zero_spread(self, chain3_file, tmp_path):
        prefix = tmp_path / "r0"
        main(["robustness", "--model", str(chain3_file),
              "--dt", "0.0598", "--duration", "20", "--sigma", "0.0",
              "--trajectories", "10", "--seed", "2", "--starts", "12",
              "--workers", "1", "--out", str(prefix)])
        doc = json.loads((tmp_path / "r0.json").read_text())
        stats = doc["stats"]["0.0"]
        for name, cell in stats.items():
            assert abs(cell["std"]) < 1e-9
            assert abs(cell["rel_err_pct"]) < 1e-6
