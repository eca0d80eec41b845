import csv
import hashlib
import json

import pytest

from gamelab.cli import main


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


class TestEnumerateCommand:
    def test_identity_3_count(self, tmp_path):
        assert main(["enumerate", "--identity", "3",
                     "--output-dir", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "enumerate.json").read_text())
        assert report["count"] == 7

    def test_rps_unique_uniform(self, tmp_path):
        assert main(["enumerate", "--rps", "0", "0",
                     "--output-dir", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "enumerate.json").read_text())
        assert report["count"] == 1
        assert report["equilibria"][0]["x"] == ["1/3", "1/3", "1/3"]

    def test_random_with_law_assertion(self, tmp_path):
        assert main(["enumerate", "--random", "2x2", "--trials", "20",
                     "--seed", "3", "--assert-laws",
                     "--output-dir", str(tmp_path)]) == 0
        summary = json.loads((tmp_path / "enumerate.json").read_text())
        assert summary["trials"] == 20
        assert summary["law_failures"] == []
        assert summary["max_count"] <= 3

    def test_game_file_input(self, tmp_path):
        game = {"rows": 2, "cols": 2, "payoff_a": [[1, 0], [0, 1]],
                "payoff_b": [[1, 0], [0, 1]]}
        path = tmp_path / "game.json"
        path.write_text(json.dumps(game))
        assert main(["enumerate", "--game", str(path),
                     "--output-dir", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "enumerate.json").read_text())
        assert report["count"] == 3


class TestExitCodes:
    def test_bounds_violation_is_3(self, tmp_path):
        assert main(["enumerate", "--identity", "0",
                     "--output-dir", str(tmp_path)]) == 3

    def test_size_violation_is_4(self, tmp_path):
        assert main(["enumerate", "--random", "9x9", "--trials", "1",
                     "--output-dir", str(tmp_path)]) == 4

    def test_domain_violation_is_3(self, tmp_path):
        assert main(["minority", "--n", "4", "--m", "2",
                     "--output-dir", str(tmp_path)]) == 3

    def test_parse_error_is_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["simulate", "--eps", "0.1", "-0.1",
                     "--config", str(bad),
                     "--output-dir", str(tmp_path)]) == 2

    def test_argparse_error_is_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["enumerate", "--identity", "not-a-number"])
        assert exc.value.code == 2


class TestSimulateCommand:
    def test_h_column_when_zero_sum(self, tmp_path):
        assert main(["simulate", "--eps", "0.2", "-0.2",
                     "--start", "0.4,0.3,0.3,0.3,0.4,0.3",
                     "--t-end", "5", "--record-every", "0.5",
                     "--output-dir", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "trajectory.csv")
        assert rows[0] == ["t", "x1", "x2", "x3", "y1", "y2", "y3", "H"]
        assert len(rows) == 12

    def test_no_h_column_otherwise(self, tmp_path):
        assert main(["simulate", "--eps", "0.2", "0.2",
                     "--t-end", "5", "--record-every", "0.5",
                     "--output-dir", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "trajectory.csv")
        assert rows[0] == ["t", "x1", "x2", "x3", "y1", "y2", "y3"]

    def test_simplex_mode_writes_residence(self, tmp_path):
        assert main(["simulate", "--eps", "-0.1", "0.5", "--mode", "simplex",
                     "--start", "0.4,0.3,0.3,0.3,0.4,0.3",
                     "--t-end", "120", "--record-every", "0.05",
                     "--output-dir", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "residence.csv")
        assert rows[0] == ["corner", "entry_t", "duration"]
        assert len(rows) > 1

    def test_constant_rows_from_uniform(self, tmp_path):
        assert main(["simulate", "--eps", "0", "0", "--start", "uniform",
                     "--t-end", "3", "--record-every", "1",
                     "--output-dir", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "trajectory.csv")
        values = {row[1] for row in rows[1:]}
        assert len(values) == 1


class TestLyapunovCommand:
    def test_single_run_csv(self, tmp_path):
        assert main(["lyapunov", "--eps", "0.3", "-0.3",
                     "--start", "0.4,0.3,0.3,0.3,0.4,0.3",
                     "--t-total", "40", "--transient", "10", "--dt", "0.05",
                     "--check-pairs", "--output-dir", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "lyapunov.csv")
        assert rows[0] == ["t", "lambda1", "lambda2", "lambda3", "lambda4"]
        manifest = json.loads(
            (tmp_path / "lyapunov.csv.manifest.json").read_text())
        assert "pair_residual" in manifest["stats"]

    def test_sweep_requires_zero_sum_flag(self, tmp_path):
        assert main(["lyapunov", "--eps-sweep", "0:0.5:3",
                     "--t-total", "30", "--transient", "5", "--dt", "0.1",
                     "--output-dir", str(tmp_path)]) == 3

    def test_sweep_table(self, tmp_path):
        assert main(["lyapunov", "--eps-sweep", "0:0.5:3", "--zero-sum",
                     "--t-total", "30", "--transient", "5", "--dt", "0.1",
                     "--output-dir", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "lyapunov_sweep.csv")
        assert rows[0] == ["eps", "lambda1"]
        assert [r[0] for r in rows[1:]] == ["0.0", "0.25", "0.5"]


class TestPoincareCommand:
    def test_section_csv_and_occupancy(self, tmp_path):
        assert main(["poincare", "--eps", "0.3", "-0.3",
                     "--start", "0.4,0.3,0.3,0.3,0.4,0.3",
                     "--t-end", "200", "--record-every", "0.1",
                     "--output-dir", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "section.csv")
        assert rows[0] == ["t", "x1", "x2", "y1", "y2", "direction"]
        manifest = json.loads(
            (tmp_path / "section.csv.manifest.json").read_text())
        assert manifest["stats"]["occupancy"] > 0


class TestMinorityCommand:
    def test_run_csv(self, tmp_path):
        assert main(["minority", "--n", "11", "--m", "2", "--s", "2",
                     "--steps", "200", "--seed", "1",
                     "--output-dir", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "minority_run.csv")
        assert rows[0] == ["t", "attendance", "minority_bit"]
        assert len(rows) == 201

    def test_sweep_csv(self, tmp_path):
        assert main(["minority", "--n", "11", "--s", "2",
                     "--m-sweep", "1:3", "--seeds", "5", "--steps", "300",
                     "--output-dir", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "minority_sweep.csv")
        assert rows[0] == ["m", "sigma_mean", "sigma_stderr", "n_seeds"]
        assert [r[0] for r in rows[1:]] == ["1", "2", "3"]


class TestManifest:
    def test_checksums_match_outputs(self, tmp_path):
        main(["minority", "--n", "11", "--m", "2", "--steps", "200",
              "--output-dir", str(tmp_path)])
        manifest = json.loads(
            (tmp_path / "minority_run.csv.manifest.json").read_text())
        for path, digest in manifest["outputs"].items():
            actual = hashlib.sha256(open(path, "rb").read()).hexdigest()
            assert actual == digest
        assert manifest["command"] == "minority"
        assert manifest["seed"] == 0
        assert manifest["duration_s"] >= 0

    def test_rerun_bitwise_identical(self, tmp_path):
        d1, d2 = tmp_path / "a", tmp_path / "b"
        argv = ["minority", "--n", "11", "--m", "3", "--s", "2",
                "--steps", "300", "--seed", "9"]
        main(argv + ["--output-dir", str(d1)])
        main(argv + ["--output-dir", str(d2)])
        assert (d1 / "minority_run.csv").read_bytes() == \
            (d2 / "minority_run.csv").read_bytes()


class TestConfigAndEnv:
    def test_env_var_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("GAMELAB_OUTPUT_DIR", str(tmp_path / "envout"))
        assert main(["enumerate", "--identity", "2"]) == 0
        assert (tmp_path / "envout" / "enumerate.json").exists()

    def test_json_config_sections(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "game": {"eps": [0.1, -0.1], "start": "uniform"},
            "integrator": {"t_end": 4.0, "record_every": 1.0},
        }))
        assert main(["simulate", "--config", str(cfg),
                     "--output-dir", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "trajectory.csv")
        assert rows[-1][0] == "4.0"

    def test_flags_override_config(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"integrator": {"t_end": 4.0,
                                                  "record_every": 1.0}}))
        assert main(["simulate", "--eps", "0.1", "-0.1", "--t-end", "2",
                     "--config", str(cfg),
                     "--output-dir", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "trajectory.csv")
        assert rows[-1][0] == "2.0"

    def test_toml_config(self, tmp_path):
        cfg = tmp_path / "cfg.toml"
        cfg.write_text(
            '[minority]\nn = 11\nm = 2\ns = 2\nsteps = 200\nseed = 2\n')
        assert main(["minority", "--config", str(cfg),
                     "--output-dir", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "minority_run.csv")
        assert len(rows) == 201
