import json
import subprocess
import sys

import numpy as np
import pytest

from votestack import cli, gaussian_blobs, save_csv

BASE_CONFIG = """
[dataset]
path = {data}

[ensemble]
n_learners = 3
strategies = plurality, filtered

[boost]
rounds = 4
max_depth = 2

[mlp]
hidden_sizes = 8 4
epochs = 2
batch_size = 32
learning_rate = 0.05

[run]
seed = 9
output_dir = {out}
"""


@pytest.fixture(scope="module")
def data_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "blobs.csv"
    save_csv(gaussian_blobs(150, 4, 3, seed=17), path)
    return path


def write_config(tmp_path, data_csv, extra="", out="{out}"):
    text = BASE_CONFIG.format(data=data_csv, out=tmp_path / "out") + extra
    path = tmp_path / "exp.ini"
    path.write_text(text, encoding="utf-8")
    return path


class TestSelfcheck:
    def test_passes_with_default_seed(self, capsys):
        assert cli.main(["selfcheck"]) == 0
        out = capsys.readouterr().out
        assert out.count("ok:") == 3
        assert "FAIL" not in out

    def test_passes_with_other_seeds(self, capsys):
        assert cli.main(["selfcheck", "--seed", "11"]) == 0
        assert cli.main(["selfcheck", "--seed", "12345"]) == 0

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "votestack.cli", "selfcheck"],
            capture_output=True, text=True, cwd=tmp_path, timeout=120,
        )
        assert proc.returncode == 0
        assert proc.stdout.count("ok:") == 3


class TestVersion:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["--version"])
        assert exc.value.code == 0
        assert "votestack" in capsys.readouterr().out


class TestRun:
    def test_happy_path(self, tmp_path, data_csv, capsys):
        config = write_config(tmp_path, data_csv)
        assert cli.main(["run", "--config", str(config)]) == 0
        out_dir = tmp_path / "out"
        for name in ("report.json", "accuracy_table.csv", "decisions.csv",
                     "manifest.json"):
            assert (out_dir / name).exists()
        for j in range(3):
            assert (out_dir / "models" / f"learner_{j}.mlp").exists()
        stdout = capsys.readouterr().out
        assert "mean learner accuracy" in stdout
        assert "plurality" in stdout
        assert "filtered" in stdout

    def test_seed_override_lands_in_manifest(self, tmp_path, data_csv):
        config = write_config(tmp_path, data_csv)
        assert cli.main(["run", "--config", str(config), "--seed", "7"]) == 0
        manifest = json.loads(
            (tmp_path / "out" / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["seed"] == 7

    def test_rerun_byte_identical_accuracy_table_across_workers(
            self, tmp_path, data_csv):
        config = write_config(tmp_path, data_csv)
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert cli.main(["run", "--config", str(config), "--seed", "7",
                         "--out", str(out_a), "--workers", "1"]) == 0
        assert cli.main(["run", "--config", str(config), "--seed", "7",
                         "--out", str(out_b), "--workers", "2"]) == 0
        for name in ("accuracy_table.csv", "decisions.csv"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_missing_config_file(self, tmp_path, capsys):
        rc = cli.main(["run", "--config", str(tmp_path / "absent.ini")])
        assert rc == 1
        err = capsys.readouterr().err
        assert err.startswith("error:")
        assert "not found" in err

    def test_config_without_dataset_location(self, tmp_path, capsys):
        config = tmp_path / "exp.ini"
        config.write_text("[run]\nseed = 1\n", encoding="utf-8")
        rc = cli.main(["run", "--config", str(config)])
        assert rc == 1
        assert "[dataset] path" in capsys.readouterr().err

    def test_unknown_strategy_in_config(self, tmp_path, data_csv, capsys):
        config = write_config(tmp_path, data_csv)
        text = config.read_text(encoding="utf-8").replace(
            "strategies = plurality, filtered",
            "strategies = plurality, borda")
        config.write_text(text, encoding="utf-8")
        rc = cli.main(["run", "--config", str(config)])
        assert rc == 1
        assert "unknown strategy" in capsys.readouterr().err

    def test_bad_data_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("1.0,2.0,a\n1.0,b\n", encoding="utf-8")
        config = tmp_path / "exp.ini"
        config.write_text(
            f"[dataset]\npath = {bad}\n[run]\noutput_dir = {tmp_path / 'o'}\n",
            encoding="utf-8")
        rc = cli.main(["run", "--config", str(config)])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_divergence_exit_code(self, tmp_path, data_csv, capsys):
        config = write_config(tmp_path, data_csv)
        text = config.read_text(encoding="utf-8").replace(
            "learning_rate = 0.05", "learning_rate = 1e308")
        config.write_text(text, encoding="utf-8")
        with np.errstate(all="ignore"):
            rc = cli.main(["run", "--config", str(config)])
        assert rc == 3
        assert "non-finite loss" in capsys.readouterr().err

    def test_missing_output_dir(self, tmp_path, data_csv, capsys):
        config = tmp_path / "exp.ini"
        config.write_text(f"[dataset]\npath = {data_csv}\n", encoding="utf-8")
        rc = cli.main(["run", "--config", str(config)])
        assert rc == 1
        assert "no output directory" in capsys.readouterr().err


class TestSweep:
    def test_happy_path(self, tmp_path, data_csv, capsys):
        config = write_config(tmp_path, data_csv)
        rc = cli.main(["sweep", "--config", str(config), "--max-size", "2",
                       "--out", str(tmp_path / "sw")])
        assert rc == 0
        lines = (tmp_path / "sw" / "sweep.csv").read_text(
            encoding="utf-8").splitlines()
        assert lines[0] == "size,filtered,mean_individual"
        assert len(lines) == 3
        stdout = capsys.readouterr().out
        assert "size" in stdout and "filtered" in stdout

    def test_invalid_max_size(self, tmp_path, data_csv, capsys):
        config = write_config(tmp_path, data_csv)
        rc = cli.main(["sweep", "--config", str(config), "--max-size", "0"])
        assert rc == 1
        assert "max_size" in capsys.readouterr().err
