import json
import subprocess
import sys

import numpy as np
import pytest

from irregular_tvar import cli
from irregular_tvar.process import read_path_csv


def write_ini(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


SIM_INI = "[model]\nf = const(0.5)\ndist = gamma(1,1)\nN = 1000\nseed = 7\n"


class TestSimulate:
    def test_writes_path(self, tmp_path, capsys):
        ini = write_ini(tmp_path, SIM_INI)
        assert cli.run(["simulate", "--config", ini, "--out", str(tmp_path / "o")]) == 0
        csvs = list((tmp_path / "o").glob("simulate_*.csv"))
        assert len(csvs) == 1
        lines = csvs[0].read_text().splitlines()
        assert lines[0] == "k,t,X,eps" and len(lines) == 1002
        path = read_path_csv(csvs[0])
        assert path.N == 1000 and np.all(path.x_values > 0)
        echo = json.loads(capsys.readouterr().out.split("\nwrote")[0])
        assert echo["N"] == 1000 and echo["rho"] == 0.5

    def test_idempotent(self, tmp_path):
        ini = write_ini(tmp_path, SIM_INI)
        blobs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            assert cli.run(["simulate", "--config", ini, "--out", str(out), "--quiet"]) == 0
            blobs.append(sorted((p.name, p.read_bytes()) for p in out.iterdir()))
        assert blobs[0] == blobs[1]

    def test_seed_flag_overrides(self, tmp_path):
        ini = write_ini(tmp_path, SIM_INI)
        cli.run(["simulate", "--config", ini, "--out", str(tmp_path / "a"), "--quiet"])
        cli.run(["simulate", "--config", ini, "--out", str(tmp_path / "b"), "--quiet", "--seed", "8"])
        a = next((tmp_path / "a").glob("*.csv")).read_bytes()
        b = next((tmp_path / "b").glob("*.csv")).read_bytes()
        assert a != b

    def test_quiet(self, tmp_path, capsys):
        ini = write_ini(tmp_path, SIM_INI)
        cli.run(["simulate", "--config", ini, "--out", str(tmp_path), "--quiet"])
        assert capsys.readouterr().out == ""


class TestErrors:
    def test_missing_config(self, tmp_path, capsys):
        missing = str(tmp_path / "nope.ini")
        assert cli.run(["simulate", "--config", missing]) == 1
        assert missing in capsys.readouterr().err

    def test_nonpositive_shape(self, tmp_path, capsys):
        ini = write_ini(tmp_path, SIM_INI + "a = -1\n")
        assert cli.run(["estimate", "--config", ini, "--out", str(tmp_path)]) == 1
        assert "a:" in capsys.readouterr().err

    def test_unknown_key(self, tmp_path, capsys):
        ini = write_ini(tmp_path, SIM_INI + "colour = blue\n")
        assert cli.run(["simulate", "--config", ini, "--out", str(tmp_path)]) == 1
        assert "colour" in capsys.readouterr().err

    def test_unparsable_value(self, tmp_path, capsys):
        ini = write_ini(tmp_path, "[x]\nreps = many\n")
        assert cli.run(["rate-study", "--config", ini, "--out", str(tmp_path)]) == 1
        assert "reps" in capsys.readouterr().err

    def test_bad_coefficient(self, tmp_path, capsys):
        ini = write_ini(tmp_path, "[x]\nf = const(1.5)\nN = 100\n")
        assert cli.run(["simulate", "--config", ini, "--out", str(tmp_path)]) == 1
        assert "f:" in capsys.readouterr().err

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            cli.run(["frobnicate"])
        assert exc.value.code != 0

    def test_runtime_error_exit_two(self, tmp_path):
        # a path with a zero value cannot be turned into ratios
        p = tmp_path / "p.csv"
        p.write_text("k,t,X,eps\n0,0,1,\n1,0.5,0,\n2,1,1,\n")
        ini = write_ini(tmp_path, f"[x]\ninput = {p}\n")
        assert cli.run(["estimate", "--config", ini, "--out", str(tmp_path), "--quiet"]) == 2

    def test_console_script(self):
        res = subprocess.run([sys.executable, "-m", "irregular_tvar.cli", "bogus"], capture_output=True, text=True)
        assert res.returncode != 0 and "invalid choice" in res.stderr


class TestEstimatePredict:
    def test_estimate_from_input(self, tmp_path, capsys):
        ini = write_ini(tmp_path, "[model]\nf = sine(0.5,0.3)\nN = 2000\nseed = 3\n")
        cli.run(["simulate", "--config", ini, "--out", str(tmp_path / "sim"), "--quiet"])
        sim = next((tmp_path / "sim").glob("*.csv"))
        ini2 = write_ini(tmp_path, f"[estimate]\ninput = {sim}\ngrid = 0.25,0.5,0.75\n", "est.ini")
        assert cli.run(["estimate", "--config", ini2, "--out", str(tmp_path / "est")]) == 0
        echo = json.loads(capsys.readouterr().out.split("\nwrote")[0])
        assert echo["h_star"] == pytest.approx(2000 ** -0.5)
        assert echo["degree"] == 0
        assert [p["x"] for p in echo["per_x"]] == [0.25, 0.5, 0.75]
        assert all(p["n_local"] > 0 and p["tau_n"] > 0 for p in echo["per_x"])

    def test_section_override(self, tmp_path, capsys):
        ini = write_ini(tmp_path, "[model]\nN = 500\nseed = 1\ngrid = 0.5\n[estimate]\nbeta = 2\n")
        assert cli.run(["estimate", "--config", ini, "--out", str(tmp_path)]) == 0
        assert json.loads(capsys.readouterr().out.split("\nwrote")[0])["degree"] == 1

    def test_predict(self, tmp_path, capsys):
        ini = write_ini(tmp_path, "[model]\nN = 500\nseed = 2\n")
        assert cli.run(["predict", "--config", ini, "--out", str(tmp_path)]) == 0
        echo = json.loads(capsys.readouterr().out.split("\nwrote")[0])
        assert echo["x_hat_next"] > 0
        lines = next(tmp_path.glob("predict_*.csv")).read_text().splitlines()
        assert lines[0] == "k,f_hat,residual" and len(lines) == 500


class TestStudies:
    def test_rate_study(self, tmp_path, capsys):
        ini = write_ini(tmp_path, "[rate-study]\nN = 64,128,256,512\nreps = 4\nbaseline = yes\n")
        assert cli.run(["rate-study", "--config", ini, "--out", str(tmp_path)]) == 0
        echo = json.loads(capsys.readouterr().out.split("\nwrote")[0])
        assert echo["kind"] == "rate" and "baseline_q1" in echo["fits"]
        assert len(list(tmp_path.glob("rate_*.csv"))) == 1

    def test_empty_v_grid(self, tmp_path, capsys):
        ini = write_ini(tmp_path, "[concentration]\nN = 1024\nreps = 10\ngrid = ,\n")
        assert cli.run(["concentration", "--config", ini, "--out", str(tmp_path)]) == 1
        assert "grid" in capsys.readouterr().err

    @pytest.mark.parametrize("command, body", [
        ("prediction-study", "N = 16,32,48,64\nreps = 2\n"),
        ("sharpness", "N = 256\nreps = 2\n"),
        ("pair-check", "N = 64\nreps = 1000\nlags = 1,2\n"),
        ("lower-bound", "N = 256\nreps = 100\nc_f = 4,16\na = 1\n"),
    ])
    def test_other_studies(self, tmp_path, command, body):
        ini = write_ini(tmp_path, f"[{command}]\n{body}")
        assert cli.run([command, "--config", ini, "--out", str(tmp_path), "--quiet"]) == 0
        assert len(list(tmp_path.glob("*.json"))) == 1
