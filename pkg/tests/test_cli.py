import json

import numpy as np
import pytest

from spi_conformal.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write_scores(path, values, header="score"):
    path.write_text(header + "\n" + "".join(f"{float(v)!r}\n" for v in values))
    return path


class TestBounds:
    @pytest.mark.parametrize("alpha,expected", [(0.05, "lower 0.937500 upper 1.000000"),
                                                (0.1, "lower 0.812500 upper 0.937500")])
    def test_text(self, capsys, alpha, expected):
        code, out, _ = run(capsys, "bounds", "--m", 15, "--N", 1000, "--alpha", alpha, "--beta", 0.4)
        assert code == 0 and out.strip() == expected

    def test_unity(self, capsys):
        _, out, _ = run(capsys, "bounds", "--m", 5, "--N", 1000, "--alpha", 0.02, "--beta", 0.4)
        assert out.strip() == "lower 1.000000 upper 1.000000"

    def test_json_and_default_beta(self, capsys):
        _, out, _ = run(capsys, "bounds", "--m", 15, "--N", 1000, "--alpha", 0.05, "--json")
        d = json.loads(out)
        assert d["beta"] == 0.4 and d["lower"] == 0.9375

    @pytest.mark.parametrize("argv", [("bounds", "--m", 15, "--N", 1000, "--alpha", 1.5),
                                      ("bounds", "--m", 15), ("nonsense",)])
    def test_contract_violation(self, capsys, argv):
        code, _, err = run(capsys, *argv)
        assert code == 1
        assert json.loads(err.strip().splitlines()[-1])["exit_code"] == 1


class TestCalibrate:
    def test_identical_sets_near_empirical_quantile(self, capsys, tmp_path):
        x = np.random.default_rng(0).normal(size=200)
        f = write_scores(tmp_path / "s.csv", x)
        code, out, _ = run(capsys, "calibrate", "--real", f, "--synth", f, "--alpha", 0.1, "--jitter", "--json")
        assert code == 0
        cutoff = json.loads(out)["threshold"]["cutoff"]
        assert abs(cutoff - np.quantile(x, 0.9)) < 0.25

    def test_ties_need_jitter(self, capsys, tmp_path):
        r = write_scores(tmp_path / "r.csv", [1.0, 1.0, 2.0])
        s = write_scores(tmp_path / "s.csv", np.arange(50.0))
        code, _, err = run(capsys, "calibrate", "--real", r, "--synth", s, "--alpha", 0.1)
        assert code == 1 and "continuous" in err and "TieError" in err
        code, out, _ = run(capsys, "calibrate", "--real", r, "--synth", s, "--alpha", 0.1, "--jitter", 1e-6)
        assert code == 0 and out.startswith("threshold")

    def test_only_real_trivial(self, capsys, tmp_path):
        r = write_scores(tmp_path / "r.csv", np.arange(18.0))
        code, out, _ = run(capsys, "calibrate", "--real", r, "--alpha", 0.05, "--method", "only-real")
        assert code == 0 and out.strip() == "threshold +inf"

    def test_windows(self, capsys, tmp_path):
        r = write_scores(tmp_path / "r.csv", [0.1, 0.5])
        s = write_scores(tmp_path / "s.csv", np.linspace(0, 1, 30))
        _, out, _ = run(capsys, "calibrate", "--real", r, "--synth", s, "--alpha", 0.2, "--windows", "--json")
        assert len(json.loads(out)["windows"]["rows"]) == 3

    def test_label_conditional_fallback(self, capsys, tmp_path):
        r = tmp_path / "r.csv"
        r.write_text("label,score\n" + "".join(f"{'ab'[i % 2]},{float(v)!r}\n" for i, v in enumerate(np.linspace(0, 1, 10))))
        s = tmp_path / "s.csv"
        s.write_text("label,score\n" + "".join(f"a,{float(v)!r}\n" for v in np.linspace(0.01, 0.99, 100)))
        code, out, _ = run(capsys, "calibrate", "--real", r, "--synth", s, "--alpha", 0.1, "--label-conditional")
        assert code == 0
        line_b = next(line for line in out.splitlines() if line.startswith("label b"))
        assert "fallback: whole synthetic set" in line_b

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "calibrate", "--real", tmp_path / "nope.csv", "--synth", tmp_path / "x.csv",
                           "--alpha", 0.1)
        assert code == 3 and json.loads(err.strip().splitlines()[-1])["exit_code"] == 3

    def test_bad_header(self, capsys, tmp_path):
        r = tmp_path / "r.csv"
        r.write_text("value\n1\n")
        code, _, _ = run(capsys, "calibrate", "--real", r, "--alpha", 0.1, "--method", "only-real")
        assert code == 1


class TestSelectBeta:
    def test_feasible(self, capsys):
        code, out, _ = run(capsys, "select-beta", "--m", 15, "--N", 1000, "--alpha", 0.1, "--target-lower", 0.8,
                           "--step", 0.01, "--json")
        assert code == 0 and json.loads(out)["beta"] <= 0.4

    def test_zero_target(self, capsys):
        _, out, _ = run(capsys, "select-beta", "--m", 15, "--N", 1000, "--alpha", 0.1, "--target-lower", 0,
                        "--json")
        assert json.loads(out)["beta"] == 0.01

    def test_no_solution(self, capsys):
        code, _, err = run(capsys, "select-beta", "--m", 5, "--N", 1000, "--alpha", 0.3, "--target-lower", 0.99)
        assert code == 2 and "no β on grid achieves target" in err


class TestOtherCommands:
    def test_simulate_writes_csv_and_json(self, capsys, tmp_path):
        c = tmp_path / "c.json"
        c.write_text(json.dumps({"m": 10, "N": 100, "alpha": 0.1, "trials": 20, "master_seed": 3}))
        out = tmp_path / "rep.csv"
        assert run(capsys, "simulate", "--config", c, "--out", out)[0] == 0
        first = out.read_text()
        assert first.splitlines()[0] == "trial,threshold,coverage,trivial"
        agg = json.loads(out.with_suffix(".json").read_text())
        assert agg["aggregate"]["trials"] == 20
        run(capsys, "simulate", "--config", c, "--out", out, "--workers", 2)
        assert out.read_text() == first

    def test_simulate_bad_config(self, capsys, tmp_path):
        c = tmp_path / "c.json"
        c.write_text(json.dumps({"m": 10, "N": 100, "alpha": 0.1, "method": "magic"}))
        assert run(capsys, "simulate", "--config", c)[0] == 1

    def test_sweep(self, capsys, tmp_path):
        out = tmp_path / "sweep.csv"
        run(capsys, "sweep", "--m-values", "5,10,15", "--alpha-values", "0.05", "--N", 1000, "--out", out)
        lines = out.read_text().splitlines()
        assert lines[0] == "m,N,alpha,beta,lower,upper" and len(lines) == 4

    def test_subset_all_groups(self, capsys, tmp_path):
        rng = np.random.default_rng(2)
        r = write_scores(tmp_path / "r.csv", rng.normal(size=8))
        g = tmp_path / "g.csv"
        g.write_text("group,score\n" + "".join(f"g{i},{float(v)!r}\n" for i in range(4) for v in rng.normal(size=6)))
        code, out, _ = run(capsys, "subset", "--real", r, "--groups", g, "--k", 4)
        assert code == 0 and out.splitlines()[0] == "selected g0,g1,g2,g3"

    def test_equivalence(self, capsys):
        code, out, _ = run(capsys, "equivalence", "--instances", 20, "--seed", 1)
        assert code == 0 and out.startswith("0 disagreements")

    def test_repeatable_stdout(self, capsys):
        a = run(capsys, "sweep", "--m-values", "3,7", "--alpha-values", "0.1,0.2", "--N", 50)[1]
        b = run(capsys, "sweep", "--m-values", "3,7", "--alpha-values", "0.1,0.2", "--N", 50)[1]
        assert a == b
