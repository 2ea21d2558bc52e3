import csv
import io
import json
import math
from pathlib import Path

import pytest

from shrinklab.cli import main, parse_grid
from shrinklab.core import xi_threshold, ProblemDims

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *args):
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestGrid:
    def test_list_and_range(self):
        assert parse_grid("0, 1,1e4") == [0.0, 1.0, 1e4]
        assert parse_grid("-0.5:0.5:0.25") == [-0.5, -0.25, 0.0, 0.25, 0.5]

    @pytest.mark.parametrize("bad", ["", "1:2", "2:1:0.5", "0:1:0", "a"])
    def test_bad(self, bad):
        with pytest.raises(ValueError):
            parse_grid(bad)


class TestEstimate:
    def test_closed_form(self, capsys):
        code, out, _ = run(capsys, "estimate", "--p", "5", "--n", "4", "--a", "-2", "--b", "2",
                           "--x", "1,1,0,0,0", "--s", "2")
        doc = json.loads(out)
        assert code == 0
        assert doc["multiplier"] == "0.8" and doc["w"] == "1" and doc["phi_over_w"] == "0.2"
        assert doc["delta"] == ["0.8", "0.8", "0", "0", "0"]

    def test_zero(self, capsys):
        code, out, _ = run(capsys, "estimate", "--x", "0,0,0", "--s", "1", "--n", "2")
        assert code == 0 and json.loads(out)["delta"] == ["0", "0", "0"]

    def test_invalid_hyper(self, capsys):
        code, _, err = run(capsys, "estimate", "--p", "3", "--a", "-3", "--x", "1,0,0",
                           "--s", "1")
        assert code == 2 and "p/2+a+1>0" in err

    def test_invalid_b(self, capsys):
        code, _, err = run(capsys, "estimate", "--b", "-1", "--x", "1,0,0", "--s", "1")
        assert code == 2 and "b+1>0" in err

    def test_p_mismatch(self, capsys):
        code, _, err = run(capsys, "estimate", "--p", "4", "--x", "1,0,0", "--s", "1")
        assert code == 2

    def test_x_file(self, capsys, tmp_path):
        f = tmp_path / "x.txt"
        f.write_text("1\n1\n0 0 0\n")
        code, out, _ = run(capsys, "estimate", "--x-file", str(f), "--s", "2", "--b", "2")
        assert code == 0 and json.loads(out)["multiplier"] == "0.8"

    def test_missing_s(self, capsys):
        assert run(capsys, "estimate", "--x", "1,0,0")[0] == 2

    def test_unknown_flag(self, capsys):
        assert run(capsys, "estimate", "--bogus", "1")[0] == 2


class TestPhi:
    def test_golden_and_closed_form(self, capsys):
        code, out, _ = run(capsys, "phi", "--p", "5", "--n", "4", "--a", "-2", "--b", "2")
        assert code == 0
        assert out == (GOLDEN / "phi_p5_n4_a-2_b2.csv").read_text()
        for row in table(out):
            w = float(row["w"])
            assert float(row["phi_over_w"]) == pytest.approx(0.5 / (w + 1.5), rel=1e-11)
            assert float(row["phi_star"]) == pytest.approx(0.5 * w / (w + 1.5), rel=1e-11,
                                                           abs=1e-300)

    def test_json(self, capsys):
        code, out, _ = run(capsys, "phi", "--w-grid", "1", "--b", "2", "--format", "json")
        assert code == 0 and json.loads(out) == [{"w": "1", "phi_over_w": "0.2",
                                                  "phi_star": "0.2"}]

    def test_negative_w(self, capsys):
        assert run(capsys, "phi", "--w-grid=-1")[0] == 2


class TestRegionMap:
    def test_golden(self, capsys):
        code, out, _ = run(capsys, "region-map", "--p", "5", "--n", "4")
        assert code == 0
        assert out == (GOLDEN / "region_map_p5_n4.csv").read_text()

    def test_golden_semantics(self):
        rows = table((GOLDEN / "region_map_p5_n4.csv").read_text())
        assert tuple(rows[0]) == ("p", "n", "a", "b", "admissibility", "minimax", "valid")
        a_vals = sorted({float(r["a"]) for r in rows})
        b_vals = sorted({float(r["b"]) for r in rows})
        assert a_vals[0] == -3.5 and a_vals[-1] == 2 and len(a_vals) == 23
        assert b_vals[0] == -0.5 and b_vals[-1] == 3 and len(b_vals) == 15
        xi = xi_threshold(ProblemDims(5, 4))
        for r in rows:
            a, b = float(r["a"]), float(r["b"])
            lab, mm, valid = r["admissibility"], r["minimax"] == "true", r["valid"] == "true"
            assert valid == (a > -3.5)
            if -3.5 < a < -2:
                assert lab == "INADMISSIBLE"
            elif a == -2:
                assert lab == ("ADMISSIBLE_CASE_II" if b >= 0 else "UNKNOWN")
            elif -2 < a <= -1:
                assert lab == "ADMISSIBLE_CASE_I"
            elif -1 < a < 2:
                assert lab == "ADMISSIBLE_PROPER_MIXING"
            else:
                assert lab == "UNKNOWN"
            assert mm == (valid and b >= 0 and a <= xi)

    def test_svg_golden(self, capsys, tmp_path):
        out = tmp_path / "map.svg"
        assert run(capsys, "region-map", "--format", "svg", "--out", str(out))[0] == 0
        assert out.read_text() == (GOLDEN / "region_map_p5_n4.svg").read_text()

    def test_svg_rejected_elsewhere(self, capsys):
        assert run(capsys, "phi", "--format", "svg")[0] == 2


RISK_HEADER = "estimator,p,n,a,b,lambda,mean_risk,std_err,reps,seed,verdict"


class TestRisk:
    def test_scan(self, capsys):
        code, out, _ = run(capsys, "risk-scan", "--reps", "5000", "--lambda-grid", "0,16",
                           "--seed", "3")
        assert code == 0
        assert out.splitlines()[0] == RISK_HEADER
        rows = table(out)
        assert [r["verdict"] for r in rows] == ["PASS", "PASS"]
        assert rows[0]["estimator"] == "gb" and rows[0]["reps"] == "5000"
        assert float(rows[0]["mean_risk"]) < 4

    def test_deterministic(self, capsys):
        args = ("risk-scan", "--reps", "3000", "--lambda-grid", "0,1,4", "--seed", "9")
        assert run(capsys, *args)[1] == run(capsys, *args)[1]

    def test_threads_identical(self, capsys, monkeypatch):
        args = ("compare", "--reps", "3000", "--lambda-grid", "0,1,4", "--seed", "9")
        serial = run(capsys, *args)[1]
        monkeypatch.setenv("SHRINKLAB_THREADS", "3")
        assert run(capsys, *args)[1] == serial

    def test_identity_scan_blank_hyper(self, capsys):
        code, out, _ = run(capsys, "risk-scan", "--estimator", "identity", "--reps", "2000",
                           "--lambda-grid", "0")
        row = table(out)[0]
        assert code == 0 and row["a"] == "" and row["b"] == ""

    def test_na_verdict_small_n(self, capsys):
        code, out, _ = run(capsys, "risk-scan", "--estimator", "identity", "--n", "1",
                           "--reps", "2000", "--lambda-grid", "0")
        assert code == 0 and table(out)[0]["verdict"] == "NA"

    def test_compare(self, capsys):
        code, out, _ = run(capsys, "compare", "--reps", "5000", "--lambda-grid", "0,4")
        assert code == 0
        assert out.splitlines()[0] == ("estimator_a,estimator_b,p,n,a,b,lambda,mean_diff,"
                                       "std_err_diff,reps,seed,verdict")
        assert all(r["verdict"] == "CONSISTENT" for r in table(out))

    def test_compare_violation_reported(self, capsys):
        code, out, _ = run(capsys, "compare", "--estimator", "identity", "--against", "js",
                           "--reps", "5000", "--lambda-grid", "0")
        assert code == 0 and table(out)[0]["verdict"] == "VIOLATED"

    def test_bad_reps(self, capsys):
        assert run(capsys, "risk-scan", "--reps", "10")[0] == 2

    def test_negative_lambda(self, capsys):
        assert run(capsys, "risk-scan", "--lambda-grid=-1", "--reps", "2000")[0] == 2


class TestBlyth:
    def test_rows(self, capsys):
        code, out, _ = run(capsys, "blyth", "--j-grid", "10,1000000")
        assert code == 0
        assert out.splitlines()[0] == ("j,i,I_h_norm,I_h_deriv,I_k_over,I_k_deriv,product1,"
                                       "bound1,product2,bound2,pass")
        rows = table(out)
        assert [r["pass"] for r in rows] == ["true", "true"]
        assert float(rows[0]["i"]) == pytest.approx(math.log(11), rel=1e-11)

    def test_invalid_case(self, capsys):
        assert run(capsys, "blyth", "--a", "-1")[0] == 2


class TestConfig:
    def test_precedence(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment\nb = 2\nw-grid = 1\n--p = 5\n")
        code, out, _ = run(capsys, "phi", "--config", str(cfg))
        assert code == 0 and table(out)[0]["phi_over_w"] == "0.2"
        code, out, _ = run(capsys, "phi", "--config", str(cfg), "--b", "0")
        assert table(out)[0]["phi_over_w"] != "0.2"

    def test_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("reps = 5\n")
        assert run(capsys, "phi", "--config", str(cfg))[0] == 2

    def test_malformed(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("just text\n")
        assert run(capsys, "phi", "--config", str(cfg))[0] == 2

    def test_missing_file(self, capsys):
        assert run(capsys, "phi", "--config", "/nonexistent/file.cfg")[0] == 2


class TestVerify:
    def test_subset_passes(self, capsys):
        code, out, _ = run(capsys, "verify", "--checks", "closed_form,identity,region_map")
        assert code == 0
        assert [ln.split()[0] for ln in out.splitlines()] == ["PASS"] * 3

    def test_failure_exit_code(self, capsys, monkeypatch):
        import shrinklab.verify as verify
        monkeypatch.setitem(verify.CHECKS, "region_map", lambda cfg, **_: (False, "forced"))
        code, out, _ = run(capsys, "verify", "--checks", "region_map")
        assert code == 3 and out.startswith("FAIL region_map")

    def test_quadrature_failure_exit_code(self, capsys, monkeypatch):
        import shrinklab.verify as verify
        from shrinklab.quadrature import QuadratureError

        def boom(cfg, **_):
            raise QuadratureError("forced")
        monkeypatch.setitem(verify.CHECKS, "radial", boom)
        assert run(capsys, "verify", "--checks", "radial")[0] == 1

    def test_unknown_check(self, capsys):
        assert run(capsys, "verify", "--checks", "nope")[0] == 2


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "shrinklab", "region-map", "--a-range", "-2",
                          "--b-range", "0"], capture_output=True, text=True, check=True)
    assert res.stdout.splitlines()[1] == "5,4,-2,0,ADMISSIBLE_CASE_II,true,true"
