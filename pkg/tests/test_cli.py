import json
import math

import numpy as np
import pytest

from lapalloc.cli import main

SQRT2 = math.sqrt(2.0)


@pytest.fixture
def problem_path(tmp_path):
    def write(payload, name="problem.json"):
        path = tmp_path / name
        path.write_text(json.dumps(payload))
        return str(path)

    return write


def run_cli(capsys, argv):
    rc = main(argv)
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


WORKED = {
    "alpha": [0.1, 0.1],
    "matrix": [[1.0, 0.0], [0.0, 1.0]],
    "matrix_kind": "covariance",
    "kappa": 1.0,
    "lambda": 1.0,
}


class TestAllocate:
    def test_worked_example(self, capsys, problem_path):
        rc, out, _ = run_cli(
            capsys, ["allocate", "--input", problem_path(WORKED), "--method", "laplace"]
        )
        assert rc == 0
        report = json.loads(out)
        assert report["method"] == "analytic-laplace"
        assert np.allclose(report["holdings"], 0.0993420767853318, rtol=1e-9)
        assert math.isclose(report["omega"], 1.9868415357066363, rel_tol=1e-12)

    def test_zero_alpha(self, capsys, problem_path):
        payload = dict(WORKED, alpha=[0.0, 0.0])
        rc, out, _ = run_cli(capsys, ["allocate", "--input", problem_path(payload)])
        assert rc == 0
        report = json.loads(out)
        assert report["holdings"] == [0.0, 0.0]
        assert report["omega"] == 2.0
        assert report["critical_root"] == 0.0

    def test_markowitz(self, capsys, problem_path):
        payload = dict(WORKED, alpha=[2.0, 1.0])
        rc, out, _ = run_cli(
            capsys,
            ["allocate", "--input", problem_path(payload), "--method", "markowitz-constrained"],
        )
        assert rc == 0
        report = json.loads(out)
        assert np.allclose(report["holdings"], [2.0 / 3.0, 1.0 / 3.0], rtol=1e-14)
        assert sum(report["holdings"]) == 1.0

    def test_scale_matrix_kind(self, capsys, problem_path):
        # Sigma = (2/3) I is the scale matrix whose covariance is I at n=2
        payload = dict(WORKED, matrix=[[2.0 / 3.0, 0.0], [0.0, 2.0 / 3.0]], matrix_kind="scale")
        rc, out, _ = run_cli(capsys, ["allocate", "--input", problem_path(payload)])
        assert rc == 0
        report = json.loads(out)
        assert np.allclose(report["holdings"], 0.0993420767853318, rtol=1e-12)

    def test_ged_method_matches_laplace_at_kappa_one(self, capsys, problem_path):
        rc, out, _ = run_cli(
            capsys, ["allocate", "--input", problem_path(WORKED), "--method", "ged"]
        )
        assert rc == 0
        report = json.loads(out)
        assert report["method"] == "numeric-ged"
        assert np.allclose(report["holdings"], 0.0993420767853318, rtol=1e-6)

    def test_normal_method(self, capsys, problem_path):
        rc, out, _ = run_cli(
            capsys, ["allocate", "--input", problem_path(WORKED), "--method", "normal"]
        )
        assert rc == 0
        report = json.loads(out)
        assert np.allclose(report["holdings"], [0.1, 0.1], rtol=1e-14)
        assert report["omega"] == 2.0

    def test_round_trip_of_echoed_input(self, capsys, problem_path, tmp_path):
        rc, out, _ = run_cli(capsys, ["allocate", "--input", problem_path(WORKED)])
        assert rc == 0
        first = json.loads(out)
        echo = tmp_path / "echo.json"
        echo.write_text(json.dumps(first["input"]))
        rc, out, _ = run_cli(capsys, ["allocate", "--input", str(echo)])
        assert rc == 0
        second = json.loads(out)
        assert second["holdings"] == first["holdings"]
        assert second["omega"] == first["omega"]

    def test_lambda_override(self, capsys, problem_path):
        rc, out, _ = run_cli(
            capsys, ["allocate", "--input", problem_path(WORKED), "--lambda", "2.0"]
        )
        assert rc == 0
        report = json.loads(out)
        assert np.allclose(report["holdings"], 0.0993420767853318 / 2.0, rtol=1e-12)

    def test_tightening_tol_stable_digits(self, capsys, problem_path):
        path = problem_path(WORKED)
        rc, out_loose, _ = run_cli(
            capsys, ["allocate", "--input", path, "--method", "ged", "--tol", "1e-6"]
        )
        assert rc == 0
        rc, out_tight, _ = run_cli(
            capsys, ["allocate", "--input", path, "--method", "ged", "--tol", "1e-10"]
        )
        assert rc == 0
        loose = json.loads(out_loose)["holdings"]
        tight = json.loads(out_tight)["holdings"]
        assert np.allclose(loose, tight, rtol=1e-6)

    def test_malformed_json_exits_2(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        rc, _, err = run_cli(capsys, ["allocate", "--input", str(bad)])
        assert rc == 2
        assert err.strip()

    def test_missing_lambda_exits_2(self, capsys, problem_path):
        payload = {k: v for k, v in WORKED.items() if k != "lambda"}
        rc, _, err = run_cli(capsys, ["allocate", "--input", problem_path(payload)])
        assert rc == 2
        assert "lambda" in err

    def test_non_spd_matrix_exits_3(self, capsys, problem_path):
        payload = dict(WORKED, matrix=[[1.0, 2.0], [2.0, 1.0]])
        rc, _, err = run_cli(capsys, ["allocate", "--input", problem_path(payload)])
        assert rc == 3
        assert "positive definite" in err

    def test_bad_kappa_exits_2(self, capsys, problem_path):
        payload = dict(WORKED, kappa=1.5)
        rc, _, _ = run_cli(capsys, ["allocate", "--input", problem_path(payload)])
        assert rc == 2


class TestOmegaCurve:
    def test_header_and_origin_row(self, capsys):
        rc, out, _ = run_cli(
            capsys, ["omega-curve", "--n-list", "1,2,10,100", "--z-max", "10", "--steps", "11"]
        )
        assert rc == 0
        lines = out.strip().splitlines()
        assert lines[0] == "z,omega_n1,omega_n2,omega_n10,omega_n100"
        origin = [float(v) for v in lines[1].split(",")]
        assert origin == [0.0, 2.0, 2.0, 2.0, 2.0]

    def test_unit_z_cell(self, capsys):
        rc, out, _ = run_cli(
            capsys, ["omega-curve", "--n-list", "1", "--z-max", "10", "--steps", "11"]
        )
        rows = [line.split(",") for line in out.strip().splitlines()[1:]]
        value = float([r for r in rows if float(r[0]) == 1.0][0][1])
        assert math.isclose(value, 1.4641016151377546, rel_tol=1e-12)

    def test_columns_increase_with_n(self, capsys):
        rc, out, _ = run_cli(
            capsys, ["omega-curve", "--n-list", "1,2,10,100", "--z-max", "10", "--steps", "21"]
        )
        rows = [[float(v) for v in line.split(",")] for line in out.strip().splitlines()[1:]]
        for row in rows:
            if row[0] > 0.0:
                assert row[1] < row[2] < row[3] < row[4]

    def test_malformed_spec_exits_2(self, capsys):
        rc, _, _ = run_cli(capsys, ["omega-curve", "--n-list", "0,2"])
        assert rc == 2
        rc, _, _ = run_cli(capsys, ["omega-curve", "--z-max", "-1"])
        assert rc == 2
        rc, _, _ = run_cli(capsys, ["omega-curve", "--steps", "1"])
        assert rc == 2

    def test_figure_rendering(self, capsys, tmp_path):
        figure = tmp_path / "omega.png"
        rc, out, _ = run_cli(
            capsys,
            ["omega-curve", "--n-list", "1,2", "--steps", "5", "--figure", str(figure)],
        )
        assert rc == 0
        assert out.startswith("z,")  # delimited output still emitted
        assert figure.exists() and figure.stat().st_size > 0


class TestPsiTable:
    def test_laplace_rows_match_analytic(self, capsys):
        rc, out, _ = run_cli(
            capsys, ["psi-table", "--nu", "0.5", "--kappa", "1.0", "--x-max", "1.2", "--steps", "7"]
        )
        assert rc == 0
        lines = out.strip().splitlines()
        assert lines[0] == "x,psi_numeric,psi_analytic,abs_diff"
        first = lines[1].split(",")
        assert float(first[0]) == 0.0
        assert math.isclose(float(first[1]), 1.0, abs_tol=1e-9)
        for line in lines[1:]:
            assert float(line.split(",")[3]) < 1e-6

    def test_normal_rows_are_unity(self, capsys):
        rc, out, _ = run_cli(
            capsys, ["psi-table", "--nu", "1.0", "--kappa", "0.5", "--x-max", "2.0", "--steps", "5"]
        )
        assert rc == 0
        for line in out.strip().splitlines()[1:]:
            parts = line.split(",")
            assert abs(float(parts[1]) - 1.0) < 1e-6
            assert parts[2] == "" and parts[3] == ""

    def test_x_max_capped_near_pole(self, capsys):
        rc, out, _ = run_cli(
            capsys, ["psi-table", "--nu", "0.5", "--kappa", "1.0", "--x-max", "5.0", "--steps", "4"]
        )
        assert rc == 0
        xs = [float(line.split(",")[0]) for line in out.strip().splitlines()[1:]]
        assert max(xs) <= SQRT2 - 1e-3 + 1e-12

    def test_figure_rendering(self, capsys, tmp_path):
        figure = tmp_path / "psi.pdf"
        rc, _, _ = run_cli(
            capsys,
            ["psi-table", "--nu", "1.0", "--steps", "4", "--figure", str(figure)],
        )
        assert rc == 0
        assert figure.exists() and figure.stat().st_size > 0

    def test_bad_nu_exits_2(self, capsys):
        rc, _, _ = run_cli(capsys, ["psi-table", "--nu", "-1.0"])
        assert rc == 2


class TestVerify:
    def test_worked_example_passes(self, capsys, problem_path):
        rc, out, _ = run_cli(
            capsys,
            ["verify", "--input", problem_path(WORKED), "--draws", "2000000", "--seed", "42"],
        )
        assert rc == 0
        assert "verdict: PASS" in out

    def test_zero_alpha_trivially_passes(self, capsys, problem_path):
        payload = dict(WORKED, alpha=[0.0, 0.0])
        rc, out, _ = run_cli(
            capsys, ["verify", "--input", problem_path(payload), "--draws", "1000"]
        )
        assert rc == 0
        assert "PASS" in out

    def test_divergent_problem_exits_3(self, capsys, problem_path):
        # a huge alpha pushes lambda * ||h||_Sigma across the sqrt(2) boundary
        payload = dict(WORKED, alpha=[100.0, 100.0])
        rc, _, err = run_cli(
            capsys, ["verify", "--input", problem_path(payload), "--draws", "1000"]
        )
        assert rc == 3
        assert "diverge" in err

    def test_non_laplace_kappa_exits_2(self, capsys, problem_path):
        payload = dict(WORKED, kappa=0.75)
        rc, _, _ = run_cli(capsys, ["verify", "--input", problem_path(payload), "--draws", "1000"])
        assert rc == 2

    def test_report_rows(self, capsys, problem_path):
        rc, out, _ = run_cli(
            capsys, ["verify", "--input", problem_path(WORKED), "--draws", "100000"]
        )
        lines = out.strip().splitlines()
        assert lines[0] == "scale,estimate,std_error,diff_vs_unit,diff_std_error"
        scales = [float(line.split(",")[0]) for line in lines[1:-1]]
        assert scales == [0.5, 0.75, 0.9, 1.0, 1.1, 1.25, 1.5]


class TestSample:
    def test_deterministic_bytes(self, capsys, problem_path):
        path = problem_path(WORKED)
        rc1, out1, _ = run_cli(capsys, ["sample", "--input", path, "--count", "50", "--seed", "9"])
        rc2, out2, _ = run_cli(capsys, ["sample", "--input", path, "--count", "50", "--seed", "9"])
        assert rc1 == rc2 == 0
        assert out1 == out2
        _, out3, _ = run_cli(capsys, ["sample", "--input", path, "--count", "50", "--seed", "10"])
        assert out1 != out3

    def test_row_count_and_width(self, capsys, problem_path):
        rc, out, _ = run_cli(
            capsys, ["sample", "--input", problem_path(WORKED), "--count", "25", "--seed", "1"]
        )
        assert rc == 0
        rows = out.strip().splitlines()
        assert len(rows) == 25
        assert all(len(r.split(",")) == 2 for r in rows)

    def test_summary_moments(self, capsys, problem_path):
        # V = I input means the sampler's scale matrix is (2/3) I, and the
        # sample covariance should come back near 1.5 * (2/3) I = I... the
        # covariance of the *law* is V itself
        rc, out, _ = run_cli(
            capsys,
            ["sample", "--input", problem_path(WORKED), "--count", "200000", "--seed", "3",
             "--summary"],
        )
        assert rc == 0
        lines = out.strip().splitlines()
        mean_line = [l for l in lines if l.startswith("# mean,")][0]
        cov_lines = [l for l in lines if l.startswith("# cov,")]
        mean = [float(v) for v in mean_line.split(",")[1:]]
        cov = np.array([[float(v) for v in l.split(",")[1:]] for l in cov_lines])
        assert np.abs(np.array(mean) - [0.1, 0.1]).max() < 0.02
        assert np.abs(cov - np.eye(2)).max() < 0.03

    def test_non_laplace_kappa_exits_2(self, capsys, problem_path):
        payload = dict(WORKED, kappa=0.5)
        rc, _, _ = run_cli(capsys, ["sample", "--input", problem_path(payload), "--count", "10"])
        assert rc == 2

    def test_bad_count_exits_2(self, capsys, problem_path):
        rc, _, _ = run_cli(capsys, ["sample", "--input", problem_path(WORKED), "--count", "0"])
        assert rc == 2
