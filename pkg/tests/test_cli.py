import csv
import json
import subprocess
import sys
from importlib import resources

import jsonschema
import numpy as np
import pytest

from tteig.cli import cli, main
from tteig.experiments import (ExperimentConfig, fit_loglog_slope, run, scan)
from tteig.hamiltonians import HamiltonianSpec
from tteig.solver import SolverConfig


def load_schema():
    with resources.files("tteig").joinpath("result.schema.json").open() as fh:
        return json.load(fh)


def invoke(args, cwd):
    proc = subprocess.run(
        [sys.executable, "-m", "tteig.cli", *args],
        capture_output=True, text=True, cwd=cwd)
    return proc


@pytest.fixture(scope="module")
def laplace_record(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "r.json"
    proc = invoke(["run", "--model", "laplace", "--d", "3", "--n", "4",
                   "--b", "5", "--eps", "1e-8", "--verify", "dense-oracle",
                   "--out", str(out), "--format", "both"], cwd=out.parent)
    assert proc.returncode == 0, proc.stderr
    return out, json.loads(out.read_text())


class TestRunCommand:
    def test_dense_oracle_errors_within_tolerance(self, laplace_record):
        _, rec = laplace_record
        assert rec["verification"]["passed"]
        assert max(rec["errors"]) <= 1e-6

    def test_record_validates_against_schema(self, laplace_record):
        _, rec = laplace_record
        jsonschema.validate(rec, load_schema())

    def test_csv_has_full_precision(self, laplace_record):
        out, rec = laplace_record
        rows = list(csv.reader(open(out.with_suffix(".csv"))))
        assert rows[0] == ["index", "eigenvalue", "reference", "abs_error"]
        value = rows[1][1]
        assert "e" in value
        mantissa = value.split("e")[0].replace("-", "").replace(".", "")
        assert len(mantissa) >= 15
        assert float(rows[1][1]) == pytest.approx(rec["eigenvalues"][0])

    def test_determinism_across_processes(self, tmp_path):
        args = ["run", "--model", "heisenberg", "--d", "6", "--b", "2",
                "--eps", "1e-6", "--seed", "3"]
        outs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            proc = invoke(args + ["--out", str(out)], cwd=tmp_path)
            assert proc.returncode == 0, proc.stderr
            outs.append(json.loads(out.read_text())["eigenvalues"])
        np.testing.assert_allclose(outs[0], outs[1], atol=1e-10)

    def test_usage_error_exit_code(self, tmp_path):
        # laplace without --n is unusable
        proc = invoke(["run", "--model", "laplace", "--d", "3"], cwd=tmp_path)
        assert proc.returncode == 1

    def test_invalid_flag_value_exit_code(self, tmp_path):
        proc = invoke(["run", "--model", "laplace", "--d", "3", "--n", "4",
                       "--verify", "closed-form", "--solver", "nonsense"],
                      cwd=tmp_path)
        assert proc.returncode == 1

    def test_verify_requires_compatible_model(self, tmp_path):
        proc = invoke(["run", "--model", "heisenberg", "--d", "4", "--b", "1",
                       "--verify", "closed-form"], cwd=tmp_path)
        assert proc.returncode == 1


class TestVerifyCommand:
    def test_dense_oracle_pass(self, tmp_path):
        out = tmp_path / "v.json"
        proc = invoke(["verify", "--model", "heisenberg", "--d", "6",
                       "--b", "3", "--eps", "1e-8", "--verify", "dense-oracle",
                       "--tol-eig", "1e-6", "--out", str(out)], cwd=tmp_path)
        assert proc.returncode == 0, proc.stderr
        assert "PASS" in proc.stdout

    def test_verification_failure_exit_code(self, tmp_path):
        out = tmp_path / "v.json"
        proc = invoke(["verify", "--model", "laplace", "--d", "3", "--n", "4",
                       "--b", "3", "--eps", "1e-8", "--verify", "closed-form",
                       "--tol-eig", "1e-18", "--out", str(out)], cwd=tmp_path)
        assert proc.returncode == 3
        assert "FAIL" in proc.stdout
        # partial results still written
        rec = json.loads(out.read_text())
        assert not rec["verification"]["passed"]
        jsonschema.validate(rec, load_schema())


class TestScanCommand:
    def test_scan_rows_and_csv(self, tmp_path):
        out = tmp_path / "scan.json"
        proc = invoke(["scan", "--model", "laplace", "--n", "4", "--d", "3",
                       "--b", "2", "--eps", "1e-6", "--axis", "d",
                       "--values", "2,3", "--out", str(out)], cwd=tmp_path)
        assert proc.returncode == 0, proc.stderr
        payload = json.loads(out.read_text())
        assert [r["value"] for r in payload["rows"]] == [2.0, 3.0]
        rows = list(csv.DictReader(open(out.with_suffix(".csv"))))
        assert len(rows) == 2
        assert rows[0]["failed"] == "False"
        for rec in payload["records"]:
            jsonschema.validate(rec, load_schema())

    def test_partial_failure_keeps_going(self, tmp_path):
        out = tmp_path / "scan.json"
        # d=1 is invalid for heisenberg: row fails, rest proceeds
        proc = invoke(["scan", "--model", "heisenberg", "--d", "4", "--b", "1",
                       "--eps", "1e-4", "--axis", "d", "--values", "1,4",
                       "--out", str(out)], cwd=tmp_path)
        assert proc.returncode == 2
        payload = json.loads(out.read_text())
        assert payload["rows"][0]["failed"] is True
        assert payload["rows"][1]["failed"] is False
        assert payload["records"][0] is None

    def test_reference_eps_error_column(self, tmp_path):
        config = ExperimentConfig(
            hamiltonian=HamiltonianSpec("henon-heiles", d=2, n=8),
            solver_config=SolverConfig(num_states=2, eps=1e-2, seed=1))
        records, rows = scan(config, "eps", [1e-2, 1e-3], reference_eps=1e-6)
        assert all(r["error_max"] is not None for r in rows)
        assert rows[1]["error_max"] <= rows[0]["error_max"] + 1e-12

    def test_reference_eps_requires_eps_axis(self):
        config = ExperimentConfig(
            hamiltonian=HamiltonianSpec("henon-heiles", d=2, n=8),
            solver_config=SolverConfig(num_states=2, eps=1e-2))
        from tteig import InvalidArgument
        with pytest.raises(InvalidArgument):
            scan(config, "d", [2, 3], reference_eps=1e-6)


class TestFitSlope:
    def test_recovers_power_law(self):
        xs = [10, 20, 30, 40]
        ys = [2.0 * x ** 1.7 for x in xs]
        assert fit_loglog_slope(xs, ys) == pytest.approx(1.7, abs=1e-12)
