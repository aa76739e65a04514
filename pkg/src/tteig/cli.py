"""Command-line harness: run, scan, verify.

Exit codes: 0 success, 1 usage error, 2 solver non-convergence,
3 verification failure.
"""

import os
import sys

# Cap dense-kernel threads before numpy loads its BLAS. Only effective when
# this module is the entry point (the `tteig` script), which is the
# supported way to use it.
if "TTSPEC_THREADS" in os.environ:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                 "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["TTSPEC_THREADS"])

import click

from .errors import (ConfigurationError, InvalidArgument, SizeLimitExceeded,
                     SolverError)
from .experiments import (ExperimentConfig, run as run_experiment, scan as
                          run_scan, verify as run_verify, write_eigenvalue_csv,
                          write_json, write_scan_csv)
from .hamiltonians import MODELS, HamiltonianSpec
from .solver import SolverConfig

_USAGE_ERRORS = (InvalidArgument, ConfigurationError, SizeLimitExceeded)


def _model_options(f):
    opts = [
        click.option("--model", type=click.Choice(MODELS), required=True),
        click.option("--d", "d", type=int, required=True, help="dimension / number of sites"),
        click.option("--n", "n", type=int, default=None,
                     help="mode size (forced to 2 for heisenberg)"),
        click.option("--lambda", "lam", type=float, default=0.111803,
                     show_default=True, help="anharmonic coupling (henon-heiles)"),
        click.option("--b", "b", type=int, default=1, show_default=True,
                     help="number of eigenpairs"),
        click.option("--eps", type=float, default=1e-6, show_default=True,
                     help="truncation tolerance"),
        click.option("--rmax", type=int, default=1000, show_default=True),
        click.option("--max-sweeps", type=int, default=20, show_default=True),
        click.option("--seed", type=int, default=0, show_default=True),
        click.option("--solver", type=click.Choice(["eigb", "deflation"]),
                     default="eigb", show_default=True),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _output_options(f):
    opts = [
        click.option("--out", type=click.Path(dir_okay=False), default="result.json",
                     show_default=True, help="JSON output path"),
        click.option("--format", "fmt", type=click.Choice(["json", "csv", "both"]),
                     default="json", show_default=True),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _build_config(model, d, n, lam, b, eps, rmax, max_sweeps, seed, solver,
                  verify="none", tol_eig=1e-6, tol_angle=1e-6):
    if n is None:
        if model == "heisenberg":
            n = 2
        else:
            raise InvalidArgument(f"--n is required for model {model}")
    spec = HamiltonianSpec(model=model, d=d, n=n, lam=lam)
    solver_config = SolverConfig(num_states=b, eps=eps, rmax=rmax,
                                 max_sweeps=max_sweeps, seed=seed)
    return ExperimentConfig(hamiltonian=spec, solver=solver,
                            solver_config=solver_config, verify=verify,
                            tol_eig=tol_eig, tol_angle=tol_angle)


def _write_record(record, out, fmt):
    write_json(out, record.to_dict())
    if fmt in ("csv", "both"):
        write_eigenvalue_csv(os.path.splitext(out)[0] + ".csv", record)


def _exit_code(record) -> int:
    if not record.converged:
        return 2
    if record.verification is not None and not record.verification["passed"]:
        return 3
    return 0


@click.group()
def cli():
    """Block tensor-train eigensolver experiments."""


@cli.command("run")
@_model_options
@click.option("--verify", type=click.Choice(["none", "closed-form", "dense-oracle"]),
              default="none", show_default=True)
@click.option("--tol-eig", type=float, default=1e-6, show_default=True,
              help="eigenvalue error tolerance for verification")
@click.option("--tol-angle", type=float, default=1e-6, show_default=True,
              help="subspace angle tolerance for verification (radians)")
@_output_options
def run_cmd(model, d, n, lam, b, eps, rmax, max_sweeps, seed, solver, verify,
            tol_eig, tol_angle, out, fmt):
    """Run one experiment and write its result record."""
    config = _build_config(model, d, n, lam, b, eps, rmax, max_sweeps, seed,
                           solver, verify, tol_eig, tol_angle)
    record = run_experiment(config)
    _write_record(record, out, fmt)
    code = _exit_code(record)
    status = {0: "ok", 2: "did not converge", 3: "verification failed"}[code]
    click.echo(f"{model} d={d} b={b}: lambda_0={record.eigenvalues[0]:.12e} "
               f"({record.num_sweeps} sweeps, {status}) -> {out}")
    return code


@cli.command("scan")
@_model_options
@click.option("--axis", type=click.Choice(["d", "n", "b", "eps"]), required=True)
@click.option("--values", required=True,
              help="comma-separated axis values, e.g. 10,20,30,40")
@click.option("--reference-eps", type=float, default=None,
              help="eps scans: compare eigenvalues against a run at this eps")
@click.option("--verify", type=click.Choice(["none", "closed-form", "dense-oracle"]),
              default="none", show_default=True)
@_output_options
def scan_cmd(model, d, n, lam, b, eps, rmax, max_sweeps, seed, solver, axis,
             values, reference_eps, verify, out, fmt):
    """Run one experiment per axis value and write an aggregate table."""
    config = _build_config(model, d, n, lam, b, eps, rmax, max_sweeps, seed,
                           solver, verify)
    try:
        parsed = [float(v) if axis == "eps" else int(v)
                  for v in values.split(",") if v.strip()]
    except ValueError as exc:
        raise InvalidArgument(f"bad --values list: {exc}") from None
    if not parsed:
        raise InvalidArgument("--values is empty")
    records, rows = run_scan(config, axis, parsed, reference_eps=reference_eps)
    payload = {
        "axis": axis,
        "values": [float(v) for v in parsed],
        "rows": rows,
        "records": [r.to_dict() if r is not None else None for r in records],
    }
    write_json(out, payload)
    write_scan_csv(os.path.splitext(out)[0] + ".csv", rows)
    failed = sum(1 for r in rows if r["failed"])
    for row in rows:
        state = row["message"] if row["failed"] else \
            f"t={row['wall_time_s']:.2f}s rmax={row['max_rank']}"
        click.echo(f"{axis}={row['value']:g}: {state}")
    return 0 if failed == 0 else 2


@cli.command("verify")
@_model_options
@click.option("--verify", "verify", type=click.Choice(["closed-form", "dense-oracle"]),
              required=True, help="reference to check against")
@click.option("--tol-eig", type=float, default=1e-6, show_default=True)
@click.option("--tol-angle", type=float, default=1e-6, show_default=True)
@_output_options
def verify_cmd(model, d, n, lam, b, eps, rmax, max_sweeps, seed, solver, verify,
               tol_eig, tol_angle, out, fmt):
    """Run, compare against a reference, and report pass/fail."""
    config = _build_config(model, d, n, lam, b, eps, rmax, max_sweeps, seed,
                           solver, verify, tol_eig, tol_angle)
    record = run_verify(config)
    _write_record(record, out, fmt)
    click.echo(f"{'idx':>4} {'eigenvalue':>24} {'reference':>24} {'abs error':>12}")
    for i, v in enumerate(record.eigenvalues):
        click.echo(f"{i:>4} {v:>24.15e} {record.reference[i]:>24.15e} "
                   f"{record.errors[i]:>12.3e}")
    if record.levels:
        click.echo(f"{'level':>6} {'mult':>5} {'angle (rad)':>14}")
        for lv in record.levels:
            angle = "n/a (partial)" if lv["angle_rad"] is None \
                else f"{lv['angle_rad']:.3e}"
            click.echo(f"{lv['level']:>6} {lv['multiplicity']:>5} {angle:>14}")
    ver = record.verification
    click.echo(f"max |error| = {ver['max_abs_error']:.3e} "
               f"(tol {ver['tol_eig']:.1e}); "
               + (f"max angle = {ver['max_angle_rad']:.3e} "
                  f"(tol {ver['tol_angle']:.1e}); " if ver["max_angle_rad"]
                  is not None else "")
               + ("PASS" if ver["passed"] else "FAIL"))
    return _exit_code(record)


def main(argv=None):
    try:
        code = cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except _USAGE_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except SolverError as exc:
        click.echo(f"solver error: {exc}", err=True)
        sys.exit(2)
    sys.exit(code if isinstance(code, int) else 0)


if __name__ == "__main__":
    main()
