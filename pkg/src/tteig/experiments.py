"""Experiment orchestration: configured runs, parameter scans, verification.

This is the layer the CLI drives. Results are plain JSON-serializable
records validating against ``result.schema.json``; CSV output is a
plot-ready convenience view.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, replace
from time import perf_counter

import numpy as np

from . import __version__
from .block import extract_state
from .core import tt_to_dense
from .errors import ConfigurationError, InvalidArgument
from .hamiltonians import (HamiltonianSpec, laplace_eigenbasis,
                           laplace_spectrum)
from .oracle import dense_eig, densify_operator, group_levels, subspace_angle
from .solver import SolverConfig, SpectrumResult, deflation_solve, eigb

SCHEMA_VERSION = 1

VERIFY_MODES = ("none", "closed-form", "dense-oracle")
SOLVERS = ("eigb", "deflation")


@dataclass(frozen=True)
class ExperimentConfig:
    """One fully specified solver run plus optional verification."""

    hamiltonian: HamiltonianSpec
    solver: str = "eigb"
    solver_config: SolverConfig = field(default_factory=SolverConfig)
    verify: str = "none"
    tol_eig: float = 1e-6
    tol_angle: float = 1e-6

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ConfigurationError(f"solver must be one of {SOLVERS}")
        if self.verify not in VERIFY_MODES:
            raise ConfigurationError(f"verify must be one of {VERIFY_MODES}")
        if self.verify == "closed-form" and self.hamiltonian.model != "laplace":
            raise ConfigurationError(
                "closed-form verification exists only for the laplace model")
        if self.verify == "dense-oracle":
            size = self.hamiltonian.n ** self.hamiltonian.d
            if size > self.solver_config.densify_cap:
                raise ConfigurationError(
                    f"dense-oracle verification needs total size <= "
                    f"{self.solver_config.densify_cap}, got {size}")

    def config_echo(self) -> dict:
        h = self.hamiltonian
        c = self.solver_config
        return {
            "model": h.model, "d": h.d, "n": h.n, "lambda": h.lam,
            "solver": self.solver, "b": c.num_states, "eps": c.eps,
            "rmax": c.rmax, "max_sweeps": c.max_sweeps,
            "conv_tol": c.conv_tol_effective, "local_solver": c.local_solver,
            "seed": c.seed, "verify": self.verify,
        }


@dataclass
class ResultRecord:
    """JSON-serializable outcome of one run."""

    config: dict
    eigenvalues: list
    rank_profile: list
    sweep_history: list
    wall_time_seconds: float
    library_version: str
    seed: int
    converged: bool
    num_sweeps: int
    solver: str
    notes: str
    errors: list | None = None
    reference: list | None = None
    state_residuals: list | None = None
    levels: list | None = None
    verification: dict | None = None
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return asdict(self)


def _history_record(result: SpectrumResult) -> list:
    return [
        {
            "eigenvalues": [float(v) for v in s.eigenvalues],
            "max_residual": float(s.max_residual),
            "wall_time_s": float(s.wall_time_s),
        }
        for s in result.sweep_history
    ]


def _solve(config: ExperimentConfig) -> SpectrumResult:
    operator = config.hamiltonian.build()
    if config.solver == "eigb":
        return eigb(operator, None, config.solver_config)
    return deflation_solve(operator, config=config.solver_config)


def _verify_closed_form(config: ExperimentConfig, result: SpectrumResult):
    """Per-eigenvalue errors and per-level subspace angles vs the closed form."""
    h = config.hamiltonian
    b = config.solver_config.num_states
    reference = laplace_spectrum(h.d, h.n, b)
    ref_vals = np.array([v for v, _ in reference])
    errors = np.abs(np.asarray(result.eigenvalues) - ref_vals)

    # Levels are clusters of the exact values; a level sliced by the block
    # boundary cannot be compared as a subspace, only through its values.
    full_spectrum = laplace_spectrum(h.d, h.n, min(b + 1, h.n ** h.d))
    clusters = group_levels([v for v, _ in full_spectrum])
    basis_1d = laplace_eigenbasis(h.n)
    levels = []
    for lvl, sl in enumerate(clusters):
        if sl.start >= b:
            break
        complete = sl.stop <= b
        entry = {
            "level": lvl,
            "multiplicity": sl.stop - sl.start,
            "reference_value": float(ref_vals[sl.start]),
            "max_abs_error": float(errors[sl.start:min(sl.stop, b)].max()),
            "computed_spread": float(
                np.ptp(np.asarray(result.eigenvalues)[sl.start:min(sl.stop, b)])),
            "complete": complete,
            "angle_rad": None,
        }
        if complete:
            computed = np.column_stack([
                tt_to_dense(extract_state(result.states, j))
                for j in range(sl.start, sl.stop)
            ])
            analytic = np.column_stack([
                _kron_state(basis_1d, idx) for _, idx in full_spectrum[sl]
            ])
            entry["angle_rad"] = subspace_angle(computed, analytic).radians
        levels.append(entry)
    return ref_vals, errors, levels


def _kron_state(basis_1d: np.ndarray, idx) -> np.ndarray:
    v = basis_1d[:, idx[0]]
    for b in idx[1:]:
        v = np.kron(v, basis_1d[:, b])
    return v


def _verify_dense_oracle(config: ExperimentConfig, result: SpectrumResult):
    """Eigenvalue errors and per-state residuals vs a dense brute force."""
    b = config.solver_config.num_states
    operator = config.hamiltonian.build()
    dense = densify_operator(operator, cap=config.solver_config.densify_cap)
    spectrum = dense_eig(dense, b)
    errors = np.abs(np.asarray(result.eigenvalues) - spectrum.eigenvalues)
    residuals = []
    for j in range(b):
        x = tt_to_dense(extract_state(result.states, j))
        lam = float(result.eigenvalues[j])
        residuals.append(float(np.linalg.norm(dense @ x - lam * x)
                               / max(np.linalg.norm(x), 1e-300)))
    return spectrum.eigenvalues, errors, residuals


def run(config: ExperimentConfig) -> ResultRecord:
    """Execute one experiment; wall time excludes serialization."""
    t0 = perf_counter()
    result = _solve(config)
    record = ResultRecord(
        config=config.config_echo(),
        eigenvalues=[float(v) for v in result.eigenvalues],
        rank_profile=[int(r) for r in result.rank_profile],
        sweep_history=_history_record(result),
        wall_time_seconds=0.0,
        library_version=__version__,
        seed=config.solver_config.seed,
        converged=result.converged,
        num_sweeps=result.num_sweeps,
        solver=result.solver,
        notes=result.notes,
    )
    if config.verify == "closed-form":
        ref_vals, errors, levels = _verify_closed_form(config, result)
        record.reference = [float(v) for v in ref_vals]
        record.errors = [float(e) for e in errors]
        record.levels = levels
        angles = [lv["angle_rad"] for lv in levels if lv["angle_rad"] is not None]
        record.verification = {
            "mode": "closed-form",
            "tol_eig": config.tol_eig,
            "tol_angle": config.tol_angle,
            "max_abs_error": float(np.max(errors)),
            "max_angle_rad": float(max(angles)) if angles else None,
            "passed": bool(np.max(errors) <= config.tol_eig
                           and all(a <= config.tol_angle for a in angles)),
        }
    elif config.verify == "dense-oracle":
        ref_vals, errors, residuals = _verify_dense_oracle(config, result)
        record.reference = [float(v) for v in ref_vals]
        record.errors = [float(e) for e in errors]
        record.state_residuals = residuals
        record.verification = {
            "mode": "dense-oracle",
            "tol_eig": config.tol_eig,
            "tol_angle": config.tol_angle,
            "max_abs_error": float(np.max(errors)),
            "max_angle_rad": None,
            "passed": bool(np.max(errors) <= config.tol_eig),
        }
    record.wall_time_seconds = perf_counter() - t0
    return record


# ---------------------------------------------------------------------------
# scans
# ---------------------------------------------------------------------------

SCAN_AXES = ("d", "n", "b", "eps")


def _apply_axis(config: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if axis == "d":
        return replace(config, hamiltonian=replace(config.hamiltonian, d=int(value)))
    if axis == "n":
        return replace(config, hamiltonian=replace(config.hamiltonian, n=int(value)))
    if axis == "b":
        return replace(config, solver_config=replace(
            config.solver_config, num_states=int(value)))
    if axis == "eps":
        return replace(config, solver_config=replace(
            config.solver_config, eps=float(value)))
    raise InvalidArgument(f"axis must be one of {SCAN_AXES}")


def scan(config: ExperimentConfig, axis: str, values,
         reference_eps: float | None = None):
    """One run per axis value; failures are recorded per row, not raised.

    ``reference_eps`` (eps scans only) first runs the same problem at that
    tighter tolerance and reports each row's eigenvalue error against it.

    Returns ``(records, aggregate_rows)`` where records may contain ``None``
    for failed rows.
    """
    if axis not in SCAN_AXES:
        raise InvalidArgument(f"axis must be one of {SCAN_AXES}")
    if reference_eps is not None and axis != "eps":
        raise InvalidArgument("reference_eps only makes sense for an eps scan")

    ref_vals = None
    if reference_eps is not None:
        ref_cfg = _apply_axis(config, "eps", reference_eps)
        ref_vals = np.asarray(run(ref_cfg).eigenvalues)

    records = []
    rows = []
    for value in values:
        row = {"axis": axis, "value": float(value), "failed": False,
               "message": "", "min_eigenvalue": None, "error_max": None,
               "wall_time_s": None, "max_rank": None, "num_sweeps": None,
               "converged": None}
        try:
            rec = run(_apply_axis(config, axis, value))
        except Exception as exc:  # a bad row must not kill the scan
            records.append(None)
            row["failed"] = True
            row["message"] = f"{type(exc).__name__}: {exc}"
            rows.append(row)
            continue
        records.append(rec)
        row["min_eigenvalue"] = float(min(rec.eigenvalues))
        row["wall_time_s"] = float(rec.wall_time_seconds)
        row["max_rank"] = int(max(rec.rank_profile)) if rec.rank_profile else 1
        row["num_sweeps"] = int(rec.num_sweeps)
        row["converged"] = bool(rec.converged)
        if ref_vals is not None:
            k = min(len(ref_vals), len(rec.eigenvalues))
            row["error_max"] = float(
                np.abs(np.asarray(rec.eigenvalues[:k]) - ref_vals[:k]).max())
        elif rec.errors is not None:
            row["error_max"] = float(max(rec.errors))
        rows.append(row)
    return records, rows


# ---------------------------------------------------------------------------
# verification entry point
# ---------------------------------------------------------------------------

def verify(config: ExperimentConfig) -> ResultRecord:
    """Run with verification enabled and return the record (report included)."""
    if config.verify == "none":
        raise ConfigurationError(
            "verify mode 'none' has nothing to check; pick closed-form or "
            "dense-oracle")
    return run(config)


# ---------------------------------------------------------------------------
# output files
# ---------------------------------------------------------------------------

def write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _fmt(x) -> str:
    return f"{x:.15e}"


def write_eigenvalue_csv(path, record: ResultRecord):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        has_ref = record.reference is not None
        header = ["index", "eigenvalue"]
        if has_ref:
            header += ["reference", "abs_error"]
        writer.writerow(header)
        for i, v in enumerate(record.eigenvalues):
            row = [i, _fmt(v)]
            if has_ref:
                row += [_fmt(record.reference[i]), _fmt(record.errors[i])]
            writer.writerow(row)


def write_scan_csv(path, rows):
    fields = ["axis", "value", "min_eigenvalue", "error_max", "wall_time_s",
              "max_rank", "num_sweeps", "converged", "failed", "message"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            out = dict(row)
            for key in ("value", "min_eigenvalue", "error_max", "wall_time_s"):
                if out.get(key) is not None:
                    out[key] = _fmt(out[key])
            writer.writerow(out)


def fit_loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    xs = np.log(np.asarray(xs, dtype=np.float64))
    ys = np.log(np.asarray(ys, dtype=np.float64))
    if len(xs) < 2:
        raise InvalidArgument("need at least two points")
    return float(np.polyfit(xs, ys, 1)[0])
