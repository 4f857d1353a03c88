"""Command-line scenario runner.

    deformosc run --config scenario.json [--out DIR] [--strict] [--timings]
    deformosc validate --config scenario.json [--out DIR]

Exit codes: 0 success, 2 validation failure (bad config, flagged bath in
strict mode, failed invariant), 1 runtime error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from contextlib import nullcontext
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import omega_shift
from .bath import validate_bath
from .checks import run_checks
from .config import ConfigError, ScenarioConfig, load_config, matrix_to_json, read_matrix_file
from .dynamics import IntegrationError, Trajectory, evolve_density, evolve_populations
from .liouvillian import REFLECTING, build_population_generator
from .stationary import (
    detailed_balance_residual,
    equilibrium_energy,
    partition_function,
    steady_populations,
    thermal_boltzmann,
)

log = logging.getLogger("deformosc")

THREADS_ENV = "DEFORMOSC_THREADS"
EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2


def fmt(x: float) -> str:
    return "%.17g" % x


def write_csv(path: Path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else str(v) if isinstance(v, (int, np.integer)) else fmt(float(v)) for v in row))
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _clean(obj):
    """Make results JSON-safe: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def _trajectory_outputs(out_dir: Path, traj: Trajectory, keep_snapshots: bool) -> dict:
    write_csv(out_dir / "trajectory.csv", Trajectory.COLUMNS, traj.rows())
    res = {
        "final": {k: getattr(traj, k)[-1] for k in ("mean_N", "energy", "trace", "trace_leak", "min_eig")},
        "max_trace_leak": float(np.max(np.abs(traj.trace_leak))),
        "min_eig_over_run": float(np.min(traj.min_eig)),
        "dt_used": traj.dt_used,
        "files": ["trajectory.csv"],
    }
    if keep_snapshots and traj.snapshots is not None:
        states = []
        for s in traj.snapshots:
            mat = s if s.ndim == 2 else np.diag(s)
            states.append(matrix_to_json(mat)["entries"])
        write_json(out_dir / "snapshots.json", {"dim": int(traj.snapshots[0].shape[0]), "times": traj.times.tolist(), "states": states})
        res["files"].append("snapshots.json")
    return res


def _initial_state(cfg: ScenarioConfig, dim: int, as_matrix: bool):
    st = cfg.initial_state
    if st.kind == "matrix-file":
        return read_matrix_file(st.path, dim)
    p = np.zeros(dim)
    if st.kind == "fock":
        p[st.n] = 1.0
    else:
        p[:] = st.p
    return np.diag(p).astype(complex) if as_matrix else p


def execute(cfg: ScenarioConfig, out_dir: Path, strict: bool) -> tuple[int, dict]:
    model = cfg.model()
    bath = cfg.bath()
    report = validate_bath(bath, model)
    results: dict = {"n_max": model.n_max, "bath_validation": report.to_dict()}
    if not report.ok:
        for issue in report.issues:
            log.warning("bath check %s failed at n=%d: %s", issue.check, issue.n, issue.message)
        if strict:
            return EXIT_INVALID, results

    mode = cfg.mode
    if mode == "spectrum":
        n = np.arange(model.dim)
        write_csv(out_dir / "spectrum.csv", ("n", "E", "Omega"), zip(n, model.energies(), omega_shift(model.deformation, n)))
        results["files"] = ["spectrum.csv"]
    elif mode == "evolve":
        rho0 = _initial_state(cfg, model.dim, as_matrix=True)
        traj = evolve_density(model, bath, rho0, cfg.integrator, keep_snapshots=cfg.snapshots)
        results.update(_trajectory_outputs(out_dir, traj, cfg.snapshots))
    elif mode == "evolve-populations":
        p0 = _initial_state(cfg, model.dim, as_matrix=False)
        traj = evolve_populations(model, bath, p0, cfg.integrator, cfg.truncation_policy, keep_snapshots=True)
        results.update(_trajectory_outputs(out_dir, traj, cfg.snapshots))
        write_csv(out_dir / "populations.csv", ("n", "P"), zip(range(model.dim), traj.snapshots[-1]))
        results["files"].append("populations.csv")
    elif mode == "steady":
        p = steady_populations(model, bath)
        write_csv(out_dir / "steady.csv", ("n", "P"), zip(range(model.dim), p))
        gen = build_population_generator(model, bath, REFLECTING)
        results.update(
            detailed_balance_residual=detailed_balance_residual(model, bath, p),
            stationarity_residual=float(np.max(np.abs(gen(p)))),
            tail_mass=float(p[-1]),
            mean_N=float(np.dot(np.arange(model.dim), p)),
            energy=float(np.dot(model.energies(), p)),
            files=["steady.csv"],
        )
        if bath.is_thermal:
            results["boltzmann_max_deviation"] = float(np.max(np.abs(p - thermal_boltzmann(model, bath.temperature))))
    elif mode == "partition":
        if not bath.is_thermal:
            raise ConfigError("bath.kind: partition mode needs a thermal bath")
        temp = bath.temperature
        eq = equilibrium_energy(model, temp)
        results["equilibrium"] = eq.to_dict()
        if temp > 0:
            z = partition_function(model, temp)
            results["partition"] = {"value": z.value, "log_value": z.log_value, "terms_used": z.terms_used, "tail_bound": z.tail_bound}
        p = thermal_boltzmann(model, temp)
        write_csv(out_dir / "boltzmann.csv", ("n", "P"), zip(range(model.dim), p))
        results["files"] = ["boltzmann.csv"]
    elif mode == "validate":
        return _validate(cfg, out_dir, model, bath, results)
    return EXIT_OK, results


def _validate(cfg, out_dir, model, bath, results):
    checks = run_checks(model, bath, seed=cfg.seed)
    write_csv(out_dir / "checks.csv", ("name", "passed", "value", "tolerance"), ((c.name, int(c.passed), c.value, c.tolerance) for c in checks))
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} value={c.value:.3e} tol={c.tolerance:.1e}")
    results["checks"] = [c.to_dict() for c in checks]
    results["files"] = ["checks.csv"]
    return (EXIT_OK if all(c.passed for c in checks) else EXIT_INVALID), results


def _thread_limit():
    raw = os.environ.get(THREADS_ENV, "0")
    try:
        n = int(raw)
    except ValueError:
        log.warning("ignoring %s=%r (not an integer)", THREADS_ENV, raw)
        return nullcontext()
    if n <= 0:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def run_scenario(config_path, out_dir=None, strict: bool = False, timings: bool = False, force_mode: str | None = None) -> int:
    t_start = time.perf_counter()
    config_path = Path(config_path)
    out_dir = Path(out_dir) if out_dir is not None else config_path.parent / (config_path.stem + "_out")
    try:
        cfg = load_config(config_path)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if force_mode is not None:
        cfg.mode = force_mode
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"cannot create output directory {out_dir}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    summary = {"tool": "deformosc", "version": __version__, "config": cfg.to_dict(), "mode": cfg.mode, "strict": strict}
    try:
        with _thread_limit():
            code, results = execute(cfg, out_dir, strict)
        summary["status"] = "ok" if code == EXIT_OK else "validation_failed"
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        code, results = EXIT_INVALID, {"error": str(exc)}
        summary["status"] = "invalid_config"
    except (IntegrationError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        code, results = EXIT_RUNTIME, {"error": str(exc)}
        summary["status"] = "runtime_error"
    elapsed = time.perf_counter() - t_start
    summary["results"] = results
    summary["exit_code"] = code
    if timings:
        summary["timings"] = {"wall_seconds": elapsed}
    log.info("finished mode=%s in %.3f s", cfg.mode, elapsed)
    try:
        write_json(out_dir / "summary.json", _clean(summary))
    except OSError as exc:
        print(f"cannot write summary: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deformosc", description="Damped deformed quantum oscillator scenarios")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the scenario described by a JSON config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", default=None, help="output directory (default: <config stem>_out next to the config)")
    run.add_argument("--strict", action="store_true", help="abort with exit code 2 if the bath fails validation")
    run.add_argument("--timings", action="store_true", help="include wall-clock timings in summary.json")

    val = sub.add_parser("validate", help="run the invariant suite on the config's parameters")
    val.add_argument("--config", required=True)
    val.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        return run_scenario(args.config, args.out, strict=args.strict, timings=args.timings)
    return run_scenario(args.config, args.out, force_mode="validate")


if __name__ == "__main__":
    sys.exit(main())
