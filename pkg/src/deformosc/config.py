"""Scenario configuration: one JSON document, parsed strictly.

Unknown keys are rejected and every error message names the offending key
path, e.g. ``oscillator.deformation.tau``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .algebra import DeformationSpec, OscillatorModel
from .bath import BathModel, constant_bath, table_bath, thermal_bath
from .dynamics import RK4, RK45, IntegratorConfig
from .liouvillian import DROP, POLICIES, REFLECTING

MODES = ("spectrum", "evolve", "evolve-populations", "steady", "partition", "validate")


class ConfigError(ValueError):
    pass


def _take(d: dict, path: str, allowed: dict[str, bool]) -> dict:
    """Check ``d`` is a mapping whose keys are in ``allowed`` (value = required)."""
    if not isinstance(d, dict):
        raise ConfigError(f"{path or '<root>'}: expected an object")
    for key in d:
        if key not in allowed:
            raise ConfigError(f"{_join(path, key)}: unknown key")
    for key, required in allowed.items():
        if required and key not in d:
            raise ConfigError(f"{_join(path, key)}: missing required key")
    return d


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _num(d: dict, path: str, key: str, default=None, *, lo=None, lo_open=False, integer=False):
    where = _join(path, key)
    if key not in d:
        if default is None:
            raise ConfigError(f"{where}: missing required key")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"{where}: expected an integer, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"{where}: must be finite")
    if lo is not None and (v <= lo if lo_open else v < lo):
        raise ConfigError(f"{where}: must be {'>' if lo_open else '>='} {lo}, got {v!r}")
    return int(v) if integer else float(v)


def _num_list(d: dict, path: str, key: str, min_len: int = 1) -> list[float]:
    where = _join(path, key)
    v = d.get(key)
    if not isinstance(v, list) or len(v) < min_len:
        raise ConfigError(f"{where}: expected a list of at least {min_len} numbers")
    for i, x in enumerate(v):
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise ConfigError(f"{where}[{i}]: expected a finite number, got {x!r}")
    return [float(x) for x in v]


def _choice(d: dict, path: str, key: str, options, default=None) -> str:
    where = _join(path, key)
    v = d.get(key, default)
    if v is None:
        raise ConfigError(f"{where}: missing required key")
    if v not in options:
        raise ConfigError(f"{where}: expected one of {list(options)}, got {v!r}")
    return v


@dataclass
class InitialState:
    kind: str
    n: int | None = None
    p: list[float] | None = None
    path: Path | None = None
    raw_path: str | None = None

    def to_dict(self) -> dict:
        if self.kind == "fock":
            return {"kind": "fock", "n": self.n}
        if self.kind == "diagonal-table":
            return {"kind": "diagonal-table", "p": list(self.p)}
        return {"kind": "matrix-file", "path": self.raw_path}


@dataclass
class ScenarioConfig:
    omega: float
    deformation: DeformationSpec
    n_max: int | str
    bath_spec: dict
    mode: str
    initial_state: InitialState | None = None
    integrator: IntegratorConfig | None = None
    integrator_raw: dict = field(default_factory=dict)
    truncation_policy: str = REFLECTING
    snapshots: bool = False
    seed: int = 0

    def bath(self) -> BathModel:
        b = self.bath_spec
        if b["kind"] == "thermal":
            return thermal_bath(b["lambda"], b["temperature"], self.omega)
        if b["kind"] == "constant":
            return constant_bath(b["lambda"], self.omega, b["dpp"], b["dqq"], b.get("dpq", 0.0))
        return table_bath(b["lambda"], self.omega, b["x"], b["dpp"], b["dqq"], b.get("dpq"))

    def resolved_n_max(self) -> int:
        if self.n_max != "auto":
            return int(self.n_max)
        from .stationary import auto_n_max

        return auto_n_max(self.deformation, self.bath())

    def model(self) -> OscillatorModel:
        return OscillatorModel(self.omega, self.deformation, self.resolved_n_max())

    def to_dict(self) -> dict:
        """Normalised echo; feeding it back in reproduces the run."""
        run: dict[str, Any] = {"mode": self.mode, "truncation_policy": self.truncation_policy, "seed": self.seed}
        if self.mode in ("evolve", "evolve-populations"):
            run["initial_state"] = self.initial_state.to_dict()
            run["integrator"] = self.integrator_raw
        if self.snapshots:
            run["snapshots"] = True
        return {
            "oscillator": {"omega": self.omega, "n_max": self.n_max, "deformation": self.deformation.to_dict()},
            "bath": self.bath_spec,
            "run": run,
        }


def _parse_deformation(d: dict, path: str) -> DeformationSpec:
    kind = _choice(d, path, "kind", ("identity", "q", "custom"))
    try:
        if kind == "identity":
            _take(d, path, {"kind": True})
            return DeformationSpec.identity()
        if kind == "q":
            _take(d, path, {"kind": True, "tau": False, "q": False})
            if ("tau" in d) == ("q" in d):
                raise ConfigError(f"{path}: give exactly one of 'tau' or 'q'")
            if "q" in d:
                return DeformationSpec.from_q(_num(d, path, "q", lo=0, lo_open=True))
            return DeformationSpec.q_deformation(_num(d, path, "tau"))
        _take(d, path, {"kind": True, "phi_table": True})
        return DeformationSpec.custom(_num_list(d, path, "phi_table", min_len=2))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_bath(d: dict, path: str) -> dict:
    kind = _choice(d, path, "kind", ("thermal", "constant", "table"))
    if kind == "thermal":
        _take(d, path, {"kind": True, "lambda": True, "temperature": True})
        return {
            "kind": kind,
            "lambda": _num(d, path, "lambda", lo=0),
            "temperature": _num(d, path, "temperature", lo=0),
        }
    if kind == "constant":
        _take(d, path, {"kind": True, "lambda": True, "dpp": True, "dqq": True, "dpq": False})
        return {
            "kind": kind,
            "lambda": _num(d, path, "lambda", lo=0),
            "dpp": _num(d, path, "dpp"),
            "dqq": _num(d, path, "dqq"),
            "dpq": _num(d, path, "dpq", 0.0),
        }
    _take(d, path, {"kind": True, "lambda": True, "x": True, "dpp": True, "dqq": True, "dpq": False})
    out = {
        "kind": kind,
        "lambda": _num(d, path, "lambda", lo=0),
        "x": _num_list(d, path, "x", 2),
        "dpp": _num_list(d, path, "dpp", 2),
        "dqq": _num_list(d, path, "dqq", 2),
    }
    if "dpq" in d:
        out["dpq"] = _num_list(d, path, "dpq", 2)
    for key in ("dpp", "dqq", "dpq"):
        if key in out and len(out[key]) != len(out["x"]):
            raise ConfigError(f"{_join(path, key)}: length {len(out[key])} differs from x ({len(out['x'])})")
    if any(b <= a for a, b in zip(out["x"], out["x"][1:])):
        raise ConfigError(f"{_join(path, 'x')}: must be strictly increasing")
    return out


def _parse_integrator(d: dict, path: str) -> tuple[IntegratorConfig, dict]:
    _take(d, path, {"method": False, "dt": False, "rtol": False, "atol": False, "t_final": True, "samples": False})
    method = _choice(d, path, "method", (RK4, RK45), RK4)
    raw: dict[str, Any] = {"method": method, "t_final": _num(d, path, "t_final", lo=0)}
    if "dt" in d:
        raw["dt"] = _num(d, path, "dt", lo=0, lo_open=True)
    raw["rtol"] = _num(d, path, "rtol", 1e-8, lo=0, lo_open=True)
    raw["atol"] = _num(d, path, "atol", 1e-10, lo=0, lo_open=True)
    samples = d.get("samples", 11)
    if isinstance(samples, list):
        raw["samples"] = _num_list(d, path, "samples")
    else:
        raw["samples"] = _num(d, path, "samples", 11, integer=True, lo=1)
    try:
        cfg = IntegratorConfig(
            t_final=raw["t_final"],
            method=method,
            dt=raw.get("dt"),
            rtol=raw["rtol"],
            atol=raw["atol"],
            samples=raw["samples"],
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return cfg, raw


def _parse_initial(d: dict, path: str, base_dir: Path) -> InitialState:
    kind = _choice(d, path, "kind", ("fock", "diagonal-table", "matrix-file"))
    if kind == "fock":
        _take(d, path, {"kind": True, "n": True})
        return InitialState(kind, n=_num(d, path, "n", integer=True, lo=0))
    if kind == "diagonal-table":
        _take(d, path, {"kind": True, "p": True})
        p = _num_list(d, path, "p")
        if any(x < 0 for x in p):
            raise ConfigError(f"{_join(path, 'p')}: populations must be >= 0")
        if abs(math.fsum(p) - 1.0) > 1e-12:
            raise ConfigError(f"{_join(path, 'p')}: populations must sum to 1")
        return InitialState(kind, p=p)
    _take(d, path, {"kind": True, "path": True})
    raw = d["path"]
    if not isinstance(raw, str):
        raise ConfigError(f"{_join(path, 'path')}: expected a string")
    full = Path(raw) if Path(raw).is_absolute() else base_dir / raw
    if not full.exists():
        raise ConfigError(f"{_join(path, 'path')}: file {full} does not exist")
    return InitialState(kind, path=full, raw_path=raw)


def parse_config(doc: dict, base_dir: Path | str = ".") -> ScenarioConfig:
    base_dir = Path(base_dir)
    _take(doc, "", {"oscillator": True, "bath": True, "run": True})
    osc = _take(doc["oscillator"], "oscillator", {"omega": True, "n_max": True, "deformation": False})
    omega = _num(osc, "oscillator", "omega", lo=0, lo_open=True)
    n_max = osc["n_max"]
    if n_max != "auto":
        n_max = _num(osc, "oscillator", "n_max", integer=True, lo=2)
    deformation = _parse_deformation(osc.get("deformation", {"kind": "identity"}), "oscillator.deformation")
    bath_spec = _parse_bath(doc["bath"], "bath")

    run = _take(
        doc["run"],
        "run",
        {
            "mode": True,
            "initial_state": False,
            "integrator": False,
            "truncation_policy": False,
            "snapshots": False,
            "seed": False,
        },
    )
    mode = _choice(run, "run", "mode", MODES)
    policy = _choice(run, "run", "truncation_policy", POLICIES, DROP if mode == "evolve" else REFLECTING)
    snapshots = run.get("snapshots", False)
    if not isinstance(snapshots, bool):
        raise ConfigError("run.snapshots: expected true or false")
    seed = _num(run, "run", "seed", 0, integer=True, lo=0)

    cfg = ScenarioConfig(
        omega=omega,
        deformation=deformation,
        n_max=n_max,
        bath_spec=bath_spec,
        mode=mode,
        truncation_policy=policy,
        snapshots=snapshots,
        seed=seed,
    )
    if mode in ("evolve", "evolve-populations"):
        if "initial_state" not in run:
            raise ConfigError("run.initial_state: required for evolution modes")
        if "integrator" not in run:
            raise ConfigError("run.integrator: required for evolution modes")
        cfg.initial_state = _parse_initial(run["initial_state"], "run.initial_state", base_dir)
        cfg.integrator, cfg.integrator_raw = _parse_integrator(run["integrator"], "run.integrator")
        if mode == "evolve" and policy != DROP:
            raise ConfigError("run.truncation_policy: the full equation only supports 'drop'")
        if mode == "evolve-populations" and cfg.initial_state.kind == "matrix-file":
            raise ConfigError("run.initial_state.kind: matrix-file needs mode 'evolve'")
    else:
        for key in ("initial_state", "integrator"):
            if key in run:
                raise ConfigError(f"run.{key}: not used by mode {mode!r}")

    # cross-module constraints, checked now rather than mid-run
    try:
        bath = cfg.bath()
        if n_max == "auto" and bath.lam == 0:
            raise ConfigError("oscillator.n_max: 'auto' needs lambda > 0")
        model = cfg.model()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"oscillator: {exc}") from exc
    if cfg.initial_state is not None:
        st = cfg.initial_state
        if st.kind == "fock" and st.n > model.n_max:
            raise ConfigError(f"run.initial_state.n: {st.n} exceeds n_max={model.n_max}")
        if st.kind == "diagonal-table" and len(st.p) != model.dim:
            raise ConfigError(f"run.initial_state.p: length {len(st.p)} but basis has {model.dim} levels")
    return cfg


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(doc, path.parent)


def read_matrix_file(path: Path, dim: int) -> np.ndarray:
    """Density matrix stored as {"dim": d, "entries": [[re, im], ...]} in row-major order."""
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict) or set(doc) != {"dim", "entries"}:
        raise ConfigError(f"{path}: expected keys 'dim' and 'entries'")
    if doc["dim"] != dim:
        raise ConfigError(f"{path}: dim {doc['dim']} does not match basis dimension {dim}")
    arr = np.asarray(doc["entries"], dtype=float)
    if arr.shape != (dim * dim, 2):
        raise ConfigError(f"{path}: entries must be {dim * dim} [re, im] pairs")
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(dim, dim)


def matrix_to_json(rho: np.ndarray) -> dict:
    flat = np.asarray(rho, dtype=complex).ravel()
    return {"dim": int(rho.shape[0]), "entries": [[float(z.real), float(z.imag)] for z in flat]}
