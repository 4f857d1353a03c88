import csv
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from deformosc.cli import main
from deformosc.config import ConfigError, load_config, matrix_to_json, parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "scripts" / "configs"


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def base(mode="steady", **run):
    return {
        "oscillator": {"omega": 1.0, "n_max": 10, "deformation": {"kind": "q", "tau": 0.1}},
        "bath": {"kind": "thermal", "lambda": 1.0, "temperature": 1.0},
        "run": {"mode": mode, **run},
    }


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


@pytest.mark.parametrize("cfg", sorted(p.name for p in CONFIGS.glob("*.json")))
def test_shipped_configs_run_and_are_deterministic(cfg, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["run", "--config", str(CONFIGS / cfg), "--out", str(out)]) == 0
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir())
    assert "summary.json" in names
    assert names == sorted(p.name for p in outs[1].iterdir())
    for name in names:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name


def test_config_echo_round_trips(tmp_path):
    for cfg in CONFIGS.glob("*.json"):
        out = tmp_path / cfg.stem
        main(["run", "--config", str(cfg), "--out", str(out)])
        echo = json.loads((out / "summary.json").read_text())["config"]
        again = parse_config(echo, CONFIGS)
        assert again.to_dict() == echo


def test_default_output_dir(tmp_path):
    p = write(tmp_path, base("spectrum"), "spec.json")
    assert main(["run", "--config", str(p)]) == 0
    rows = read_csv(tmp_path / "spec_out" / "spectrum.csv")
    assert rows[0] == ["n", "E", "Omega"]
    assert len(rows) == 12
    assert float(rows[1][1]) == pytest.approx(0.5, rel=1e-15)


def test_unknown_key_rejected(tmp_path, capsys):
    doc = base()
    doc["bath"]["temprature"] = 2.0
    code = main(["run", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "bath.temprature" in capsys.readouterr().err


@pytest.mark.parametrize(
    "mutate,needle",
    [
        (lambda d: d["oscillator"].update(n_max=1), "oscillator.n_max"),
        (lambda d: d["oscillator"].update(omega=-1), "oscillator.omega"),
        (lambda d: d["run"].update(mode="nope"), "run.mode"),
        (lambda d: d["run"].update(integrator={"t_final": 1}), "run.integrator"),
        (lambda d: d["oscillator"]["deformation"].update(kind="custom"), "oscillator.deformation"),
    ],
)
def test_invalid_configs(tmp_path, mutate, needle):
    doc = base()
    mutate(doc)
    with pytest.raises(ConfigError, match=needle.replace(".", r"\.")):
        parse_config(doc)


def test_invalid_json_exit_code(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "o")]) == 2


def test_strict_mode_rejects_bad_bath(tmp_path):
    doc = base()
    doc["bath"] = {"kind": "constant", "lambda": 1.0, "dpp": 0.1, "dqq": 0.1}
    p = write(tmp_path, doc)
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "s"), "--strict"]) == 2
    summary = json.loads((tmp_path / "s" / "summary.json").read_text())
    assert summary["results"]["bath_validation"]["ok"] is False
    assert summary["status"] == "validation_failed"
    # without --strict the steady state is attempted and fails at run time
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "l")]) == 1


def test_matrix_file_initial_state_and_snapshots(tmp_path):
    dim = 9
    psi = np.zeros(dim, complex)
    psi[2], psi[3] = 0.8, 0.6j
    rho = np.outer(psi, psi.conj())
    (tmp_path / "rho0.json").write_text(json.dumps(matrix_to_json(rho)))
    doc = base(
        "evolve",
        initial_state={"kind": "matrix-file", "path": "rho0.json"},
        integrator={"t_final": 1.0, "samples": [0.0, 0.5, 1.0]},
        snapshots=True,
    )
    doc["oscillator"]["n_max"] = 8
    doc["bath"]["temperature"] = 0.0
    p = write(tmp_path, doc)
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "o")]) == 0
    snap = json.loads((tmp_path / "o" / "snapshots.json").read_text())
    assert snap["dim"] == dim and snap["times"] == [0.0, 0.5, 1.0]
    first = np.array(snap["states"][0])
    np.testing.assert_array_equal(first[:, 0] + 1j * first[:, 1], rho.ravel())
    rows = read_csv(tmp_path / "o" / "trajectory.csv")
    assert rows[0] == ["t", "mean_N", "energy", "trace", "trace_leak", "min_eig"]
    assert float(rows[1][1]) == pytest.approx(0.64 * 2 + 0.36 * 3, rel=1e-14)


def test_matrix_file_wrong_dim(tmp_path):
    (tmp_path / "rho0.json").write_text(json.dumps(matrix_to_json(np.eye(3))))
    doc = base("evolve", initial_state={"kind": "matrix-file", "path": "rho0.json"}, integrator={"t_final": 1.0})
    assert main(["run", "--config", str(write(tmp_path, doc)), "--out", str(tmp_path / "o")]) == 2  # invalid input, not a runtime failure


def test_validate_subcommand(tmp_path, capsys):
    code = main(["validate", "--config", str(CONFIGS / "validate_general_bath.json"), "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "PASS generator_matches_operator_form" in out
    assert "FAIL" not in out
    rows = read_csv(tmp_path / "checks.csv")
    assert rows[0] == ["name", "passed", "value", "tolerance"]
    assert all(r[1] == "1" for r in rows[1:])


def test_timings_only_on_request(tmp_path):
    p = write(tmp_path, base())
    main(["run", "--config", str(p), "--out", str(tmp_path / "a")])
    main(["run", "--config", str(p), "--out", str(tmp_path / "b"), "--timings"])
    assert "timings" not in json.loads((tmp_path / "a" / "summary.json").read_text())
    assert json.loads((tmp_path / "b" / "summary.json").read_text())["timings"]["wall_seconds"] >= 0


def test_steady_summary_contents(tmp_path):
    doc = base()
    doc["oscillator"]["n_max"] = "auto"
    p = write(tmp_path, doc)
    assert main(["run", "--config", str(p), "--out", str(tmp_path / "o")]) == 0
    res = json.loads((tmp_path / "o" / "summary.json").read_text())["results"]
    assert res["n_max"] == 17
    assert res["detailed_balance_residual"] <= 1e-14
    assert res["boltzmann_max_deviation"] <= 1e-12
    assert res["tail_mass"] < 1e-12


def test_thread_env_and_module_entry(tmp_path):
    p = write(tmp_path, base("spectrum"))
    env = {"DEFORMOSC_THREADS": "1", "PATH": "/usr/bin:/bin"}
    proc = subprocess.run(
        [sys.executable, "-m", "deformosc", "run", "--config", str(p), "--out", str(tmp_path / "o")],
        env=env,
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "o" / "spectrum.csv").exists()


def test_load_config_relative_paths(tmp_path):
    sub = tmp_path / "nested"
    sub.mkdir()
    (sub / "r.json").write_text(json.dumps(matrix_to_json(np.eye(11) / 11)))
    doc = base("evolve", initial_state={"kind": "matrix-file", "path": "r.json"}, integrator={"t_final": 0.1})
    cfg = load_config(write(sub, doc))
    assert cfg.initial_state.path == sub / "r.json"
