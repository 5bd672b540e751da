import csv
import json

import numpy as np
import pytest

from nepv.cli import SUMMARY_KEYS, fmt, main
from nepv.config import ConfigError, initial_guess, parse_config
from nepv.problems import GpeProblem, HeavisideTraceProblem, save_potential_csv

RUN = """
[problem]
family = scalar_sine
alpha = 0.5
[solver]
method = j_version
selection = nearest_target
target = rayleigh
[study]
init = ones
"""

SWEEP = """
[problem]
family = scalar_sine
[solver]
selection = nearest_target
[study]
alphas = {alphas}
methods = a_version, j_version, newton
init = ones
"""


def _write(tmp_path, text, name="cfg.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_parse_defaults():
    cfg = parse_config("[problem]\nfamily = heaviside\n")
    assert cfg.family == "heaviside" and cfg.problem_params == {"alpha": 0.5, "n": 10, "p": 3}
    assert cfg.solver.method == "a_version" and cfg.init == "random" and cfg.seed == 0
    prob = cfg.make_problem(2.0)
    assert isinstance(prob, HeavisideTraceProblem) and prob.alpha == 2.0


@pytest.mark.parametrize(
    "text, field",
    [
        ("[solver]\nmethod = a\n", "problem.family"),
        ("[problem]\nfamily = other\n", "problem.family"),
        ("[problem]\nfamily = scalar_sine\n[solver]\nmethod = fast\n", "solver.method"),
        ("[problem]\nfamily = scalar_sine\nalpha = big\n", "problem.alpha"),
        ("[problem]\nfamily = scalar_sine\n[solver]\ntol = -1\n", "solver"),
        ("[problem]\nfamily = scalar_sine\n[solver]\nselection = cluster_lstsq\ndelta = 2\n", "solver.selection"),
        ("[problem]\nfamily = heaviside\np = 12\n", "problem.p"),
        ("[problem]\nfamily = gpe\npotential = missing.csv\n", "problem.potential"),
        ("[problem]\nfamily = heaviside\n[study]\nmethods = j_inverse\n", "study.methods"),
        ("[problem]\nfamily = scalar_sine\n[study]\ninit = zeros\n", "study.init"),
    ],
)
def test_parse_errors_name_field(text, field):
    with pytest.raises(ConfigError, match=field.replace(".", r"\.")):
        parse_config(text)


def test_gpe_potential_file(tmp_path):
    pot = np.full((4, 4), 0.25)
    save_potential_csv(tmp_path / "pot.csv", pot, 3.0)
    cfg = parse_config("[problem]\nfamily = gpe\nN = 4\nL = 3\nb = 7\npotential = pot.csv\n", str(tmp_path))
    prob = cfg.make_problem()
    assert isinstance(prob, GpeProblem) and prob.b == 7.0
    assert np.array_equal(prob.potential, pot)
    with pytest.raises(ConfigError, match="do not match"):
        parse_config("[problem]\nfamily = gpe\nN = 5\nL = 3\npotential = pot.csv\n", str(tmp_path))


def test_initial_guess_modes():
    prob = HeavisideTraceProblem(8, 3, 1.0)
    V = initial_guess(prob, "random", 3)
    assert np.allclose(V.T @ V, np.eye(3))
    assert np.array_equal(V, initial_guess(prob, "random", 3))
    Vl = initial_guess(prob, "linear", 3)
    w, Q = np.linalg.eigh(prob.A0)
    assert np.linalg.norm(Vl @ Vl.T - Q[:, :3] @ Q[:, :3].T) <= 1e-10
    with pytest.raises(ConfigError):
        initial_guess(prob, "ones")


def test_fmt_round_trip():
    x = 0.1 + 0.2
    assert float(fmt(x)) == x
    assert fmt(None) == "" and fmt(float("nan")) == ""


def test_cli_run(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", _write(tmp_path, RUN), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert set(summary) == set(SUMMARY_KEYS)
    assert summary["status"] == "converged" and summary["final_residual"] <= 1e-10
    rows = _read_csv(out / "trace.csv")
    assert list(rows[0]) == ["iter", "error", "residual", "orth_defect", "eig_1"]
    assert [int(r["iter"]) for r in rows] == list(range(len(rows)))


def test_cli_run_nonconvergence(tmp_path):
    text = RUN.replace("[solver]", "[solver]\nmax_iter = 1")
    assert main(["run", "--config", _write(tmp_path, text), "--out", str(tmp_path / "o")]) == 1


def test_cli_config_error_exit_code(tmp_path, capsys):
    text = RUN.replace("method = j_version", "method = nope")
    assert main(["run", "--config", _write(tmp_path, text)]) == 2
    assert "solver.method" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "absent.ini")]) == 2


def test_cli_sweep(tmp_path):
    out = tmp_path / "sw"
    cfg = _write(tmp_path, SWEEP.format(alphas="0, 0.5, 1, 5"))
    assert main(["sweep-alpha", "--config", cfg, "--out", str(out), "--jobs", "3"]) == 0
    rows = _read_csv(out / "sweep.csv")
    assert list(rows[0]) == ["alpha", "method", "iters_to_tol", "final_residual", "est_order"]
    assert len(rows) == 12
    for r in rows:
        if float(r["alpha"]) == 0.0 and r["method"] != "newton":
            assert int(r["iters_to_tol"]) <= 2
        assert (out / f"alpha={r['alpha']}" / r["method"] / "trace.csv").exists()
    scf = [int(r["iters_to_tol"]) for r in rows if r["method"] == "a_version"]
    assert all(a <= b for a, b in zip(scf[1:], scf[2:]))


def test_cli_sweep_empty_alphas(tmp_path):
    assert main(["sweep-alpha", "--config", _write(tmp_path, SWEEP.format(alphas="")), "--out", str(tmp_path)]) == 2


def test_cli_sweep_deterministic_across_jobs(tmp_path):
    cfg = _write(tmp_path, SWEEP.format(alphas="0.5, 1"))
    main(["sweep-alpha", "--config", cfg, "--out", str(tmp_path / "a"), "--jobs", "1"])
    main(["sweep-alpha", "--config", cfg, "--out", str(tmp_path / "b"), "--jobs", "4"])
    for f in (tmp_path / "a").rglob("*.csv"):
        assert f.read_bytes() == (tmp_path / "b" / f.relative_to(tmp_path / "a")).read_bytes()


def test_cli_single_step(tmp_path):
    text = SWEEP.format(alphas="1e-3, 3e-3, 1e-2, 3e-2, 1e-1")
    out = tmp_path / "ss"
    assert main(["single-step", "--config", _write(tmp_path, text), "--out", str(out)]) == 0
    rows = _read_csv(out / "single_step.csv")
    assert list(rows[0]) == ["alpha", "err_A", "err_J", "pred_A", "pred_J"]
    a = np.array([float(r["alpha"]) for r in rows])
    for key in ("err_A", "err_J"):
        e = np.array([float(r[key]) for r in rows])
        assert 0.9 <= np.polyfit(np.log(a), np.log(e), 1)[0] <= 1.1


def test_cli_order(tmp_path):
    text = RUN + "methods = a_version, j_version, j_inverse\n"
    out = tmp_path / "ord"
    assert main(["order", "--config", _write(tmp_path, text), "--out", str(out)]) == 0
    orders = {m: json.loads((out / m / "order.json").read_text())["order"]
              for m in ("a_version", "j_version", "j_inverse")}
    assert 0.8 <= orders["a_version"] <= 1.2
    assert orders["j_version"] >= 1.8
    assert 0.8 <= orders["j_inverse"] <= 1.2


def test_cli_logging_env(tmp_path):
    import os
    import subprocess
    import sys

    cfg = _write(tmp_path, RUN)
    cmd = [sys.executable, "-m", "nepv.cli", "run", "--config", cfg, "--out", str(tmp_path / "o")]
    quiet = subprocess.run(cmd, capture_output=True, text=True, env={**os.environ, "NEPV_LOG": "error"})
    loud = subprocess.run(cmd, capture_output=True, text=True, env={**os.environ, "NEPV_LOG": "debug"})
    assert quiet.returncode == loud.returncode == 0
    assert quiet.stderr == ""
    assert "converged" in loud.stderr and "residual" in loud.stderr
