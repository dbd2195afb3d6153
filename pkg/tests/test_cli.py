import io
import subprocess
import sys

import numpy as np
import pytest

from capdyn import __version__
from capdyn.cli import main
from capdyn.experiments import ExperimentSpec, run_experiment
from capdyn.io import read_table
from capdyn.kinematics import closed_form_general, closed_form_weighted, integrate_coupled, integrate_frozen
from capdyn.model import ModelParams, complement_all, output
from capdyn.relatedness import complementarity_matrix, coupling_matrix
from capdyn.riccati import coefficients_single, growth_rate_multi

Q = np.array([[0.5, 0.5, 0.0], [0.9, 0.2, 0.7], [0.3, 0.0, 0.6]])
R = np.array([[0.2, 0.6, 0.9], [0.5, 0.1, 0.4]])


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def matrices(tmp_path):
    q_path = tmp_path / "q.csv"
    r_path = tmp_path / "r.csv"
    q_path.write_text(
        "activity,b1,b2,b3\n" + "".join(f"p{i + 1}," + ",".join(map(repr, row)) + "\n" for i, row in enumerate(Q.tolist()))
    )
    r_path.write_text(
        "economy,b1,b2,b3\n" + "".join(f"c{i + 1}," + ",".join(map(repr, row)) + "\n" for i, row in enumerate(R.tolist()))
    )
    return q_path, r_path


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        from capdyn.cli import build_parser

        build_parser().parse_args(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip() == f"capdyn {__version__}"


def test_usage_errors_exit_2():
    assert run("frobnicate")[0] == 2
    assert run("phase", "--bogus")[0] == 2
    assert run()[0] == 2


def test_validation_errors_exit_1(tmp_path):
    code, _, err = run("phase", "--qbar", "1.5")
    assert code == 1 and "q_bar" in err
    code, _, err = run("phase", "--gamma", "2", "--qbar", "0.5")
    assert code == 1 and "gamma" in err
    code, _, err = run("eval", "--q", str(tmp_path / "missing.csv"), "--r", str(tmp_path / "missing.csv"))
    assert code == 1 and "missing.csv" in err
    assert run("simulate", "--r0", "0.5")[0] == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("activity,b1\np1,1.2\n")
    code, _, err = run("relatedness", "--q", str(bad))
    assert code == 1 and "1.2" in err


def test_phase_example():
    code, out, _ = run("phase", "--gamma", "1", "--delta", "0.2", "--qbar", "0.3")
    assert code == 0
    lines = dict(line.split(": ") for line in out.strip().splitlines())
    assert lines["regime"] == "unconditional"
    assert float(lines["r_star"]) == 0.0
    assert float(lines["q_crit"]) == pytest.approx(0.5556, abs=1e-4)


def test_phase_without_threshold():
    code, out, _ = run("phase", "--gamma", "0.5", "--delta", "1", "--qbar", "0.9")
    assert code == 0 and "q_crit: none" in out


def test_phase_sweep_matches_library(tmp_path):
    assert run("phase", "--sweep", "--delta", "0", "--n-q", "11", "--n-delta", "6", "--out", str(tmp_path))[0] == 0
    got = read_table(tmp_path / "phase_sweep.csv")
    spec = ExperimentSpec("phase-sweep", ModelParams(1.0, 0.0),
                          {"q": np.linspace(0, 1, 11), "delta_ratio": np.linspace(0, 2.5, 6)})
    want = run_experiment(spec).tables["phase_sweep"]
    assert got["r_star"] == list(want["r_star"])
    assert got["regime"] == list(want["regime"])


def test_simulate_fixed_point(tmp_path):
    code, _, _ = run("simulate", "--closed-form", "--r0", "1", "--qbar", "0.9", "--rate", "0.25",
                     "--t-end", "10", "--out", str(tmp_path))
    assert code == 0
    table = read_table(tmp_path / "trajectory.csv")
    assert table["t"][0] == 0.0 and table["t"][-1] == 10.0
    assert all(v == 1.0 for v in table["r"])


def test_simulate_modes_match_library(tmp_path):
    t = np.linspace(0, 20, 201)
    run("simulate", "--r0", "0.3", "--qbar", "0.9", "--rate", "0.25", "--t-end", "20", "--out", str(tmp_path / "a"))
    assert read_table(tmp_path / "a" / "trajectory.csv")["r"] == list(closed_form_weighted(0.3, 0.9, 0.25, t))

    run("simulate", "--r0", "0.3", "--qbar", "0.8", "--delta", "0.2", "--t-end", "20", "--out", str(tmp_path / "b"))
    co = coefficients_single(0.8, ModelParams(1.0, 0.2))
    assert read_table(tmp_path / "b" / "trajectory.csv")["r"] == list(closed_form_general(0.3, co, t))

    run("simulate", "--numeric", "--r0", "0.3", "--qbar", "0.8", "--delta", "0.2", "--t-end", "20",
        "--out", str(tmp_path / "c"))
    num = read_table(tmp_path / "c" / "trajectory.csv")["r"]
    assert num == list(integrate_frozen(co, 0.3, t).values)
    assert np.max(np.abs(np.array(num) - closed_form_general(0.3, co, t))) < 1e-8


def test_simulate_rate_needs_zero_delta():
    assert run("simulate", "--r0", "0.3", "--qbar", "0.9", "--rate", "0.25", "--delta", "0.1")[0] == 1


def test_simulate_coupled_matches_library(tmp_path, matrices):
    q_path, r_path = matrices
    code, _, _ = run("simulate", "--coupled", "--q", str(q_path), "--r", str(r_path), "--t-end", "2",
                     "--dt", "0.5", "--delta", "0.1", "--out", str(tmp_path / "o"))
    assert code == 0
    got = read_table(tmp_path / "o" / "trajectory.csv")
    traj = integrate_coupled(Q, R, ModelParams(1.0, 0.1), np.linspace(0, 2, 5))
    assert got["c2:b3"] == list(traj.values[:, 1, 2])
    assert list(got) == ["t"] + [f"c{c}:b{b}" for c in (1, 2) for b in (1, 2, 3)]


def test_eval_matches_library(tmp_path, matrices):
    q_path, r_path = matrices
    assert run("eval", "--q", str(q_path), "--r", str(r_path), "--gamma", "0.8", "--out", str(tmp_path / "o"))[0] == 0
    out = read_table(tmp_path / "o" / "output.csv")
    Y = output(Q, R)
    assert out["p2"] == list(Y[:, 1])
    partials = read_table(tmp_path / "o" / "partials.csv")
    E = complement_all(Q, R)
    assert partials["complement"] == list(E.reshape(-1))
    growth = read_table(tmp_path / "o" / "growth_rate.csv")
    assert growth["b1"] == list(growth_rate_multi(Q, R, ModelParams(0.8, 0.0))[:, 0])


def test_eval_prints_to_stdout(matrices):
    q_path, r_path = matrices
    code, out, _ = run("eval", "--q", str(q_path), "--r", str(r_path))
    assert code == 0
    assert "# output" in out and "# partials" in out and "# growth_rate" in out


def test_relatedness_matches_library(tmp_path, matrices):
    q_path, r_path = matrices
    w_path = tmp_path / "w.csv"
    w_path.write_text("activity,weight\np1,1\np2,2\np3,0.5\n")
    code, _, _ = run("relatedness", "--q", str(q_path), "--r", str(r_path), "--weights", str(w_path),
                     "--out", str(tmp_path / "o"))
    assert code == 0
    C = complementarity_matrix(Q, [1.0, 2.0, 0.5]).C
    comp = read_table(tmp_path / "o" / "complementarity.csv")
    assert comp["b2"] == list(C[:, 1])
    coup = read_table(tmp_path / "o" / "coupling.csv")
    M = coupling_matrix(Q, R, ModelParams(1.0, 0.0), 1)
    rows = [i for i, (e, b, o) in enumerate(zip(coup["economy"], coup["capability"], coup["other"]))
            if (e, b, o) == ("c2", "b1", "b3")]
    assert coup["coupling"][rows[0]] == M[0, 2]


def test_bifurcation_matches_library(tmp_path):
    assert run("bifurcation", "--delta", "0.2", "--n-q", "41", "--out", str(tmp_path))[0] == 0
    got = read_table(tmp_path / "bifurcation.csv")
    want = run_experiment(ExperimentSpec("bifurcation", ModelParams(1.0, 0.2), {"q": np.linspace(0, 1, 41)}))
    assert got["r_star"] == list(want.tables["bifurcation"]["r_star"])


def test_figures_writes_all_and_is_deterministic(tmp_path):
    assert run("figures", "--name", "all", "--svg", "--out", str(tmp_path / "a"))[0] == 0
    assert run("figures", "--name", "all", "--svg", "--out", str(tmp_path / "b"))[0] == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "bifurcation.csv" in names and "gap.svg" in names and "trajectories_E.csv" in names
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    want = run_experiment(ExperimentSpec("gap")).tables["gap"]
    assert read_table(tmp_path / "a" / "gap.csv")["gap[0.5-0.1]"] == list(want["gap[0.5-0.1]"])


def test_figures_requires_out():
    assert run("figures", "--name", "gap")[0] == 1


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("gamma = 1\ndelta = 0.2\nq_bar = 0.9\n")
    code, out, _ = run("phase", "--config", str(cfg))
    assert code == 0 and "conditional" in out and "r_star: 0.34444444444444444" in out
    code, out, _ = run("phase", "--config", str(cfg), "--qbar", "0.3")
    assert "unconditional" in out
    cfg.write_text("colour = red\n")
    assert run("phase", "--config", str(cfg))[0] == 1


def test_ensemble_seed_and_env(tmp_path, monkeypatch):
    args = ("ensemble", "--n-economies", "6", "--t-end", "4", "--delta", "0")
    run(*args, "--seed", "3", "--out", str(tmp_path / "a"))
    run(*args, "--seed", "3", "--out", str(tmp_path / "b"))
    run(*args, "--seed", "4", "--out", str(tmp_path / "c"))
    monkeypatch.setenv("CAPDYN_SEED", "3")
    run(*args, "--out", str(tmp_path / "d"))
    read = lambda d: (tmp_path / d / "ensemble_members.csv").read_bytes()  # noqa: E731
    assert read("a") == read("b") == read("d")
    assert read("a") != read("c")
    monkeypatch.setenv("CAPDYN_SEED", "x")
    assert run(*args)[0] == 1


def test_inputs_not_modified(tmp_path, matrices):
    q_path, r_path = matrices
    before = (q_path.read_bytes(), r_path.read_bytes())
    run("eval", "--q", str(q_path), "--r", str(r_path), "--out", str(tmp_path / "o"))
    run("relatedness", "--q", str(q_path), "--r", str(r_path), "--out", str(tmp_path / "o"))
    run("simulate", "--coupled", "--q", str(q_path), "--r", str(r_path), "--t-end", "1", "--out", str(tmp_path / "o"))
    assert (q_path.read_bytes(), r_path.read_bytes()) == before


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "capdyn", "phase", "--qbar", "0.9"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("regime: conditional")
