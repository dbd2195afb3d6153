"""Command-line entry point: ``capdyn <command> [options]``.

Options may also come from a ``--config`` file of ``key = value`` lines;
flags given on the command line win.  Exit status is 0 on success, 1 on
invalid input and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .experiments import ExperimentError, ExperimentSpec, grid, run_experiment
from .io import (
    ConfigError,
    MatrixFormatError,
    RunConfig,
    Table,
    atomic_write_text,
    format_number,
    load_config,
    load_matrix,
    load_vector,
    trajectory_table,
    write_table,
)
from .kinematics import (
    IntegrationError,
    LogisticRiccatiParams,
    Trajectory,
    closed_form_general,
    closed_form_weighted,
    integrate_coupled,
    integrate_frozen,
)
from .model import DimensionError, ModelParams, complement_all, output
from .relatedness import RelatednessWeights, complementarity_matrix, coupling_matrix
from .riccati import classify_single, coefficients_single, growth_rate_multi

FIGURES = ("growth-curves", "bifurcation", "trajectories", "gap")
DEFAULTS = {"gamma": 1.0, "delta": 0.0, "t_end": 50.0, "dt": 0.1, "seed": 0}


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--seed", type=int, help="seed for all randomness (fallback: $CAPDYN_SEED)")
    p.add_argument("--gamma", type=float, help="investment rate in (0, 1]")
    p.add_argument("--delta", type=float, help="depreciation rate >= 0")
    p.add_argument("--out", help="output directory (default: print to stdout)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="capdyn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"capdyn {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("eval", parents=[common], help="output, complements and partials")
    p.add_argument("--q", dest="q_path", help="requirements matrix CSV")
    p.add_argument("--r", dest="r_path", help="endowments matrix CSV")

    p = sub.add_parser("simulate", parents=[common], help="closed-form or numeric trajectories")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--closed-form", dest="mode", action="store_const", const="closed-form")
    mode.add_argument("--numeric", dest="mode", action="store_const", const="numeric")
    mode.add_argument("--coupled", dest="mode", action="store_const", const="coupled",
                      help="integrate all capabilities of --q/--r matrices together")
    p.add_argument("--r0", type=float)
    p.add_argument("--qbar", dest="q_bar", type=float)
    p.add_argument("--rate", type=float, help="full convergence rate (depreciation-free form)")
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--dt", type=float, help="output sample spacing")
    p.add_argument("--q", dest="q_path")
    p.add_argument("--r", dest="r_path")

    p = sub.add_parser("phase", parents=[common], help="regime classification or sweep")
    p.add_argument("--qbar", dest="q_bar", type=float)
    p.add_argument("--sweep", action="store_true", help="classify over a (q_bar, delta/gamma) grid")
    p.add_argument("--n-q", dest="n_q", type=int)
    p.add_argument("--n-delta", dest="n_delta", type=int)

    p = sub.add_parser("bifurcation", parents=[common], help="argmax of growth vs q_bar")
    p.add_argument("--n-q", dest="n_q", type=int)

    p = sub.add_parser("relatedness", parents=[common], help="complementarity and growth coupling")
    p.add_argument("--q", dest="q_path")
    p.add_argument("--r", dest="r_path")
    p.add_argument("--weights", dest="weights_path", help="label,weight CSV")

    p = sub.add_parser("figures", parents=[common], help="figure datasets")
    p.add_argument("--name", choices=FIGURES + ("all",))
    p.add_argument("--svg", action="store_true", help="also write SVG charts")

    p = sub.add_parser("ensemble", parents=[common], help="random-ensemble convergence study")
    p.add_argument("--n-economies", dest="n_economies", type=int)
    p.add_argument("--n-activities", dest="n_activities", type=int)
    p.add_argument("--n-capabilities", dest="n_capabilities", type=int)
    p.add_argument("--t-end", dest="t_end", type=float)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    base = load_config(args.config) if args.config else RunConfig()
    overrides = {
        k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__
    }
    cfg = base.merged(overrides)
    if cfg.seed is None and os.environ.get("CAPDYN_SEED"):
        try:
            cfg = cfg.merged({"seed": int(os.environ["CAPDYN_SEED"])})
        except ValueError:
            raise ConfigError(f"CAPDYN_SEED must be an integer, got {os.environ['CAPDYN_SEED']!r}")
    return cfg


def _get(cfg: RunConfig, key: str):
    value = getattr(cfg, key)
    return DEFAULTS.get(key) if value is None else value


def _require(cfg: RunConfig, *keys: str):
    missing = [k for k in keys if getattr(cfg, k) is None]
    if missing:
        raise ConfigError("missing required option(s): " + ", ".join(missing))


def _params(cfg: RunConfig) -> ModelParams:
    return ModelParams(_get(cfg, "gamma"), _get(cfg, "delta"))


def _emit(cfg: RunConfig, tables: dict, stdout) -> None:
    if cfg.out:
        for name, table in tables.items():
            write_table(Path(cfg.out) / f"{name}.csv", table)
    else:
        for k, (name, table) in enumerate(tables.items()):
            if len(tables) > 1:
                stdout.write(("\n" if k else "") + f"# {name}\n")
            stdout.write(table.to_csv())


def _time_grid(cfg: RunConfig) -> np.ndarray:
    t_end, dt = _get(cfg, "t_end"), _get(cfg, "dt")
    n = int(round(t_end / dt))
    if n < 1:
        raise ConfigError("t_end must be at least one sample spacing")
    return np.linspace(0.0, t_end, n + 1)


# ---------------------------------------------------------------- commands


def cmd_eval(cfg: RunConfig, stdout) -> None:
    _require(cfg, "q_path", "r_path")
    req = load_matrix(cfg.q_path, "requirements")
    end = load_matrix(cfg.r_path, "endowments")
    Y = output(req, end)
    E = complement_all(req, end)
    rows = {k: [] for k in ("economy", "activity", "capability", "complement", "dY_dr", "dY_dq")}
    for c, econ in enumerate(end.economies):
        for p, act in enumerate(req.activities):
            for b, cap in enumerate(req.capabilities):
                rows["economy"].append(econ)
                rows["activity"].append(act)
                rows["capability"].append(cap)
                rows["complement"].append(E[c, p, b])
                rows["dY_dr"].append(req.q[p, b] * E[c, p, b])
                rows["dY_dq"].append(-(1.0 - end.r[c, b]) * E[c, p, b])
    growth = growth_rate_multi(req, end, _params(cfg))
    out_tab = Table({"economy": list(end.economies), **{a: Y[:, p] for p, a in enumerate(req.activities)}})
    growth_tab = Table({"economy": list(end.economies), **{b: growth[:, j] for j, b in enumerate(req.capabilities)}})
    _emit(cfg, {"output": out_tab, "partials": Table(rows), "growth_rate": growth_tab}, stdout)


def cmd_simulate(cfg: RunConfig, mode: Optional[str], stdout) -> None:
    mode = mode or "closed-form"
    t = _time_grid(cfg)
    params = _params(cfg)
    if mode == "coupled":
        _require(cfg, "q_path", "r_path")
        req = load_matrix(cfg.q_path, "requirements")
        end = load_matrix(cfg.r_path, "endowments")
        traj = integrate_coupled(req, end, params, t)
        labels = [f"{e}:{b}" for e in end.economies for b in end.capabilities]
        _emit(cfg, {"trajectory": trajectory_table(traj, labels)}, stdout)
        return
    _require(cfg, "r0", "q_bar")
    r0, q_bar = cfg.r0, cfg.q_bar
    if cfg.rate is not None:
        if params.delta != 0.0:
            raise ConfigError("--rate selects the depreciation-free form; delta must be 0")
        if mode == "closed-form":
            values = closed_form_weighted(r0, q_bar, cfg.rate, t)
        else:
            coeffs = LogisticRiccatiParams.from_weighted(q_bar, cfg.rate).coefficients
            values = integrate_frozen(coeffs, r0, t).values
    else:
        coeffs = coefficients_single(q_bar, params)
        if mode == "closed-form":
            if q_bar == 0.0:
                raise ConfigError("the closed form needs q_bar > 0; use --numeric")
            values = closed_form_general(r0, coeffs, t)
        else:
            values = integrate_frozen(coeffs, r0, t).values
    _emit(cfg, {"trajectory": trajectory_table(Trajectory(t, values), ["r"])}, stdout)


def cmd_phase(cfg: RunConfig, sweep: bool, stdout) -> None:
    params = _params(cfg)
    if sweep:
        grids = {
            "q": grid(0.0, 1.0, cfg.n_q or 101),
            "delta_ratio": grid(0.0, 2.5, cfg.n_delta or 51),
        }
        res = run_experiment(ExperimentSpec("phase-sweep", params, grids))
        _emit(cfg, res.tables, stdout)
        return
    _require(cfg, "q_bar")
    cls = classify_single(cfg.q_bar, params)
    q_crit = "none" if cls.q_crit is None else format_number(cls.q_crit)
    lines = [
        f"regime: {cls.regime.value}",
        f"r_star: {format_number(cls.r_star)}",
        f"q_crit: {q_crit}",
    ]
    text = "\n".join(lines) + "\n"
    if cfg.out:
        atomic_write_text(Path(cfg.out) / "phase.txt", text)
    stdout.write(text)


def cmd_bifurcation(cfg: RunConfig, stdout) -> None:
    grids = {"q": grid(0.0, 1.0, cfg.n_q or 401)}
    res = run_experiment(ExperimentSpec("bifurcation", _params(cfg), grids))
    _emit(cfg, res.tables, stdout)


def cmd_relatedness(cfg: RunConfig, stdout) -> None:
    _require(cfg, "q_path")
    req = load_matrix(cfg.q_path, "requirements")
    w = RelatednessWeights(load_vector(cfg.weights_path)) if cfg.weights_path else None
    cm = complementarity_matrix(req, w)
    tables = {
        "complementarity": Table(
            {"capability": list(req.capabilities), **{b: cm.C[:, j] for j, b in enumerate(req.capabilities)}}
        )
    }
    if cfg.r_path:
        end = load_matrix(cfg.r_path, "endowments")
        params = _params(cfg)
        rows = {k: [] for k in ("economy", "capability", "other", "coupling")}
        for c, econ in enumerate(end.economies):
            m = coupling_matrix(req, end, params, c)
            for b, cap in enumerate(req.capabilities):
                for b2, other in enumerate(req.capabilities):
                    if b != b2:
                        rows["economy"].append(econ)
                        rows["capability"].append(cap)
                        rows["other"].append(other)
                        rows["coupling"].append(m[b, b2])
        tables["coupling"] = Table(rows)
    _emit(cfg, tables, stdout)


def cmd_figures(cfg: RunConfig, svg: bool, stdout) -> None:
    if not cfg.out:
        raise ConfigError("figures needs --out")
    names = FIGURES if (cfg.name in (None, "all")) else (cfg.name,)
    params = ModelParams(_get(cfg, "gamma"), 0.2 if cfg.delta is None else cfg.delta)
    for name in names:
        spec = ExperimentSpec(name, params, output_path=Path(cfg.out), svg=svg)
        res = run_experiment(spec)
        for path in res.paths.values():
            stdout.write(f"wrote {path}\n")


def cmd_ensemble(cfg: RunConfig, stdout) -> None:
    options = {
        k: getattr(cfg, k)
        for k in ("n_economies", "n_activities", "n_capabilities")
        if getattr(cfg, k) is not None
    }
    grids = {}
    if cfg.t_end is not None:
        grids["t"] = np.linspace(0.0, cfg.t_end, int(round(cfg.t_end / _get(cfg, "dt"))) + 1)
    spec = ExperimentSpec(
        "ensemble", _params(cfg), grids, seed=_get(cfg, "seed"), options=options
    )
    res = run_experiment(spec)
    _emit(cfg, res.tables if cfg.out else {"ensemble_summary": res.tables["ensemble_summary"]}, stdout)


def main(argv: Optional[List[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
        if args.command == "eval":
            cmd_eval(cfg, stdout)
        elif args.command == "simulate":
            cmd_simulate(cfg, args.mode, stdout)
        elif args.command == "phase":
            cmd_phase(cfg, args.sweep, stdout)
        elif args.command == "bifurcation":
            cmd_bifurcation(cfg, stdout)
        elif args.command == "relatedness":
            cmd_relatedness(cfg, stdout)
        elif args.command == "figures":
            cmd_figures(cfg, args.svg, stdout)
        elif args.command == "ensemble":
            cmd_ensemble(cfg, stdout)
    except (ConfigError, MatrixFormatError, ExperimentError, DimensionError, IntegrationError,
            ValueError, IndexError, OSError) as exc:
        stderr.write(f"capdyn {args.command}: error: {exc}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
