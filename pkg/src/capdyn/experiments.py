"""Scripted reproductions of the growth-curve, bifurcation, kinematics and gap figures,
plus a regime sweep and a random-ensemble convergence study.

Every experiment returns its tables and, when given an output
directory, writes them there as CSV (and optionally SVG).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import numpy as np
from scipy import stats

from .io import Table, atomic_write_text, svg_line_chart, write_table, format_number
from .kinematics import closed_form_weighted, gap_curve, integrate_coupled, Trajectory
from .model import ModelParams
from .riccati import (
    classify_single,
    critical_intensity,
    growth_rate_single,
)

# Model time per plotted step of the kinematics figures.  The gap between the
# r0 = 0.5 and r0 = 0.1 curves peaks near t = 2.5, roughly 100 plotted steps.
FIGURE_TIME_STEP = 0.025

ENDOWMENT_SWEEP = {"q": 0.9, "E": 0.25, "r0": (0.1, 0.3, 0.5)}
COMPLEMENT_SWEEP = {"q": 0.7, "r0": 0.5, "E": (0.1, 0.5, 0.9)}

EXPERIMENTS = ("growth-curves", "bifurcation", "trajectories", "gap", "phase-sweep", "ensemble")

_DEFAULT_GRIDS = {
    "growth-curves": {"r": (0.0, 1.0, 201)},
    "bifurcation": {"q": (0.0, 1.0, 401)},
    "trajectories": {"t": (0.0, 50.0, 2001)},
    "gap": {"t": (0.0, 50.0, 2001)},
    "phase-sweep": {"q": (0.0, 1.0, 101), "delta_ratio": (0.0, 2.5, 51)},
    "ensemble": {"t": (0.0, 20.0, 201)},
}

_ENSEMBLE_DEFAULTS = {
    "n_economies": 40,
    "n_activities": 6,
    "n_capabilities": 3,
    "r0_range": (0.02, 0.4),
    # q sub-intervals placed below and above the gamma=1, delta=0 threshold of 1/2
    "q_ranges": {"unconditional": (0.05, 0.3), "conditional": (0.85, 1.0)},
    "max_step": 0.01,
}


class ExperimentError(ValueError):
    pass


def grid(start: float, stop: float, num: int) -> np.ndarray:
    return np.linspace(start, stop, int(num))


@dataclass
class ExperimentSpec:
    name: str
    params: ModelParams = field(default_factory=lambda: ModelParams(1.0, 0.2))
    grids: Dict[str, np.ndarray] = field(default_factory=dict)
    seed: Optional[int] = None
    output_path: Optional[Path] = None
    options: dict = field(default_factory=dict)
    svg: bool = False

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise ExperimentError(
                f"unknown experiment {self.name!r}; choose from {', '.join(EXPERIMENTS)}"
            )
        grids = {k: grid(*v) for k, v in _DEFAULT_GRIDS[self.name].items()}
        grids.update({k: np.asarray(v, dtype=float) for k, v in self.grids.items()})
        self.grids = grids
        if self.output_path is not None:
            self.output_path = Path(self.output_path)
        self.validate()

    def validate(self):
        for key, g in self.grids.items():
            if g.ndim != 1 or g.size == 0:
                raise ExperimentError(f"grid '{key}' must be a non-empty vector")
            if not np.all(np.isfinite(g)):
                raise ExperimentError(f"grid '{key}' has non-finite entries")
            if key in ("r", "q") and (g.min() < 0.0 or g.max() > 1.0):
                raise ExperimentError(f"grid '{key}' must lie within [0, 1]")
            if key == "delta_ratio" and g.min() < 0.0:
                raise ExperimentError("grid 'delta_ratio' must be >= 0")
            if key == "t":
                if g[0] != 0.0 or (g.size > 1 and not np.all(np.diff(g) > 0)):
                    raise ExperimentError("grid 't' must start at 0 and increase strictly")
        if self.name == "ensemble" and self.seed is None:
            raise ExperimentError("the ensemble experiment needs a seed")


@dataclass
class ExperimentResult:
    name: str
    tables: Dict[str, Table]
    paths: Dict[str, Path] = field(default_factory=dict)


def _col(prefix: str, x: float) -> str:
    return f"{prefix}={format_number(float(x))}"


# ---------------------------------------------------------------- experiments


def _growth_curves(spec: ExperimentSpec) -> Dict[str, Table]:
    r = spec.grids["r"]
    q_values = spec.options.get("q_values")
    if q_values is None:
        q_c = critical_intensity(spec.params)
        if q_c is None or q_c >= 1.0:
            q_values = (0.2, 0.5, 0.9)
        else:
            q_values = (0.5 * q_c, q_c, 0.5 * (q_c + 1.0))
    cols = {"r": r}
    for q in q_values:
        cols[_col("q_bar", q)] = growth_rate_single(r, float(q), spec.params)
    return {"growth_curves": Table(cols)}


def _bifurcation(spec: ExperimentSpec) -> Dict[str, Table]:
    qs = spec.grids["q"]
    cls = [classify_single(float(q), spec.params) for q in qs]
    return {
        "bifurcation": Table(
            {
                "q_bar": qs,
                "r_star": [c.r_star for c in cls],
                "regime": [c.regime.value for c in cls],
            }
        )
    }


def endowment_sweep(t, gamma: float = 1.0) -> Dict[float, np.ndarray]:
    return {
        r0: closed_form_weighted(r0, ENDOWMENT_SWEEP["q"], gamma * ENDOWMENT_SWEEP["E"], t) for r0 in ENDOWMENT_SWEEP["r0"]
    }


def complement_sweep(t, gamma: float = 1.0) -> Dict[float, np.ndarray]:
    return {E: closed_form_weighted(COMPLEMENT_SWEEP["r0"], COMPLEMENT_SWEEP["q"], gamma * E, t) for E in COMPLEMENT_SWEEP["E"]}


def _trajectories(spec: ExperimentSpec) -> Dict[str, Table]:
    t = spec.grids["t"]
    gamma = spec.params.gamma
    a = {"t": t}
    for r0, v in endowment_sweep(t, gamma).items():
        a[_col("r0", r0)] = v
    b = {"t": t}
    for E, v in complement_sweep(t, gamma).items():
        b[_col("E", E)] = v
    return {"trajectories_r0": Table(a), "trajectories_E": Table(b)}


def endowment_gaps(t, gamma: float = 1.0) -> Dict[str, Trajectory]:
    curves = {r0: Trajectory(t, v) for r0, v in endowment_sweep(t, gamma).items()}
    low = min(curves)
    return {
        f"{format_number(r0)}-{format_number(low)}": gap_curve(curves[r0], curves[low])
        for r0 in sorted(curves, reverse=True)
        if r0 != low
    }


def _gap(spec: ExperimentSpec) -> Dict[str, Table]:
    t = spec.grids["t"]
    cols = {"t": t}
    for name, g in endowment_gaps(t, spec.params.gamma).items():
        cols[f"gap[{name}]"] = g.values
    return {"gap": Table(cols)}


def _phase_sweep(spec: ExperimentSpec) -> Dict[str, Table]:
    gamma = spec.params.gamma
    rows = {k: [] for k in ("q_bar", "delta_over_gamma", "delta", "q_crit", "r_star", "regime")}
    for ratio in spec.grids["delta_ratio"]:
        params = ModelParams(gamma, float(ratio) * gamma)
        q_c = critical_intensity(params)
        for q in spec.grids["q"]:
            c = classify_single(float(q), params)
            rows["q_bar"].append(float(q))
            rows["delta_over_gamma"].append(float(ratio))
            rows["delta"].append(params.delta)
            rows["q_crit"].append(math.nan if q_c is None else q_c)
            rows["r_star"].append(c.r_star)
            rows["regime"].append(c.regime.value)
    return {"phase_sweep": Table(rows)}


def time_to_level(times: np.ndarray, values: np.ndarray, level: float) -> float:
    hit = np.nonzero(values >= level)[0]
    return float(times[hit[0]]) if hit.size else math.inf


def rank_correlation(x, y) -> float:
    """Spearman correlation; ``nan`` when either input is constant."""
    x, y = np.ravel(x), np.ravel(y)
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return math.nan
    return float(stats.spearmanr(x, y).statistic)


def ensemble_member(q, r0, params: ModelParams, t, max_step: float):
    """Integrate one random draw and measure early-window growth.

    The window length is 10% of the time at which the pointwise median
    trajectory first reaches 0.99 (the whole run if it never does), snapped
    to the first grid time at or beyond it.
    """
    traj = integrate_coupled(q, r0, params, t, max_step=max_step)
    series = traj.values.reshape(len(t), -1)
    median = np.median(series, axis=1)
    t99 = time_to_level(t, median, 0.99)
    horizon = t[-1] if math.isinf(t99) else t99
    k = int(np.searchsorted(t, 0.1 * horizon, side="left"))
    k = min(max(k, 1), len(t) - 1)
    t_small = float(t[k])
    growth = (series[k] - series[0]) / t_small
    return {
        "t99": t99,
        "t_small": t_small,
        "growth": growth,
        "r0": series[0],
        "rho": rank_correlation(series[0], growth),
    }


def _ensemble(spec: ExperimentSpec) -> Dict[str, Table]:
    opts = {**_ENSEMBLE_DEFAULTS, **spec.options}
    rng = np.random.default_rng(spec.seed)
    t = spec.grids["t"]
    n_c, n_p, n_b = opts["n_economies"], opts["n_activities"], opts["n_capabilities"]
    r_lo, r_hi = opts["r0_range"]
    summary = {k: [] for k in ("regime", "q_low", "q_high", "mean_q", "q_crit", "t99", "t_small", "spearman_rho", "n")}
    members = {k: [] for k in ("regime", "economy", "capability", "r0", "growth")}
    q_c = critical_intensity(spec.params)
    for label, (q_lo, q_hi) in opts["q_ranges"].items():
        q = rng.uniform(q_lo, q_hi, size=(n_p, n_b))
        r0 = rng.uniform(r_lo, r_hi, size=(n_c, n_b))
        res = ensemble_member(q, r0, spec.params, t, opts["max_step"])
        summary["regime"].append(label)
        summary["q_low"].append(float(q_lo))
        summary["q_high"].append(float(q_hi))
        summary["mean_q"].append(float(q.mean()))
        summary["q_crit"].append(math.nan if q_c is None else q_c)
        summary["t99"].append(res["t99"])
        summary["t_small"].append(res["t_small"])
        summary["spearman_rho"].append(res["rho"])
        summary["n"].append(res["r0"].size)
        for idx, (r, g) in enumerate(zip(res["r0"], res["growth"])):
            members["regime"].append(label)
            members["economy"].append(idx // n_b)
            members["capability"].append(idx % n_b)
            members["r0"].append(float(r))
            members["growth"].append(float(g))
    return {"ensemble_summary": Table(summary), "ensemble_members": Table(members)}


_RUNNERS = {
    "growth-curves": _growth_curves,
    "bifurcation": _bifurcation,
    "trajectories": _trajectories,
    "gap": _gap,
    "phase-sweep": _phase_sweep,
    "ensemble": _ensemble,
}

_CHARTS = {
    "growth_curves": ("r", "dr/dt"),
    "bifurcation": ("q_bar", "argmax dr/dt"),
    "trajectories_r0": ("t", "r"),
    "trajectories_E": ("t", "r"),
    "gap": ("t", "difference in r"),
}


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Run one named experiment; write its tables when ``spec.output_path`` is set."""
    tables = _RUNNERS[spec.name](spec)
    result = ExperimentResult(spec.name, tables)
    if spec.output_path is None:
        return result
    for name, table in tables.items():
        result.paths[name] = write_table(spec.output_path / f"{name}.csv", table)
        if spec.svg and name in _CHARTS:
            xkey, ylabel = _CHARTS[name]
            series = {
                k: v for k, v in table.columns.items() if k != xkey and k != "regime"
            }
            svg = svg_line_chart(table[xkey], series, title=name, xlabel=xkey, ylabel=ylabel)
            result.paths[name + "_svg"] = atomic_write_text(spec.output_path / f"{name}.svg", svg)
    return result
