"""Closed-form trajectories of the Riccati dynamics and a fixed-step RK4 oracle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .model import ModelParams, _check_index, _matrices, as_requirements, complement_all
from .riccati import RiccatiCoefficients, _growth_rate_arrays, quadratic_roots

DEFAULT_STEP = 1e-3
OVERSHOOT_TOL = 1e-9


class IntegrationError(RuntimeError):
    """The integrator left [0, 1] by more than round-off."""


@dataclass(frozen=True)
class LogisticRiccatiParams:
    """Rates of ``dr/dt = (1 - r)(alpha + beta r)``, with ``gamma`` already folded in."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha < 0.0 or self.beta < 0.0:
            raise ValueError(f"alpha and beta must be >= 0, got {self.alpha}, {self.beta}")

    @classmethod
    def from_weighted(cls, q_QE: float, rate: float) -> "LogisticRiccatiParams":
        return cls(alpha=rate * (1.0 - q_QE), beta=rate * q_QE)

    @property
    def coefficients(self) -> RiccatiCoefficients:
        return RiccatiCoefficients(A=-self.beta, B=self.beta - self.alpha, C=self.alpha)


@dataclass
class Trajectory:
    """Time-ordered samples of one or more endowment series.

    ``values`` has time along axis 0; any trailing axes index the series.
    """

    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.ndim != 1:
            raise ValueError("times must be a vector")
        if self.values.shape[:1] != self.times.shape:
            raise ValueError(
                f"values has {self.values.shape[:1]} samples, times has {self.times.shape}"
            )
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return self.times.size

    def time_to_reach(self, level: float) -> float:
        """First sampled time at which a scalar series reaches ``level`` (``inf`` if never)."""
        if self.values.ndim != 1:
            raise ValueError("time_to_reach needs a scalar series")
        hit = np.nonzero(self.values >= level)[0]
        return float(self.times[hit[0]]) if hit.size else math.inf


def _validate_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("t_grid must be a non-empty vector")
    if t[0] != 0.0:
        raise ValueError(f"t_grid must start at 0, got {t[0]}")
    if t.size > 1 and not np.all(np.diff(t) > 0):
        raise ValueError("t_grid must be strictly increasing")
    return t


def _at_zero(t, r0, value):
    # the initial condition is returned bit-exactly
    if np.ndim(value) == 0:
        return float(r0) if t == 0 else float(value)
    return np.where(np.asarray(t) == 0, r0, value)


def closed_form(r0: float, p: LogisticRiccatiParams, t):
    """Solution of ``dr/dt = (1 - r)(alpha + beta r)`` from ``r(0) = r0``.

    ``t`` may be a scalar or an array.  With ``alpha + beta = 0`` the
    solution is the constant ``r0``.
    """
    if not 0.0 <= r0 <= 1.0:
        raise ValueError(f"r0 must lie in [0, 1], got {r0}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    k = p.alpha + p.beta
    if k == 0.0:
        return _at_zero(t, r0, np.full_like(t, r0))
    gap = 1.0 - r0
    decay = np.exp(-k * t)
    value = 1.0 - k * gap * decay / (p.beta * gap * decay + p.alpha + p.beta * r0)
    return _at_zero(t, r0, value)


def closed_form_weighted(r0: float, q_QE: float, rate: float, t):
    """Trajectory written through the initial gap ``1 - r0``.

    ``q_QE`` is the complement-weighted mean intensity and ``rate`` the full
    convergence rate ``gamma * sum_p Q[p,b] E[c,p,b]``.
    """
    if rate < 0.0:
        raise ValueError(f"rate must be >= 0, got {rate}")
    if not 0.0 <= r0 <= 1.0:
        raise ValueError(f"r0 must lie in [0, 1], got {r0}")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    rho0 = 1.0 - r0
    decay = np.exp(-rate * t)
    value = 1.0 - rho0 * decay / (q_QE * rho0 * decay + (1.0 - q_QE * rho0))
    return _at_zero(t, r0, value)


def closed_form_uniform(r0: float, q: float, gamma: float, composite_E: float, t):
    """Uniform-requirement case, where ``composite_E = N_p * mean_p(E / N_b(p))``."""
    return closed_form_weighted(r0, q, gamma * composite_E, t)


def closed_form_general(r0: float, coeffs: RiccatiCoefficients, t):
    """Exact solution of ``dr/dt = A r**2 + B r + C`` for ``A < 0`` and real roots.

    Factoring the right-hand side as ``A (r - x1)(r - x2)`` gives a logistic
    between the roots; a repeated root uses the limiting rational form.
    """
    A = float(coeffs.A)
    if not A < 0.0:
        raise ValueError(f"closed_form_general needs A < 0, got A = {A}")
    roots = quadratic_roots(coeffs)
    if roots is None:
        raise ValueError(f"complex roots: discriminant {coeffs.discriminant} < 0")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    if len(roots) == 1:
        x = roots[0]
        d0 = r0 - x
        denom = 1.0 - A * t * d0
        if np.any(denom <= 0.0):
            raise ValueError("trajectory blows up in finite time")
        value = x + d0 / denom
    else:
        x1, x2 = roots
        if r0 < x1:
            raise ValueError(f"r0 = {r0} below the unstable root {x1}; solution blows up")
        e = np.exp(A * (x2 - x1) * t)
        value = x2 + (r0 - x2) * (x2 - x1) * e / ((r0 - x1) - (r0 - x2) * e)
    return _at_zero(t, r0, value)


def _rk4(rhs: Callable, y0, t_grid: np.ndarray, max_step: float, clamp: bool = True):
    """Classical RK4 with equal substeps no longer than ``max_step`` between grid points."""
    y = np.array(y0, dtype=float)
    out = np.empty((t_grid.size,) + y.shape)
    out[0] = y0
    for i in range(1, t_grid.size):
        span = t_grid[i] - t_grid[i - 1]
        n = max(1, int(math.ceil(span / max_step - 1e-9)))
        h = span / n
        for _ in range(n):
            k1 = rhs(y)
            k2 = rhs(y + 0.5 * h * k1)
            k3 = rhs(y + 0.5 * h * k2)
            k4 = rhs(y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if clamp:
            lo, hi = np.min(y), np.max(y)
            if lo < -OVERSHOOT_TOL or hi > 1.0 + OVERSHOOT_TOL:
                raise IntegrationError(
                    f"state left [0, 1] at t = {t_grid[i]}: range [{lo}, {hi}]"
                )
            y = np.clip(y, 0.0, 1.0)
        out[i] = y
    return out


def integrate_frozen(
    coeffs: RiccatiCoefficients, r0, t_grid, max_step: float = DEFAULT_STEP
) -> Trajectory:
    """Integrate the scalar quadratic law numerically with fixed-step RK4.

    ``r0`` and the coefficient fields may be arrays (broadcast together),
    which integrates many independent equations at once.
    """
    t = _validate_grid(t_grid)
    if max_step <= 0 or max_step > DEFAULT_STEP:
        raise ValueError(f"max_step must lie in (0, {DEFAULT_STEP}], got {max_step}")
    A, B, C = (np.asarray(x, dtype=float) for x in (coeffs.A, coeffs.B, coeffs.C))
    r0 = np.asarray(r0, dtype=float)
    y0 = np.broadcast_to(r0, np.broadcast_shapes(r0.shape, A.shape, B.shape, C.shape)).copy()
    if np.any((y0 < 0) | (y0 > 1)):
        raise ValueError("r0 must lie in [0, 1]")

    def rhs(r):
        return (A * r + B) * r + C

    values = _rk4(rhs, y0, t, max_step)
    return Trajectory(t, values, {"method": "rk4", "max_step": max_step, "coefficients": coeffs})


def integrate_coupled(q, r0, params: ModelParams, t_grid, max_step: float = DEFAULT_STEP) -> Trajectory:
    """Evolve every capability of every economy together under the full growth law.

    Complement terms are recomputed at each stage from the current state.
    ``values`` has shape ``(T, C, B)``.
    """
    req = as_requirements(q)
    qm, rm = _matrices(req, r0)
    t = _validate_grid(t_grid)
    if max_step <= 0:
        raise ValueError("max_step must be positive")
    Q = req.Q
    gamma, delta = params.gamma, params.delta

    def rhs(r):
        return _growth_rate_arrays(qm, Q, r, gamma, delta)

    values = _rk4(rhs, rm, t, max_step)
    return Trajectory(
        t, values, {"method": "rk4-coupled", "max_step": max_step, "gamma": gamma, "delta": delta}
    )


def gap_curve(a: Trajectory, b: Trajectory) -> Trajectory:
    """Pointwise difference ``a - b`` of two trajectories on the same time grid."""
    if a.times.shape != b.times.shape or not np.array_equal(a.times, b.times):
        raise ValueError("trajectories must share an identical time grid")
    if a.values.shape != b.values.shape:
        raise ValueError(f"value shapes differ: {a.values.shape} vs {b.values.shape}")
    return Trajectory(a.times.copy(), a.values - b.values, {"kind": "gap"})


def qe_weighted_mean(q, r, c: int, b: int) -> float:
    """Requirement of ``b`` averaged over activities with weights ``Q[p,b] E[c,p,b]``."""
    req = as_requirements(q)
    qm, rm = _matrices(req, r)
    c = _check_index(c, rm.shape[0], "economy")
    b = _check_index(b, qm.shape[1], "capability")
    w = req.Q[:, b] * complement_all(qm, rm[c : c + 1])[0, :, b]
    total = float(w.sum())
    if total == 0.0:
        return 0.0
    return float(np.sum(qm[:, b] * w) / total)


def convergence_rate(q, r, c: int, b: int, gamma: float) -> float:
    """Full convergence rate ``gamma * sum_p Q[p,b] E[c,p,b]``."""
    req = as_requirements(q)
    qm, rm = _matrices(req, r)
    c = _check_index(c, rm.shape[0], "economy")
    b = _check_index(b, qm.shape[1], "capability")
    return float(gamma * np.sum(req.Q[:, b] * complement_all(qm, rm[c : c + 1])[0, :, b]))
