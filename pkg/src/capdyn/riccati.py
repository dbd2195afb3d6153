"""Capability-accumulation growth law and its quadratic (Riccati) form.

Single-capability functions work in time rescaled by the number of
activities ``N_p``; multi-capability functions use raw model time.  A
single-capability rate in raw time is ``N_p`` times the rescaled one.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional

import numpy as np

from .model import (
    ModelParams,
    _check_index,
    _matrices,
    as_requirements,
    complement_all,
    output,
)


class Regime(enum.Enum):
    UNCONDITIONAL = "unconditional"
    CONDITIONAL = "conditional"


@dataclass(frozen=True)
class RiccatiCoefficients:
    """Coefficients of ``dr/dt = A r**2 + B r + C``.

    Fields may also hold equally shaped arrays, in which case every method
    broadcasts.
    """

    A: float
    B: float
    C: float

    def rate(self, r):
        return (self.A * r + self.B) * r + self.C

    @property
    def discriminant(self):
        return self.B * self.B - 4.0 * self.A * self.C

    def scaled(self, factor: float) -> "RiccatiCoefficients":
        return RiccatiCoefficients(self.A * factor, self.B * factor, self.C * factor)


@dataclass(frozen=True)
class RegimeClassification:
    regime: Regime
    r_star: float
    q_crit: Optional[float]

    @property
    def is_conditional(self) -> bool:
        return self.regime is Regime.CONDITIONAL


class SteadyState(NamedTuple):
    value: float
    stable: bool


def _check_q_bar(q_bar: float) -> float:
    if not (0.0 <= q_bar <= 1.0):
        raise ValueError(f"q_bar must lie in [0, 1], got {q_bar}")
    return float(q_bar)


def coefficients_single(q_bar: float, params: ModelParams) -> RiccatiCoefficients:
    """Quadratic coefficients of the single-capability law in rescaled time."""
    q_bar = _check_q_bar(q_bar)
    g, d = params.gamma, params.delta
    return RiccatiCoefficients(
        A=-g * q_bar,
        B=g * (2.0 * q_bar - 1.0) - d * q_bar,
        C=g * (1.0 - q_bar),
    )


def growth_rate_single(r_c: float, q_bar: float, params: ModelParams) -> float:
    """Single-capability growth rate ``dr/dt`` at endowment ``r_c`` (rescaled time).

    Accepts an array of ``r_c`` values.
    """
    q_bar = _check_q_bar(q_bar)
    r_c = np.asarray(r_c, dtype=float)
    if np.any((r_c < 0.0) | (r_c > 1.0)):
        raise ValueError("r_c must lie in [0, 1]")
    g, d = params.gamma, params.delta
    out = g * (1.0 - r_c) * ((1.0 - q_bar) + r_c * q_bar) - d * r_c * q_bar
    return float(out) if out.ndim == 0 else out


def critical_intensity(params: ModelParams) -> Optional[float]:
    """Mean intensity ``gamma / (2 gamma - delta)`` above which growth peaks in the interior.

    Returns ``None`` when ``2 gamma <= delta``.  A value >= 1 (``delta >= gamma``)
    means the transition is out of reach for any feasible intensity.
    """
    denom = 2.0 * params.gamma - params.delta
    if denom <= 0.0:
        return None
    return params.gamma / denom


def argmax_growth_single(q_bar: float, params: ModelParams) -> float:
    """Endowment level at which the single-capability growth rate peaks.

    Zero at or below the critical intensity, ``1 - 1/(2 q) - delta/(2 gamma)``
    above it (clamped to [0, 1]).
    """
    q_bar = _check_q_bar(q_bar)
    q_crit = critical_intensity(params)
    if q_bar == 0.0 or q_crit is None or q_bar <= q_crit:
        return 0.0
    r_star = 1.0 - 1.0 / (2.0 * q_bar) - params.delta / (2.0 * params.gamma)
    return min(max(r_star, 0.0), 1.0)


def classify_single(q_bar: float, params: ModelParams) -> RegimeClassification:
    r_star = argmax_growth_single(q_bar, params)
    regime = Regime.CONDITIONAL if r_star > 0.0 else Regime.UNCONDITIONAL
    return RegimeClassification(regime, r_star, critical_intensity(params))


def _growth_rate_arrays(q, Q, r, gamma, delta):
    # unvalidated fast path used by the integrators
    f = 1.0 - q[None, :, :] * (1.0 - r[:, None, :])
    Y = np.prod(f, axis=2)
    return gamma * (1.0 - r) * (Y @ Q) - delta * r * q.sum(axis=0)[None, :]


def growth_rate_multi(q, r, params: ModelParams) -> np.ndarray:
    """Growth rate ``dr[c, b]/dt`` of every capability in every economy (raw time).

    ``gamma (1 - r[c,b]) sum_p Q[p,b] Y[c,p] - delta sum_p q[p,b] r[c,b]``
    """
    req = as_requirements(q)
    qm, rm = _matrices(req, r)
    Y = output(qm, rm)
    invest = params.gamma * (1.0 - rm) * (Y @ req.Q)
    depreciation = params.delta * rm * qm.sum(axis=0)[None, :]
    return invest - depreciation


def _sums(q, r, c, b):
    req = as_requirements(q)
    qm, rm = _matrices(req, r)
    c = _check_index(c, rm.shape[0], "economy")
    b = _check_index(b, qm.shape[1], "capability")
    E = complement_all(qm, rm[c : c + 1])[0, :, b]
    QE = req.Q[:, b] * E
    return qm[:, b], QE


def coefficients_multi(q, r, c: int, b: int, params: ModelParams) -> RiccatiCoefficients:
    """Quadratic coefficients for capability ``b`` of economy ``c``.

    All other endowments are frozen at their current values in ``r``.
    """
    qb, QE = _sums(q, r, c, b)
    loaded = float(np.sum(qb * QE))
    slack = float(np.sum((1.0 - qb) * QE))
    g, d = params.gamma, params.delta
    return RiccatiCoefficients(
        A=-g * loaded,
        B=g * (loaded - slack) - d * float(np.sum(qb)),
        C=g * slack,
    )


def argmax_growth_multi(q, r, c: int, b: int, params: ModelParams):
    """Peak location of the frozen-complement growth rate of capability ``b``.

    Returns
    -------
    r_star : float
    classification : RegimeClassification
    """
    co = coefficients_multi(q, r, c, b, params)
    q_crit = critical_intensity(params)
    if co.A >= 0.0 or co.B <= 0.0:
        return 0.0, RegimeClassification(Regime.UNCONDITIONAL, 0.0, q_crit)
    r_star = min(-co.B / (2.0 * co.A), 1.0)
    return r_star, RegimeClassification(Regime.CONDITIONAL, r_star, q_crit)


def quadratic_roots(coeffs: RiccatiCoefficients) -> Optional[tuple]:
    """Real roots of ``A r**2 + B r + C`` in ascending order.

    ``None`` for complex roots.  A linear equation yields one root.
    """
    A, B, C = float(coeffs.A), float(coeffs.B), float(coeffs.C)
    if A == 0.0:
        if B == 0.0:
            raise ValueError("degenerate quadratic: A = B = 0")
        return (-C / B,)
    disc = B * B - 4.0 * A * C
    if disc < 0.0:
        return None
    sq = math.sqrt(disc)
    # cancellation-free form
    t = -0.5 * (B + math.copysign(sq, B))
    if t == 0.0:
        roots = (0.0, 0.0)
    else:
        roots = (t / A, C / t)
    roots = tuple(sorted(roots))
    if disc == 0.0:
        roots = roots[:1]
    return roots


def steady_states(coeffs: RiccatiCoefficients, tol: float = 1e-12) -> List[SteadyState]:
    """Equilibria in [0, 1] with stability flags.

    A root is stable when the slope ``2 A r + B`` is negative there; for
    ``A < 0`` this is the larger of two distinct roots.  Complex roots give an
    empty list.
    """
    roots = quadratic_roots(coeffs)
    if roots is None:
        return []
    A, B = float(coeffs.A), float(coeffs.B)
    out = []
    for x in roots:
        if -tol <= x <= 1.0 + tol:
            slope = 2.0 * A * x + B
            out.append(SteadyState(min(max(x, 0.0), 1.0), slope < 0.0))
    return out
