"""Weak-link production function and its derivatives.

Economies ``c`` hold capabilities ``b`` with probability ``r[c, b]``;
activities ``p`` require them with probability ``q[p, b]``.  Output of
economy ``c`` in activity ``p`` is the product over capabilities of the
probability of not lacking a required one::

    Y[c, p] = prod_b (1 - q[p, b] * (1 - r[c, b]))
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np


class DimensionError(ValueError):
    """Raised when matrix shapes disagree along a named axis."""

    def __init__(self, axis: str, expected, got):
        self.axis = axis
        self.expected = expected
        self.got = got
        super().__init__(f"dimension mismatch on axis '{axis}': expected {expected}, got {got}")


def _as_probability_matrix(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    bad = np.argwhere((arr < 0.0) | (arr > 1.0))
    if bad.size:
        cells = ", ".join(f"({i}, {j})={float(arr[i, j])!r}" for i, j in bad[:10])
        raise ValueError(f"{name} entries must lie in [0, 1]; offending cells: {cells}")
    arr.setflags(write=False)
    return arr


def _labels(labels, n: int, prefix: str) -> tuple:
    if labels is None:
        return tuple(f"{prefix}{i}" for i in range(n))
    labels = tuple(str(x) for x in labels)
    if len(labels) != n:
        raise ValueError(f"expected {n} {prefix} labels, got {len(labels)}")
    return labels


@dataclass(frozen=True)
class CapabilityRequirements:
    """Activity-by-capability requirement probabilities ``q[p, b]``."""

    q: np.ndarray
    activities: Optional[Sequence[str]] = None
    capabilities: Optional[Sequence[str]] = None

    def __post_init__(self):
        q = _as_probability_matrix(self.q, "q")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "activities", _labels(self.activities, q.shape[0], "p"))
        object.__setattr__(self, "capabilities", _labels(self.capabilities, q.shape[1], "b"))

    @property
    def shape(self) -> tuple:
        return self.q.shape

    @property
    def q_p(self) -> np.ndarray:
        """Row sums: total requirement of each activity."""
        return self.q.sum(axis=1)

    @property
    def Q(self) -> np.ndarray:
        """Row-normalised requirements; all-zero rows stay zero."""
        q_p = self.q_p
        out = np.zeros_like(self.q)
        nz = q_p > 0
        out[nz] = self.q[nz] / q_p[nz, None]
        return out

    @property
    def n_activities(self) -> int:
        return self.q.shape[0]

    @property
    def n_required(self) -> np.ndarray:
        """Number of capabilities each activity uses (``q > 0``)."""
        return np.count_nonzero(self.q > 0, axis=1)

    @property
    def mean_q(self) -> np.ndarray:
        """Column means: average use of each capability across activities."""
        return self.q.mean(axis=0)


@dataclass(frozen=True)
class Endowments:
    """Economy-by-capability endowment probabilities ``r[c, b]``."""

    r: np.ndarray
    economies: Optional[Sequence[str]] = None
    capabilities: Optional[Sequence[str]] = None

    def __post_init__(self):
        r = _as_probability_matrix(self.r, "r")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "economies", _labels(self.economies, r.shape[0], "c"))
        object.__setattr__(self, "capabilities", _labels(self.capabilities, r.shape[1], "b"))

    @property
    def shape(self) -> tuple:
        return self.r.shape


@dataclass(frozen=True)
class ModelParams:
    """Investment rate ``gamma`` in (0, 1] and depreciation rate ``delta`` >= 0."""

    gamma: float = 1.0
    delta: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.gamma <= 1.0):
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not (self.delta >= 0.0 and np.isfinite(self.delta)):
            raise ValueError(f"delta must be finite and >= 0, got {self.delta}")


Requirements = Union[CapabilityRequirements, np.ndarray, Sequence]
EndowmentLike = Union[Endowments, np.ndarray, Sequence]


def as_requirements(q: Requirements) -> CapabilityRequirements:
    return q if isinstance(q, CapabilityRequirements) else CapabilityRequirements(q)


def as_endowments(r: EndowmentLike) -> Endowments:
    return r if isinstance(r, Endowments) else Endowments(r)


def _matrices(q: Requirements, r: EndowmentLike):
    q = as_requirements(q).q
    r = as_endowments(r).r
    if q.shape[1] != r.shape[1]:
        raise DimensionError("capability", q.shape[1], r.shape[1])
    return q, r


def _check_index(value: int, size: int, axis: str) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise TypeError(f"{axis} index must be an integer, got {value!r}")
    if not 0 <= value < size:
        raise IndexError(f"{axis} index {value} out of range [0, {size})")
    return int(value)


def _check_cpb(q: np.ndarray, r: np.ndarray, c: int, p: int, b: int):
    return (
        _check_index(c, r.shape[0], "economy"),
        _check_index(p, q.shape[0], "activity"),
        _check_index(b, q.shape[1], "capability"),
    )


def factors(q: Requirements, r: EndowmentLike) -> np.ndarray:
    """Availability factors ``1 - q[p, b] (1 - r[c, b])`` as a C x P x B array."""
    q, r = _matrices(q, r)
    return 1.0 - q[None, :, :] * (1.0 - r[:, None, :])


def _ordered_prod(f: np.ndarray) -> np.ndarray:
    # sequential left-to-right product over the last axis
    out = np.ones(f.shape[:-1])
    for k in range(f.shape[-1]):
        out = out * f[..., k]
    return out


def output(q: Requirements, r: EndowmentLike) -> np.ndarray:
    """Output ``Y[c, p]`` of every economy in every activity.

    Raises
    ------
    DimensionError
        If ``q`` and ``r`` disagree on the number of capabilities.
    """
    return _ordered_prod(factors(q, r))


def complement_all(q: Requirements, r: EndowmentLike) -> np.ndarray:
    """Leave-one-out products ``E[c, p, b]`` for every capability.

    Computed from prefix and suffix products, so zero factors are handled
    without division.
    """
    f = factors(q, r)
    n_b = f.shape[-1]
    prefix = np.ones_like(f)
    suffix = np.ones_like(f)
    for k in range(1, n_b):
        prefix[..., k] = prefix[..., k - 1] * f[..., k - 1]
    for k in range(n_b - 2, -1, -1):
        suffix[..., k] = suffix[..., k + 1] * f[..., k + 1]
    return prefix * suffix


def complement(q: Requirements, r: EndowmentLike, c: int, p: int, b: int) -> float:
    """Contribution ``E[c, p, b]`` of all capabilities other than ``b``."""
    q, r = _matrices(q, r)
    c, p, b = _check_cpb(q, r, c, p, b)
    out = 1.0
    for k in range(q.shape[1]):
        if k != b:
            out *= 1.0 - q[p, k] * (1.0 - r[c, k])
    return out


def pair_complement(q: Requirements, r: EndowmentLike, c: int, p: int, b: int, b2: int) -> float:
    """Product of availability factors over all capabilities except ``b`` and ``b2``."""
    q, r = _matrices(q, r)
    c, p, b = _check_cpb(q, r, c, p, b)
    b2 = _check_index(b2, q.shape[1], "capability")
    if b == b2:
        raise ValueError(f"pair_complement needs two distinct capabilities, got b = b' = {b}")
    out = 1.0
    for k in range(q.shape[1]):
        if k != b and k != b2:
            out *= 1.0 - q[p, k] * (1.0 - r[c, k])
    return out


def output_grad_r(q: Requirements, r: EndowmentLike, c: int, p: int, b: int) -> float:
    """Partial derivative of ``Y[c, p]`` with respect to ``r[c, b]``: ``q[p, b] E[c, p, b]``."""
    E = complement(q, r, c, p, b)
    qm, _ = _matrices(q, r)
    return float(qm[p, b] * E)


def output_grad_q(q: Requirements, r: EndowmentLike, c: int, p: int, b: int) -> float:
    """Partial derivative of ``Y[c, p]`` with respect to ``q[p, b]``: ``-(1 - r[c, b]) E[c, p, b]``."""
    E = complement(q, r, c, p, b)
    _, rm = _matrices(q, r)
    return float(-(1.0 - rm[c, b]) * E)


def output_growth(q: Requirements, r: EndowmentLike, dr_dt, dq_dt) -> np.ndarray:
    """Rate of change of output given capability and requirement rates.

    ``dq_dt`` is taken as an exogenous input; nothing here evolves it.

    Returns
    -------
    ndarray, shape (C, P)
        ``sum_b E[c,p,b] * (q[p,b] dr[c,b]/dt - (1 - r[c,b]) dq[p,b]/dt)``
    """
    qm, rm = _matrices(q, r)
    dr_dt = np.asarray(dr_dt, dtype=float)
    dq_dt = np.asarray(dq_dt, dtype=float)
    if dr_dt.shape != rm.shape:
        axis = "economy" if dr_dt.ndim == 2 and dr_dt.shape[1:] == rm.shape[1:] else "capability"
        raise DimensionError(f"dr_dt {axis}", rm.shape, dr_dt.shape)
    if dq_dt.shape != qm.shape:
        axis = "activity" if dq_dt.ndim == 2 and dq_dt.shape[1:] == qm.shape[1:] else "capability"
        raise DimensionError(f"dq_dt {axis}", qm.shape, dq_dt.shape)
    E = complement_all(qm, rm)
    term = qm[None, :, :] * dr_dt[:, None, :] - (1.0 - rm[:, None, :]) * dq_dt[None, :, :]
    return np.sum(E * term, axis=2)
