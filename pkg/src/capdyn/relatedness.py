"""Capability complementarity and the cross-effect of one capability on another's growth."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .model import (
    DimensionError,
    ModelParams,
    _check_index,
    _matrices,
    as_requirements,
    complement,
    pair_complement,
)


@dataclass(frozen=True)
class RelatednessWeights:
    """Nonnegative per-activity weights, at least one positive."""

    W: np.ndarray

    def __post_init__(self):
        W = np.array(self.W, dtype=float)
        if W.ndim != 1:
            raise ValueError("weights must be a vector")
        if np.any(W < 0) or not np.all(np.isfinite(W)):
            raise ValueError("weights must be finite and nonnegative")
        if not np.any(W > 0):
            raise ValueError("at least one weight must be positive")
        W.setflags(write=False)
        object.__setattr__(self, "W", W)

    @classmethod
    def uniform(cls, n_activities: int) -> "RelatednessWeights":
        return cls(np.ones(n_activities))


@dataclass(frozen=True)
class ComplementarityMatrix:
    """Symmetric capability-by-capability matrix ``C[b, b'] = sum_p W_p q[p,b] q[p,b']``.

    The diagonal is kept for completeness but carries no meaning as a
    complementarity; use :meth:`off_diagonal` for pairwise analysis.
    """

    C: np.ndarray
    capabilities: Optional[Sequence[str]] = None

    def off_diagonal(self) -> np.ndarray:
        out = np.array(self.C, dtype=float)
        np.fill_diagonal(out, 0.0)
        return out

    def most_complementary_pair(self) -> tuple:
        off = self.off_diagonal()
        n = off.shape[0]
        if n < 2:
            raise ValueError("need at least two capabilities")
        iu = np.triu_indices(n, k=1)
        k = int(np.argmax(off[iu]))
        return int(iu[0][k]), int(iu[1][k])


def complementarity_matrix(q, w: Optional[RelatednessWeights] = None) -> ComplementarityMatrix:
    req = as_requirements(q)
    qm = req.q
    if w is None:
        w = RelatednessWeights.uniform(qm.shape[0])
    elif not isinstance(w, RelatednessWeights):
        w = RelatednessWeights(w)
    if w.W.shape[0] != qm.shape[0]:
        raise DimensionError("activity", qm.shape[0], w.W.shape[0])
    C = qm.T @ (w.W[:, None] * qm)
    C = 0.5 * (C + C.T)
    return ComplementarityMatrix(C, req.capabilities)


def cross_partial_output(q, r, c: int, p: int, b: int, b2: int) -> float:
    """Mixed second derivative of ``Y[c, p]`` in ``r[c, b]`` and ``r[c, b2]``."""
    E = pair_complement(q, r, c, p, b, b2)
    qm, _ = _matrices(q, r)
    return float(E * qm[p, b] * qm[p, b2])


def growth_coupling(q, r, params: ModelParams, c: int, b: int, b2: int) -> float:
    """Derivative of the growth rate of ``r[c, b]`` with respect to ``r[c, b2]``.

    ``gamma (1 - r[c,b]) sum_p E[c,p,b2] q[p,b] q[p,b2] / q_p``; activities
    with no requirements at all contribute nothing.
    """
    req = as_requirements(q)
    qm, rm = _matrices(req, r)
    c = _check_index(c, rm.shape[0], "economy")
    b = _check_index(b, qm.shape[1], "capability")
    b2 = _check_index(b2, qm.shape[1], "capability")
    if b == b2:
        raise ValueError(f"growth_coupling needs two distinct capabilities, got b = b' = {b}")
    q_p = req.q_p
    total = 0.0
    for p in range(qm.shape[0]):
        if q_p[p] == 0.0:
            continue
        shared = qm[p, b] * qm[p, b2]
        if shared == 0.0:
            continue
        total += complement(req, rm, c, p, b2) * shared / q_p[p]
    return float(params.gamma * (1.0 - rm[c, b]) * total)


def coupling_matrix(q, r, params: ModelParams, c: int) -> np.ndarray:
    """All pairwise couplings for economy ``c``; entry ``[b, b2]`` is ``growth_coupling(..., b, b2)``.

    The diagonal is left at zero.
    """
    req = as_requirements(q)
    qm, rm = _matrices(req, r)
    n_b = qm.shape[1]
    out = np.zeros((n_b, n_b))
    for b in range(n_b):
        for b2 in range(n_b):
            if b != b2:
                out[b, b2] = growth_coupling(req, rm, params, c, b, b2)
    return out
