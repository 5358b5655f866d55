"""Moment-vector and Hankel-matrix algebra.

Holds the MomentVector container, Hankel construction and positivity tests,
the straight-line (maximum smoothness) moment trajectory, and the moment
order schedule required by polynomial dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    EndpointNotPD,
    LengthExceeded,
    OddOrder,
    OrderMismatch,
    OrderOverflow,
)

#: PD/PSD classification tolerance on the smallest eigenvalue of the
#: scale-normalized Hankel matrix.
TAU_PSD = 1e-10

#: Hard cap on moment orders; geometric schedules beyond this are meaningless
#: in double precision.
ORDER_CAP = 64


@dataclass(frozen=True)
class MomentVector:
    """Raw power moments E[x^1..x^L] of a scalar random variable."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("moment vector must be a non-empty 1-D array")
        if not np.all(np.isfinite(arr)):
            raise ValueError("moments must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def order(self) -> int:
        return self.values.size

    def moment(self, ell: int) -> float:
        """E[x^ell]; ell = 0 returns 1."""
        if ell == 0:
            return 1.0
        return float(self.values[ell - 1])

    def __len__(self) -> int:
        return self.values.size


def hankel(m: MomentVector) -> np.ndarray:
    """(n+1) x (n+1) moment Hankel matrix with entry (i, j) = m_{i+j}, m_0 = 1."""
    if m.order % 2:
        raise OddOrder(f"Hankel matrix needs an even order, got {m.order}")
    n = m.order // 2
    full = np.concatenate([[1.0], m.values])
    idx = np.arange(n + 1)
    return full[idx[:, None] + idx[None, :]]


def scaled_hankel(m: MomentVector) -> np.ndarray:
    """Hankel matrix of the variable rescaled to unit second moment.

    Conjugating by diag(1, s, ..., s^n) with s = m2^(-1/2) makes eigenvalue
    tolerances scale-free; raw Hankels of high-order moments are badly
    conditioned.
    """
    H = hankel(m)
    m2 = m.moment(2)
    if m2 <= 0:
        return H
    s = 1.0 / np.sqrt(m2)
    d = s ** np.arange(H.shape[0])
    return H * np.outer(d, d)


def min_eig(H: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    return float(np.linalg.eigvalsh(H)[0])


def is_psd(m: MomentVector, tol: float = TAU_PSD) -> bool:
    return min_eig(scaled_hankel(m)) >= -tol


def is_pd(m: MomentVector, tol: float = TAU_PSD) -> bool:
    return min_eig(scaled_hankel(m)) > tol


def smooth_trajectory(x0: MomentVector, xK: MomentVector, K: int) -> list[MomentVector]:
    """Moment trajectory of maximal transition smoothness.

    Entry k is the convex combination ((K-k)/K) x0 + (k/K) xK; endpoints are
    returned verbatim. Every interpolated Hankel matrix inherits positive
    definiteness from the endpoints.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    if x0.order != xK.order:
        raise OrderMismatch(f"orders differ: {x0.order} vs {xK.order}")
    if not is_pd(x0) or not is_pd(xK):
        raise EndpointNotPD("trajectory endpoints must have PD Hankel matrices")
    out = [x0]
    for k in range(1, K):
        w1 = k / K
        w0 = (K - k) / K
        out.append(MomentVector(w0 * x0.values + w1 * xK.values))
    out.append(xK)
    return out


def extended_schedule(n: int, K: int, degree: int, cap: int = ORDER_CAP) -> list[int]:
    """Required moment-vector length at each step for degree-d dynamics.

    Propagating a degree-d map through K steps consumes d extra moment orders
    per remaining step: length(k) = 2n * degree^(K-k). Degree 1 collapses to
    the constant 2n.
    """
    if n < 1 or K < 1 or degree < 1:
        raise ValueError("need n >= 1, K >= 1, degree >= 1")
    lengths = [2 * n * degree ** (K - k) for k in range(K + 1)]
    if lengths[0] > cap:
        raise OrderOverflow(
            f"initial moment order {lengths[0]} exceeds cap {cap}; "
            "the problem is infeasible at this precision"
        )
    return lengths


def truncate(m: MomentVector, length: int) -> MomentVector:
    """First `length` moments of m. Positivity survives truncation
    (principal submatrix)."""
    if length > m.order:
        raise LengthExceeded(f"cannot truncate order {m.order} to {length}")
    if length == m.order:
        return m
    return MomentVector(m.values[:length])
