"""Independent brute-force routes for checking the moment machinery.

Everything here recomputes quantities by a different algorithm than the
production code paths: exhaustive enumeration over atomic supports instead
of the moment recursion, and composite Simpson integration of exported
density tables instead of the dual solver's quadrature grid.
"""

from __future__ import annotations

import math
from itertools import product

import numpy as np

from .moment_dynamics import DynamicsSpec


def enumerate_state_moments(x_atoms, x_probs, a_atoms, a_probs,
                            u_atoms, u_probs, c: float, dyn: DynamicsSpec,
                            order: int) -> np.ndarray:
    """Exact next-state moments by enumerating all atom triples.

    Builds the full atomic law of (1-c) a f(x) + u~ with product
    probabilities and reads the moments off directly.
    """
    f = dyn.f
    terms = {ell: [] for ell in range(1, order + 1)}
    for (x, px), (a, pa), (u, pu) in product(
        zip(x_atoms, x_probs), zip(a_atoms, a_probs), zip(u_atoms, u_probs)
    ):
        prob = px * pa * pu
        value = (1.0 - c) * a * float(f(x)) + u
        for ell in range(1, order + 1):
            terms[ell].append(prob * value ** ell)
    return np.array([math.fsum(terms[ell]) for ell in range(1, order + 1)])


def enumerate_input_moments(x_atoms, x_probs, a_atoms, a_probs,
                            u_atoms, u_probs, c: float, dyn: DynamicsSpec,
                            order: int) -> np.ndarray:
    """Exact applied-input moments: the law of -c a f(x) + u~ by enumeration."""
    f = dyn.f
    terms = {ell: [] for ell in range(1, order + 1)}
    for (x, px), (a, pa), (u, pu) in product(
        zip(x_atoms, x_probs), zip(a_atoms, a_probs), zip(u_atoms, u_probs)
    ):
        prob = px * pa * pu
        value = -c * a * float(f(x)) + u
        for ell in range(1, order + 1):
            terms[ell].append(prob * value ** ell)
    return np.array([math.fsum(terms[ell]) for ell in range(1, order + 1)])


def simpson_table_moments(u: np.ndarray, pdf: np.ndarray, order: int) -> np.ndarray:
    """Moments of a uniformly tabulated density via composite Simpson.

    Requires an odd number of uniformly spaced nodes.
    """
    u = np.asarray(u, dtype=float)
    pdf = np.asarray(pdf, dtype=float)
    if u.size < 3 or u.size % 2 == 0:
        raise ValueError("Simpson needs an odd number of nodes (>= 3)")
    h = np.diff(u)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0.0):
        raise ValueError("Simpson needs a uniform grid")
    w = np.ones(u.size)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= h[0] / 3.0
    return np.array([
        math.fsum(w * pdf * u ** ell) for ell in range(1, order + 1)
    ])


def atomic_table_moments(points, probs, order: int) -> np.ndarray:
    """Moments of an atomic table: direct weighted power sums."""
    return np.array([
        math.fsum(p * t ** ell for p, t in zip(probs, points))
        for ell in range(1, order + 1)
    ])
