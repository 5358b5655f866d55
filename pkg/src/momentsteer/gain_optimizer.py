"""Per-step scalar gain optimization.

Minimizes the input second moment E[u^2(k)] over the feedback gain
c in [0, 1], subject to the induced control moments having a positive
semidefinite Hankel matrix. Feasibility of c = 1 is structural (the control
moments then equal the next state's moments, whose Hankel is PD along a
valid trajectory), and the feasible set is an interval [eps, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleAtOne
from .moment_core import TAU_PSD, MomentVector, min_eig, scaled_hankel
from .moment_dynamics import DynamicsSpec, control_cost, solve_control_moments

#: Golden-section interval tolerance for the scalar cost search.
_GOLDEN_TOL = 1e-10

#: The feasibility boundary is polished well past the nominal 1e-8 width so
#: that a floor-bound optimum lands inside the PSD tolerance band and is
#: recognized as the atomic boundary case.
_BISECT_WIDTH = 1e-12

_INV_PHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class GainResult:
    """Outcome of one per-step gain optimization."""

    c_star: float
    u_tilde: MomentVector
    feasible_lo: float
    boundary_atomic: bool
    cost: float
    min_eig: float


def _u_of(c, x_now, x_next, a, dyn) -> MomentVector:
    return solve_control_moments(x_now, x_next, a, c, dyn)


def _feasibility(c, x_now, x_next, a, dyn, tol=TAU_PSD):
    u = _u_of(c, x_now, x_next, a, dyn)
    return min_eig(scaled_hankel(u)) >= -tol, u


def feasible_floor(x_now: MomentVector, x_next: MomentVector, a: MomentVector,
                   dyn: DynamicsSpec, width: float = _BISECT_WIDTH) -> float:
    """Smallest gain whose induced control Hankel is PSD.

    Bisection on c; returns 0 when the whole interval is feasible. Raises
    InfeasibleAtOne when even full feedback fails, which signals an invalid
    trajectory (the next state's own Hankel is not PSD).
    """
    ok0, _ = _feasibility(0.0, x_now, x_next, a, dyn)
    if ok0:
        return 0.0
    ok1, _ = _feasibility(1.0, x_now, x_next, a, dyn)
    if not ok1:
        raise InfeasibleAtOne(
            "control moments at c = 1 are not PSD: next-state Hankel invalid"
        )
    lo, hi = 0.0, 1.0
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        ok, _ = _feasibility(mid, x_now, x_next, a, dyn)
        if ok:
            hi = mid
        else:
            lo = mid
    return hi


def optimize_gain(x_now: MomentVector, x_next: MomentVector, a: MomentVector,
                  dyn: DynamicsSpec) -> GainResult:
    """Minimize the input second moment over the feasible gain interval.

    The cost is a smooth convex scalar function of c (the control moments
    depend on c through the solve recursion, so it is not a fixed quadratic);
    a derivative-free golden-section search is robust to that coupling.
    Ties break toward smaller c.
    """
    eps = feasible_floor(x_now, x_next, a, dyn)

    def cost_at(c):
        u = _u_of(c, x_now, x_next, a, dyn)
        return control_cost(x_now, u, a, c, dyn)

    lo, hi = eps, 1.0
    c1 = hi - _INV_PHI * (hi - lo)
    c2 = lo + _INV_PHI * (hi - lo)
    f1, f2 = cost_at(c1), cost_at(c2)
    while hi - lo > _GOLDEN_TOL:
        if f1 <= f2:
            hi, c2, f2 = c2, c1, f1
            c1 = hi - _INV_PHI * (hi - lo)
            f1 = cost_at(c1)
        else:
            lo, c1, f1 = c1, c2, f2
            c2 = lo + _INV_PHI * (hi - lo)
            f2 = cost_at(c2)
    interior = 0.5 * (lo + hi)

    # candidate sweep with ties toward smaller c
    best_c = eps
    best_cost = cost_at(eps)
    for c in (interior, 1.0):
        val = cost_at(c)
        if val < best_cost - 1e-12 * max(1.0, abs(best_cost)):
            best_c, best_cost = c, val

    u_star = _u_of(best_c, x_now, x_next, a, dyn)
    me = min_eig(scaled_hankel(u_star))
    return GainResult(
        c_star=best_c,
        u_tilde=u_star,
        feasible_lo=eps,
        boundary_atomic=me <= TAU_PSD,
        cost=best_cost,
        min_eig=me,
    )
