"""Moment dynamics of the controlled ensemble x(k+1) = (1-c) a f(x) + u~.

With a, x, u~ mutually independent, the state moments obey

    E[x^l(k+1)] = sum_{j=0..l} C(l,j) E[a~^j] E[f(x)^j] E[u~^(l-j)],

where a~ = (1-c) a. The order-l equation involves only lower-order u~
moments, so the control moments solve recursively given a gain c. The
system matrix form of this linear map is never materialized; the recursion
is equation-identical and avoids the index bookkeeping of the rectangular
interleaved-zero matrices that higher-degree dynamics produce.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .distributions import ScalarDistribution
from .errors import InsufficientOrder, NonFiniteIntermediate
from .moment_core import MomentVector


@lru_cache(maxsize=None)
def _binom(order: int) -> np.ndarray:
    """Pascal triangle as floats; exact integers overflow fixed-width types
    well below the order cap."""
    table = np.zeros((order + 1, order + 1))
    table[:, 0] = 1.0
    for i in range(1, order + 1):
        for j in range(1, i + 1):
            table[i, j] = table[i - 1, j - 1] + table[i - 1, j]
    return table


@dataclass(frozen=True)
class DynamicsSpec:
    """State map kind plus the per-step parameter distribution.

    kind is one of "linear", "monomial", "polynomial"; `degree` is the
    polynomial degree of f (1 for linear). `coeffs` holds p_0..p_H for the
    polynomial kind. `param` is a single distribution used at every step or
    a sequence with one entry per step.
    """

    kind: str
    degree: int = 1
    coeffs: tuple[float, ...] | None = None
    param: ScalarDistribution | tuple[ScalarDistribution, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("linear", "monomial", "polynomial"):
            raise ValueError(f"unknown dynamics kind {self.kind!r}")
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if self.kind == "polynomial":
            if not self.coeffs:
                raise ValueError("polynomial dynamics need coefficients")
            coeffs = tuple(float(c) for c in self.coeffs)
            if not all(math.isfinite(c) for c in coeffs):
                raise ValueError("polynomial coefficients must be finite")
            if coeffs[-1] == 0.0:
                raise ValueError("leading polynomial coefficient must be nonzero")
            object.__setattr__(self, "coeffs", coeffs)
            object.__setattr__(self, "degree", len(coeffs) - 1)
        if isinstance(self.param, (list, tuple)):
            object.__setattr__(self, "param", tuple(self.param))

    @classmethod
    def linear(cls, param=None) -> "DynamicsSpec":
        return cls("linear", 1, None, param)

    @classmethod
    def monomial(cls, degree: int, param=None) -> "DynamicsSpec":
        return cls("monomial", degree, None, param)

    @classmethod
    def polynomial(cls, coeffs, param=None) -> "DynamicsSpec":
        return cls("polynomial", 1, tuple(coeffs), param)

    def param_at(self, k: int) -> ScalarDistribution:
        if self.param is None:
            raise ValueError("dynamics spec has no parameter distribution")
        if isinstance(self.param, tuple):
            return self.param[k]
        return self.param

    def f(self, x):
        """Pointwise state map, for simulation."""
        x = np.asarray(x, dtype=float)
        if self.kind == "linear":
            return x
        if self.kind == "monomial":
            return x ** self.degree
        return np.polynomial.polynomial.polyval(x, np.asarray(self.coeffs))


def _f_moments(x: MomentVector, dyn: DynamicsSpec, jmax: int) -> np.ndarray:
    """E[f(x)^j] for j = 0..jmax."""
    out = np.empty(jmax + 1)
    out[0] = 1.0
    if dyn.kind == "linear":
        if x.order < jmax:
            raise InsufficientOrder(
                f"linear dynamics need {jmax} state moments, have {x.order}"
            )
        out[1:] = x.values[:jmax]
        return out
    if dyn.kind == "monomial":
        need = dyn.degree * jmax
        if x.order < need:
            raise InsufficientOrder(
                f"monomial({dyn.degree}) needs {need} state moments, have {x.order}"
            )
        out[1:] = x.values[dyn.degree * np.arange(1, jmax + 1) - 1]
        return out
    # polynomial: expand f^j by iterated coefficient convolution, then take
    # expectations against the state moments
    need = dyn.degree * jmax
    if x.order < need:
        raise InsufficientOrder(
            f"polynomial degree {dyn.degree} needs {need} state moments, have {x.order}"
        )
    full = np.concatenate([[1.0], x.values])
    power = np.array([1.0])
    coeffs = np.asarray(dyn.coeffs)
    for j in range(1, jmax + 1):
        power = np.convolve(power, coeffs)
        out[j] = math.fsum(power * full[: power.size])
    return out


def _check_gain(c: float):
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"gain must lie in [0, 1], got {c}")


def _a_tilde(a: MomentVector, c: float, jmax: int) -> np.ndarray:
    """E[a~^j] = (1-c)^j E[a^j] for j = 0..jmax."""
    if a.order < jmax:
        raise InsufficientOrder(
            f"need parameter moments up to {jmax}, have {a.order}"
        )
    out = np.empty(jmax + 1)
    out[0] = 1.0
    out[1:] = (1.0 - c) ** np.arange(1, jmax + 1) * a.values[:jmax]
    return out


def solve_control_moments(x_now: MomentVector, x_next: MomentVector,
                          a: MomentVector, c: float,
                          dyn: DynamicsSpec) -> MomentVector:
    """Control moments u~ that steer the state moments x_now -> x_next.

    Solved order by order: the order-l moment equation is triangular in the
    u~ moments. Round trip: propagate(x_now, result, a, c, dyn) == x_next.
    """
    _check_gain(c)
    L = x_next.order
    F = _f_moments(x_now, dyn, L)
    at = _a_tilde(a, c, L)
    B = _binom(L)
    u = np.empty(L + 1)
    u[0] = 1.0
    for ell in range(1, L + 1):
        coupling = math.fsum(
            B[ell, j] * at[j] * F[j] * u[ell - j] for j in range(1, ell + 1)
        )
        u[ell] = x_next.moment(ell) - coupling
    if not np.all(np.isfinite(u)):
        raise NonFiniteIntermediate("control-moment recursion left finite range")
    return MomentVector(u[1:])


def propagate(x_now: MomentVector, u_tilde: MomentVector, a: MomentVector,
              c: float, dyn: DynamicsSpec) -> MomentVector:
    """Next-step state moments under control moments u~."""
    _check_gain(c)
    L = u_tilde.order
    F = _f_moments(x_now, dyn, L)
    at = _a_tilde(a, c, L)
    B = _binom(L)
    out = np.empty(L)
    for ell in range(1, L + 1):
        out[ell - 1] = math.fsum(
            B[ell, j] * at[j] * F[j] * u_tilde.moment(ell - j)
            for j in range(0, ell + 1)
        )
    if not np.all(np.isfinite(out)):
        raise NonFiniteIntermediate("moment propagation left finite range")
    return MomentVector(out)


def control_cost(x_now: MomentVector, u_tilde: MomentVector, a: MomentVector,
                 c: float, dyn: DynamicsSpec) -> float:
    """Second moment of the applied input u = -c a f(x) + u~."""
    _check_gain(c)
    if u_tilde.order < 2:
        raise InsufficientOrder("control cost needs u~ moments up to order 2")
    F = _f_moments(x_now, dyn, 2)
    if a.order < 2:
        raise InsufficientOrder("control cost needs parameter moments up to order 2")
    return (
        c * c * a.moment(2) * F[2]
        - 2.0 * c * a.moment(1) * F[1] * u_tilde.moment(1)
        + u_tilde.moment(2)
    )


def full_input_moments(x_now: MomentVector, u_tilde: MomentVector,
                       a: MomentVector, c: float, dyn: DynamicsSpec,
                       order: int) -> MomentVector:
    """Moments of the applied input u = -c a f(x) + u~ up to `order`.

    Standard binomial expansion; the order-2 value coincides with
    control_cost by construction.
    """
    _check_gain(c)
    if u_tilde.order < order:
        raise InsufficientOrder(
            f"need u~ moments up to {order}, have {u_tilde.order}"
        )
    F = _f_moments(x_now, dyn, order)
    if a.order < order:
        raise InsufficientOrder(f"need parameter moments up to {order}")
    B = _binom(order)
    out = np.empty(order)
    for ell in range(1, order + 1):
        out[ell - 1] = math.fsum(
            B[ell, i] * (-c) ** i * a.moment(i) * F[i] * u_tilde.moment(ell - i)
            for i in range(0, ell + 1)
        )
    return MomentVector(out)


@dataclass(frozen=True)
class StepMoments:
    """One solved step of the moment system."""

    x_now: MomentVector
    x_next: MomentVector
    c: float
    u_tilde: MomentVector
    a_tilde_moments: np.ndarray

    def __post_init__(self):
        if self.u_tilde.order != self.x_next.order:
            raise InsufficientOrder("u~ order must equal the next state order")


def step_moments(x_now: MomentVector, x_next: MomentVector, a: MomentVector,
                 c: float, dyn: DynamicsSpec) -> StepMoments:
    """Solve one step and bundle the quantities that defined it."""
    u = solve_control_moments(x_now, x_next, a, c, dyn)
    at = _a_tilde(a, c, x_next.order)[1:]
    return StepMoments(x_now, x_next, c, u, at)
