"""Scalar probability distributions: power moments, densities, sampling.

Every distribution used anywhere in the steering pipeline lives here. Each
kind knows how to compute its raw power moments E[x^1..x^L] (closed form
where one exists, adaptive quadrature otherwise), evaluate its pdf, and draw
i.i.d. samples from a caller-owned random generator.

Values are immutable after construction and safe to share across threads;
all operations are pure given (distribution, seed).
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import quadrature
from .errors import (
    MomentUndefined,
    NoDensity,
    OrderOverflow,
    QuadratureNotConverged,
)

ORDER_CAP = 64
GRID_POINTS = 4096
_SUM_TOL = 1e-12


def grid_span(m1: float, m2_central: float) -> tuple[float, float]:
    """Default support window for tabulated densities and inverse-CDF tables.

    Ten standard deviations either side of the mean, which keeps the omitted
    tail mass of sub-Gaussian densities below ~1e-12.
    """
    half = 10.0 * math.sqrt(max(m2_central, 0.0))
    half = max(half, 1e-6)
    return m1 - half, m1 + half


class ScalarDistribution(abc.ABC):
    """Common interface for all scalar distribution kinds."""

    kind: str = "abstract"

    def moments(self, order: int, cap: int = ORDER_CAP) -> np.ndarray:
        """Raw power moments E[x^1..x^order].

        Raises OrderOverflow above `cap` and MomentUndefined when the
        requested moments do not exist.
        """
        if order < 1:
            raise ValueError(f"order must be >= 1, got {order}")
        if order > cap:
            raise OrderOverflow(f"order {order} exceeds cap {cap}")
        return self._moments(order)

    @abc.abstractmethod
    def _moments(self, order: int) -> np.ndarray: ...

    @abc.abstractmethod
    def pdf(self, x): ...

    @abc.abstractmethod
    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray: ...

    def support(self) -> tuple[float, float] | None:
        """Bounded support as (lo, hi), or None for the whole real line."""
        return None

    def quad_hint(self) -> tuple[float, float]:
        """(center, scale) hint for real-line quadrature node placement."""
        return 0.0, 1.0

    @abc.abstractmethod
    def to_config(self) -> dict: ...


def _gaussian_raw_moments(mean: float, var: float, order: int) -> np.ndarray:
    # E[(x-mu)^i] = 0 for odd i, (i-1)!! sigma^i for even i
    sigma = math.sqrt(var)
    central = [1.0]
    for i in range(1, order + 1):
        if i % 2:
            central.append(0.0)
        else:
            central.append(central[i - 2] * (i - 1) * sigma * sigma)
    out = np.empty(order)
    for ell in range(1, order + 1):
        out[ell - 1] = math.fsum(
            math.comb(ell, i) * central[i] * mean ** (ell - i)
            for i in range(0, ell + 1, 2)
        )
    return out


@dataclass(frozen=True)
class Gaussian(ScalarDistribution):
    mean: float
    var: float

    kind = "gaussian"

    def __post_init__(self):
        if not self.var > 0:
            raise ValueError(f"variance must be positive, got {self.var}")

    def _moments(self, order):
        return _gaussian_raw_moments(self.mean, self.var, order)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        z = (x - self.mean) ** 2 / (2.0 * self.var)
        return np.exp(-z) / math.sqrt(2.0 * math.pi * self.var)

    def sample(self, rng, n):
        return rng.normal(self.mean, math.sqrt(self.var), n)

    def quad_hint(self):
        return self.mean, math.sqrt(self.var)

    def to_config(self):
        return {"kind": "gaussian", "mean": self.mean, "var": self.var}


@dataclass(frozen=True)
class Uniform(ScalarDistribution):
    lo: float
    hi: float

    kind = "uniform"

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")

    def _moments(self, order):
        lo, hi = self.lo, self.hi
        return np.array([
            (hi ** (ell + 1) - lo ** (ell + 1)) / ((ell + 1) * (hi - lo))
            for ell in range(1, order + 1)
        ])

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        return np.where(inside, 1.0 / (self.hi - self.lo), 0.0)

    def sample(self, rng, n):
        return rng.uniform(self.lo, self.hi, n)

    def support(self):
        return self.lo, self.hi

    def quad_hint(self):
        return 0.5 * (self.lo + self.hi), max(self.hi - self.lo, 1e-6)

    def to_config(self):
        return {"kind": "uniform", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class Laplace(ScalarDistribution):
    loc: float
    scale: float

    kind = "laplace"

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def _moments(self, order):
        # E[(x-mu)^(2k)] = (2k)! b^(2k); odd central moments vanish
        central = [1.0]
        for i in range(1, order + 1):
            central.append(0.0 if i % 2 else central[i - 2] * i * (i - 1)
                           * self.scale * self.scale)
        out = np.empty(order)
        for ell in range(1, order + 1):
            out[ell - 1] = math.fsum(
                math.comb(ell, i) * central[i] * self.loc ** (ell - i)
                for i in range(0, ell + 1, 2)
            )
        return out

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-np.abs(x - self.loc) / self.scale) / (2.0 * self.scale)

    def sample(self, rng, n):
        return rng.laplace(self.loc, self.scale, n)

    def quad_hint(self):
        return self.loc, max(self.scale, 1e-6)

    def to_config(self):
        return {"kind": "laplace", "loc": self.loc, "scale": self.scale}


@dataclass(frozen=True)
class GeneralizedLogisticI(ScalarDistribution):
    """Type-I generalized logistic: pdf s e^{-z} / (1+e^{-z})^{s+1}, z = x-loc."""

    loc: float
    shape: float

    kind = "gen_logistic1"

    def __post_init__(self):
        if not self.shape > 0:
            raise ValueError(f"shape must be positive, got {self.shape}")

    def _moments(self, order):
        try:
            return moments_by_quadrature(self, order)
        except QuadratureNotConverged as exc:
            raise MomentUndefined(str(exc)) from exc

    def pdf(self, x):
        z = np.asarray(x, dtype=float) - self.loc
        # log-space form is stable in both tails
        log_pdf = math.log(self.shape) - z - (self.shape + 1.0) * np.logaddexp(0.0, -z)
        return np.exp(log_pdf)

    def sample(self, rng, n):
        # exact inverse CDF: F(x) = (1 + e^{-(x-loc)})^{-s}
        p = rng.random(n)
        return self.loc - np.log(np.expm1(-np.log(p) / self.shape))

    def quad_hint(self):
        return self.loc, 1.0 + 2.0 / self.shape

    def to_config(self):
        return {"kind": "gen_logistic1", "loc": self.loc, "shape": self.shape}


@dataclass(frozen=True)
class Cauchy(ScalarDistribution):
    """Cauchy has no finite moments; it is admitted as a realization prior only."""

    loc: float
    scale: float

    kind = "cauchy"

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    def _moments(self, order):
        raise MomentUndefined("Cauchy power moments diverge for every order >= 1")

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.loc) / self.scale
        return 1.0 / (math.pi * self.scale * (1.0 + z * z))

    def sample(self, rng, n):
        return self.loc + self.scale * rng.standard_cauchy(n)

    def quad_hint(self):
        return self.loc, self.scale

    def to_config(self):
        return {"kind": "cauchy", "loc": self.loc, "scale": self.scale}


@dataclass(frozen=True)
class Mixture(ScalarDistribution):
    weights: tuple[float, ...]
    components: tuple[ScalarDistribution, ...]

    kind = "mixture"

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.weights) != len(self.components) or not self.components:
            raise ValueError("weights and components must be non-empty and aligned")
        if any(w < 0 for w in self.weights):
            raise ValueError("mixture weights must be nonnegative")
        if abs(math.fsum(self.weights) - 1.0) > _SUM_TOL:
            raise ValueError("mixture weights must sum to 1")

    def _moments(self, order):
        total = np.zeros(order)
        for w, comp in zip(self.weights, self.components):
            total += w * comp.moments(order)
        return total

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return sum(w * comp.pdf(x) for w, comp in zip(self.weights, self.components))

    def sample(self, rng, n):
        cum = np.cumsum(self.weights)
        idx = np.searchsorted(cum, rng.random(n) * cum[-1])
        out = np.empty(n)
        for j, comp in enumerate(self.components):
            mask = idx == j
            k = int(mask.sum())
            if k:
                out[mask] = comp.sample(rng, k)
        return out

    def quad_hint(self):
        centers = []
        spreads = []
        for comp in self.components:
            c, s = comp.quad_hint()
            centers.append(c)
            spreads.append(s)
        center = math.fsum(w * c for w, c in zip(self.weights, centers))
        span = max(abs(c - center) + s for c, s in zip(centers, spreads))
        return center, max(span, 1e-6)

    def to_config(self):
        return {
            "kind": "mixture",
            "weights": list(self.weights),
            "components": [c.to_config() for c in self.components],
        }


@dataclass(frozen=True)
class Atomic(ScalarDistribution):
    points: tuple[float, ...]
    probs: tuple[float, ...]

    kind = "atomic"

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(float(p) for p in self.points))
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if len(self.points) != len(self.probs) or not self.points:
            raise ValueError("points and probs must be non-empty and aligned")
        if any(b <= a for a, b in zip(self.points, self.points[1:])):
            raise ValueError("atomic points must be strictly increasing")
        if any(p < 0 for p in self.probs):
            raise ValueError("atomic probs must be nonnegative")
        if abs(math.fsum(self.probs) - 1.0) > _SUM_TOL:
            raise ValueError("atomic probs must sum to 1")

    def _moments(self, order):
        return np.array([
            math.fsum(p * t ** ell for p, t in zip(self.probs, self.points))
            for ell in range(1, order + 1)
        ])

    def pdf(self, x):
        raise NoDensity("atomic distributions have no density")

    def sample(self, rng, n):
        cum = np.cumsum(self.probs)
        idx = np.searchsorted(cum, rng.random(n) * cum[-1])
        return np.asarray(self.points)[idx]

    def to_config(self):
        return {"kind": "atomic", "points": list(self.points), "probs": list(self.probs)}


@dataclass(frozen=True)
class GridDensity(ScalarDistribution):
    """Piecewise-linear density on a strictly increasing grid.

    Values are normalized at construction so the trapezoid integral is one;
    the pdf is linearly interpolated inside the grid and zero outside.
    """

    grid: np.ndarray
    values: np.ndarray

    kind = "grid"

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise ValueError("grid and values must be matching 1-D arrays")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.any(values < 0):
            raise ValueError("density values must be nonnegative")
        total = np.trapezoid(values, grid)
        if not total > 0:
            raise ValueError("density must have positive mass")
        values = values / total
        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_pdf(cls, fn, lo: float, hi: float, n: int = GRID_POINTS) -> "GridDensity":
        grid = np.linspace(lo, hi, n)
        return cls(grid, np.asarray(fn(grid), dtype=float))

    def _moments(self, order):
        # exact integral of x^ell against the piecewise-linear density
        a, b = self.grid[:-1], self.grid[1:]
        va, vb = self.values[:-1], self.values[1:]
        slope = (vb - va) / (b - a)
        intercept = va - slope * a
        out = np.empty(order)
        for ell in range(1, order + 1):
            p1 = (b ** (ell + 1) - a ** (ell + 1)) / (ell + 1)
            p2 = (b ** (ell + 2) - a ** (ell + 2)) / (ell + 2)
            out[ell - 1] = math.fsum(intercept * p1 + slope * p2)
        return out

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.interp(x, self.grid, self.values, left=0.0, right=0.0)

    @cached_property
    def _cdf(self) -> np.ndarray:
        seg = 0.5 * np.diff(self.grid) * (self.values[:-1] + self.values[1:])
        cdf = np.concatenate([[0.0], np.cumsum(seg)])
        return cdf / cdf[-1]

    def sample(self, rng, n):
        return np.interp(rng.random(n), self._cdf, self.grid)

    def support(self):
        return float(self.grid[0]), float(self.grid[-1])

    def quad_hint(self):
        mid = 0.5 * (self.grid[0] + self.grid[-1])
        return mid, max((self.grid[-1] - self.grid[0]) / 4.0, 1e-6)

    def to_config(self):
        return {"kind": "grid", "grid": self.grid.tolist(), "values": self.values.tolist()}


def moments_by_quadrature(d: ScalarDistribution, order: int,
                          rel_tol: float = 1e-10) -> np.ndarray:
    """Power moments computed by integrating x^ell * pdf(x).

    Independent of any closed-form path; used as the cross-check oracle and
    as the only route for kinds without closed-form moments.
    """
    def integrand(x):
        p = d.pdf(x)
        return np.stack([x ** ell * p for ell in range(1, order + 1)])

    try:
        bounds = d.support()
        if bounds is not None:
            est = quadrature.integrate_interval(integrand, *bounds, rel_tol=rel_tol)
        else:
            center, scale = d.quad_hint()
            est = quadrature.integrate_real_line(
                integrand, center=center, scale=scale, rel_tol=rel_tol
            )
    except QuadratureNotConverged as exc:
        raise MomentUndefined(f"divergent or non-convergent quadrature: {exc}") from exc
    return np.atleast_1d(est)


def pdf_normalization(d: ScalarDistribution, rel_tol: float = 1e-10) -> float:
    """Integral of the pdf over its support (should be 1)."""
    bounds = d.support()
    if bounds is not None:
        return float(quadrature.integrate_interval(lambda x: d.pdf(x), *bounds,
                                                   rel_tol=rel_tol))
    center, scale = d.quad_hint()
    return float(quadrature.integrate_real_line(lambda x: d.pdf(x), center=center,
                                                scale=scale, rel_tol=rel_tol))


_KINDS = {
    "gaussian": lambda c: Gaussian(c["mean"], c["var"]),
    "uniform": lambda c: Uniform(c["lo"], c["hi"]),
    "laplace": lambda c: Laplace(c["loc"], c["scale"]),
    "gen_logistic1": lambda c: GeneralizedLogisticI(c["loc"], c["shape"]),
    "cauchy": lambda c: Cauchy(c["loc"], c["scale"]),
    "mixture": lambda c: Mixture(
        tuple(c["weights"]), tuple(from_config(x) for x in c["components"])
    ),
    "atomic": lambda c: Atomic(tuple(c["points"]), tuple(c["probs"])),
    "grid": lambda c: GridDensity(np.asarray(c["grid"]), np.asarray(c["values"])),
}


def from_config(cfg: dict) -> ScalarDistribution:
    """Build a distribution from its tagged-record configuration."""
    try:
        kind = cfg["kind"]
        builder = _KINDS[kind]
    except KeyError as exc:
        raise ValueError(f"unknown distribution config: {cfg!r}") from exc
    return builder(cfg)
