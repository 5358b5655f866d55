"""Density realization from prescribed power moments.

Given a moment vector sigma with a positive definite Hankel matrix, the
realized density is the minimizer of the Kullback-Leibler divergence to a
prior r among all densities on R matching those moments. Its dual is a
finite-dimensional convex program over the Hankel parameters lam of a
positive polynomial q(u) = sum_m count(m) lam_m u^m:

    J_r(lam) = tr(Lam Sigma) - int r(u) log q(u) du,

whose unique stationary point yields the density r/q, with moments matching
sigma exactly at stationarity. When the Hankel matrix is singular the moment
vector sits on the boundary of the moment cone and is realized instead by an
atomic measure recovered from the kernel polynomial of the Hankel matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import quadrature
from .distributions import Cauchy, Gaussian, ScalarDistribution, grid_span
from .errors import (
    ComplexRoots,
    DegenerateVariance,
    HankelIndefinite,
    NegativeWeight,
    NoDensity,
    NonPositiveQ,
    NotConverged,
)
from .moment_core import TAU_PSD, MomentVector, min_eig, scaled_hankel

#: Number of nodes in the frozen dual-quadrature grid (panels x rule order).
_GRID_PANELS = 256
_GRID_ORDER = 16

#: Sampling/export table resolution; odd so the table Simpson-integrates.
TABLE_POINTS = 4097

_GRAD_TOL = 1e-9
_MAX_ITER = 200

#: Cauchy prior scale such that its interquartile range matches a Gaussian
#: of the same nominal variance (IQR_gauss = 1.349 sigma, IQR_cauchy = 2 gamma).
_CAUCHY_IQR_FACTOR = 0.6745


def _counts(n: int) -> np.ndarray:
    """count(m) = #{(i, j) in [0, n]^2 : i + j = m}."""
    m = np.arange(2 * n + 1)
    return np.minimum(m, 2 * n - m) + 1.0


class RealizationProblem:
    """Moment-matching problem with a frozen quadrature grid.

    The grid is fixed at construction so that objective, gradient, and
    Hessian are mutually consistent (finite differences of the objective
    reproduce the gradient exactly up to truncation error).
    """

    def __init__(self, sigma: MomentVector, prior: ScalarDistribution,
                 n: int | None = None, panels: int = _GRID_PANELS,
                 order: int = _GRID_ORDER):
        if sigma.order % 2:
            raise ValueError("sigma must have even order")
        if n is None:
            n = sigma.order // 2
        if sigma.order != 2 * n:
            raise ValueError(f"sigma order {sigma.order} != 2n = {2 * n}")
        me = min_eig(scaled_hankel(sigma))
        if me < -TAU_PSD:
            raise HankelIndefinite(
                f"sigma Hankel has scaled min eigenvalue {me:.3e} < -{TAU_PSD}"
            )
        self.sigma = sigma
        self.prior = prior
        self.n = n
        center, scale = prior.quad_hint()
        self.nodes, self.weights = quadrature.real_line_rule(
            panels, order, center=center, scale=scale
        )
        self.r = np.asarray(prior.pdf(self.nodes), dtype=float)
        if np.any(self.r < 0):
            raise ValueError("prior pdf must be nonnegative")
        mass = float(self.weights @ self.r)
        if abs(mass - 1.0) > 1e-8:
            raise ValueError(f"prior integrates to {mass!r} on the working grid")
        # positivity of q is enforced where the prior carries mass; the far
        # transform tail (where r underflows to exactly 0) contributes nothing
        # to any integral and is covered by the leading-coefficient rule
        self.mass_mask = self.r > 0.0
        # u^m for m = 0 .. 4n (Hessian needs powers up to m + m')
        self.powers = self.nodes[None, :] ** np.arange(4 * n + 1)[:, None]
        self.counts = _counts(n)
        self.sigma_ext = np.concatenate([[1.0], sigma.values])

    # -- dual pieces --------------------------------------------------------

    def q_values(self, lam: np.ndarray) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        return (self.counts * lam) @ self.powers[: 2 * self.n + 1]

    def _q_positive(self, lam: np.ndarray) -> bool:
        # mass-bearing grid check plus a nonnegative even-degree leading
        # coefficient stand in for positivity of q on all of R
        if lam[-1] < 0:
            return False
        return bool(np.all(self.q_values(lam)[self.mass_mask] > 0))

    def dual_objective(self, lam: np.ndarray) -> tuple[float, np.ndarray]:
        """Objective value and gradient at Hankel parameters lam."""
        lam = np.asarray(lam, dtype=float)
        q = self.q_values(lam)
        mask = self.mass_mask
        if np.any(q[mask] <= 0):
            raise NonPositiveQ("q is not positive on the quadrature grid")
        trace = float(self.counts * lam @ self.sigma_ext)
        wr = self.weights * self.r
        value = trace - float(wr[mask] @ np.log(q[mask]))
        ratio = np.zeros_like(q)
        ratio[mask] = wr[mask] / q[mask]
        grid_moments = self.powers[: 2 * self.n + 1] @ ratio
        grad = self.counts * (self.sigma_ext - grid_moments)
        return value, grad

    def dual_hessian(self, lam: np.ndarray) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        q = self.q_values(lam)
        mask = self.mass_mask
        if np.any(q[mask] <= 0):
            raise NonPositiveQ("q is not positive on the quadrature grid")
        ratio = np.zeros_like(q)
        ratio[mask] = self.weights[mask] * self.r[mask] / (q[mask] * q[mask])
        m = 2 * self.n + 1
        idx = np.arange(m)
        cross = (self.powers @ ratio)[idx[:, None] + idx[None, :]]
        return np.outer(self.counts, self.counts) * cross

    # -- solver -------------------------------------------------------------

    def _line_search(self, lam, value, grad, direction):
        """Backtrack until q stays positive and Armijo holds; None on stall."""
        slope = float(grad @ direction)
        t = 1.0
        while t >= 1e-14:
            cand = lam + t * direction
            if self._q_positive(cand):
                cand_value, cand_grad = self.dual_objective(cand)
                if cand_value <= value + 1e-4 * t * slope:
                    return cand, cand_value, cand_grad
            t *= 0.5
        return None

    def _christoffel_start(self) -> np.ndarray:
        """Warm start from the inverse moment matrix.

        q0(u) = G(u)^T Sigma^{-1} G(u) depends only on the anti-diagonal
        sums of Sigma^{-1} and is strictly positive with a strictly positive
        leading coefficient, which places the iterate inside the cone with
        the tail behavior an interior optimum needs.
        """
        n = self.n
        idx = np.arange(n + 1)
        moment_matrix = self.sigma_ext[idx[:, None] + idx[None, :]]
        inv = np.linalg.inv(moment_matrix)
        lam = np.array([
            inv[idx[:, None] + idx[None, :] == m].sum() for m in range(2 * n + 1)
        ]) / self.counts
        # rescale so the implied density has unit mass
        mass = float(np.where(self.mass_mask,
                              self.weights * self.r
                              / np.where(self.mass_mask, self.q_values(lam), 1.0),
                              0.0).sum())
        return lam * mass

    def _descend(self, lam) -> tuple[np.ndarray, int, float]:
        value, grad = self.dual_objective(lam)
        for it in range(_MAX_ITER):
            gnorm = float(np.max(np.abs(grad)))
            if gnorm <= _GRAD_TOL:
                return lam, it, gnorm
            newton = True
            try:
                direction = np.linalg.solve(self.dual_hessian(lam), -grad)
            except np.linalg.LinAlgError:
                direction, newton = -grad, False
            if not np.all(np.isfinite(direction)) or grad @ direction >= 0:
                direction, newton = -grad, False
            step = self._line_search(lam, value, grad, direction)
            if step is None and newton:
                step = self._line_search(lam, value, grad, -grad)
            if step is None and lam[-1] <= 1e-12:
                # leading coefficient pinned at its bound: move on the face
                for d in (direction, -grad):
                    if d[-1] < 0:
                        projected = d.copy()
                        projected[-1] = 0.0
                        if grad @ projected < 0:
                            step = self._line_search(lam, value, grad, projected)
                            if step is not None:
                                break
            if step is None:
                raise NotConverged(
                    f"line search stalled at iteration {it}",
                    lam=lam, grad_norm=gnorm, iterations=it,
                )
            lam, value, grad = step
        gnorm = float(np.max(np.abs(grad)))
        if gnorm <= _GRAD_TOL:
            return lam, _MAX_ITER, gnorm
        raise NotConverged(
            f"gradient norm {gnorm:.3e} after {_MAX_ITER} iterations",
            lam=lam, grad_norm=gnorm, iterations=_MAX_ITER,
        )

    def solve(self) -> tuple[np.ndarray, int, float]:
        """Newton's method with backtracking from lam = (1, 0, ..., 0).

        The Newton direction can leave the positive-polynomial cone through
        the leading coefficient, where no step length is admissible; steps
        then fall back to the gradient and, at the bound itself, to the
        direction projected onto the face. If the run from the canonical
        start still stalls, one retry starts from the inverse-moment-matrix
        polynomial, which sits inside the cone near well-behaved optima.
        """
        start = np.zeros(2 * self.n + 1)
        start[0] = 1.0
        try:
            return self._descend(start)
        except NotConverged:
            return self._descend(self._christoffel_start())


def dual_objective(lam, problem: RealizationProblem):
    """Module-level alias for RealizationProblem.dual_objective."""
    return problem.dual_objective(lam)


@dataclass(frozen=True)
class RealizedDensity:
    """A density recovered from prescribed moments.

    Continuous kind: nu(u) = r(y) / q(y) / scale with y = (u - shift)/scale,
    where (shift, scale) is the affine standardization the problem was solved
    under (identity when none was applied). Atomic kind: weighted points.
    """

    kind: str
    lam: np.ndarray | None = None
    prior: ScalarDistribution | None = None
    shift: float = 0.0
    scale: float = 1.0
    points: tuple[float, ...] | None = None
    probs: tuple[float, ...] | None = None
    quad_nodes: np.ndarray | None = field(default=None, repr=False)
    quad_weights: np.ndarray | None = field(default=None, repr=False)
    quad_pdf: np.ndarray | None = field(default=None, repr=False)
    table_u: np.ndarray | None = field(default=None, repr=False)
    table_pdf: np.ndarray | None = field(default=None, repr=False)
    table_cdf: np.ndarray | None = field(default=None, repr=False)
    iterations: int = 0
    grad_norm: float = 0.0
    counts: np.ndarray | None = field(default=None, repr=False)

    @property
    def is_atomic(self) -> bool:
        return self.kind == "atomic"

    def pdf(self, u):
        if self.is_atomic:
            raise NoDensity("atomic realization has no density")
        scalar = np.ndim(u) == 0
        y = np.atleast_1d((np.asarray(u, dtype=float) - self.shift) / self.scale)
        powers = y[None, :] ** np.arange(self.lam.size)[:, None]
        q = (self.counts * self.lam) @ powers
        out = self.prior.pdf(y) / q / self.scale
        return float(out[0]) if scalar else out

    def moment(self, ell: int) -> float:
        if self.is_atomic:
            return math.fsum(p * t ** ell for p, t in zip(self.probs, self.points))
        return math.fsum(self.quad_weights * self.quad_pdf * self.quad_nodes ** ell)

    def moments(self, order: int) -> np.ndarray:
        return np.array([self.moment(ell) for ell in range(1, order + 1)])

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.is_atomic:
            cum = np.cumsum(self.probs)
            idx = np.searchsorted(cum, rng.random(n) * cum[-1])
            return np.asarray(self.points)[idx]
        return np.interp(rng.random(n), self.table_cdf, self.table_u)

    def export_table(self):
        """(u, pdf) arrays for continuous, (points, probs) for atomic."""
        if self.is_atomic:
            return np.asarray(self.points), np.asarray(self.probs)
        return self.table_u, self.table_pdf


def _build_continuous(problem: RealizationProblem, lam: np.ndarray,
                      iterations: int, grad_norm: float,
                      shift: float, scale: float) -> RealizedDensity:
    q = problem.q_values(lam)
    nu_y = problem.r / q
    nodes_u = shift + scale * problem.nodes
    weights_u = scale * problem.weights
    pdf_u = nu_y / scale

    m1 = math.fsum(weights_u * pdf_u * nodes_u)
    m2 = math.fsum(weights_u * pdf_u * nodes_u ** 2)
    lo, hi = grid_span(m1, max(m2 - m1 * m1, 0.0))
    table_u = np.linspace(lo, hi, TABLE_POINTS)
    y = (table_u - shift) / scale
    powers = y[None, :] ** np.arange(lam.size)[:, None]
    table_pdf = np.asarray(problem.prior.pdf(y)) / ((problem.counts * lam) @ powers) / scale
    seg = 0.5 * np.diff(table_u) * (table_pdf[:-1] + table_pdf[1:])
    cdf = np.concatenate([[0.0], np.cumsum(seg)])
    cdf /= cdf[-1]

    return RealizedDensity(
        kind="continuous",
        lam=np.array(lam),
        prior=problem.prior,
        shift=shift,
        scale=scale,
        quad_nodes=nodes_u,
        quad_weights=weights_u,
        quad_pdf=pdf_u,
        table_u=table_u,
        table_pdf=table_pdf,
        table_cdf=cdf,
        iterations=iterations,
        grad_norm=grad_norm,
        counts=problem.counts,
    )


def realize(problem: RealizationProblem) -> RealizedDensity:
    """Realize the problem's moment vector as a density.

    Interior moment vectors (scaled Hankel min eigenvalue above tolerance)
    go through the Newton dual solve; boundary vectors fall back to the
    atomic construction.
    """
    me = min_eig(scaled_hankel(problem.sigma))
    if me <= TAU_PSD:
        points, probs = atomic_from_singular(problem.sigma)
        return RealizedDensity(kind="atomic", points=points, probs=probs)
    lam, iterations, gnorm = problem.solve()
    return _build_continuous(problem, lam, iterations, gnorm, shift=0.0, scale=1.0)


def atomic_from_singular(sigma: MomentVector,
                         tol: float = TAU_PSD) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Recover the atomic measure on the moment-cone boundary.

    A kernel (null) vector of the singular Hankel matrix defines a
    polynomial vanishing on the support; its real roots are the atoms and
    the weights solve the Vandermonde moment equations in least squares.
    Work happens on the unit-second-moment scaling for conditioning.
    """
    H = scaled_hankel(sigma)
    m2 = sigma.moment(2)
    s = 1.0 if m2 <= 0 else 1.0 / math.sqrt(m2)
    eigvals = np.linalg.eigvalsh(H)
    if eigvals[0] < -tol:
        raise HankelIndefinite(
            f"scaled Hankel min eigenvalue {eigvals[0]:.3e} is below -{tol}"
        )
    rank = int(np.sum(eigvals > max(tol, 1e-8 * eigvals[-1])))
    rank = min(max(rank, 1), H.shape[0] - 1)

    # monic kernel polynomial from the leading principal system; this is the
    # null vector (c_0..c_{rank-1}, 1, 0, ...) of the full Hankel matrix
    body = H[:rank, :rank]
    rhs = -H[:rank, rank]
    try:
        coeffs = np.linalg.solve(body, rhs)
    except np.linalg.LinAlgError:
        coeffs = np.linalg.lstsq(body, rhs, rcond=None)[0]
    roots = np.roots(np.concatenate([[1.0], coeffs[::-1]]))

    keep = np.abs(roots.imag) <= 1e-6 * (1.0 + np.abs(roots.real))
    dropped_complex = not bool(np.all(keep))
    real_roots = np.unique(roots[keep].real)
    if real_roots.size == 0:
        raise ComplexRoots("kernel polynomial has no real roots")

    points = np.sort(real_roots / s)
    # weights from the scaled Vandermonde moment equations (rows ell = 0..2n)
    sig_scaled = np.concatenate([[1.0], sigma.values]) * s ** np.arange(sigma.order + 1)
    vander = (s * points)[None, :] ** np.arange(sigma.order + 1)[:, None]
    probs, *_ = np.linalg.lstsq(vander, sig_scaled, rcond=None)

    if np.min(probs) < -1e-10:
        raise NegativeWeight(f"atomic weight {np.min(probs):.3e} below tolerance")
    probs = np.clip(probs, 0.0, None)

    recon = np.array([
        math.fsum(p * t ** ell for p, t in zip(probs, points))
        for ell in range(1, sigma.order + 1)
    ])
    err = np.max(np.abs(recon - sigma.values) / np.maximum(1.0, np.abs(sigma.values)))
    if err > 1e-8:
        if dropped_complex:
            raise ComplexRoots(
                f"reconstruction error {err:.3e} after dropping complex roots"
            )
        raise HankelIndefinite(
            f"atomic reconstruction error {err:.3e}; moments are not on the boundary"
        )
    return tuple(float(t) for t in points), tuple(float(p) for p in probs)


def choose_prior(target_hint: ScalarDistribution | None, sigma: MomentVector,
                 heavy_tail: bool = False) -> ScalarDistribution:
    """Prior selection rule for the dual solve.

    Gaussian matched to the first two prescribed moments with the variance
    inflated by 1.5 (so the prior's tails dominate sub-Gaussian targets);
    Cauchy with a matched interquartile range when heavy tails are flagged.
    """
    s1 = sigma.moment(1)
    var = sigma.moment(2) - s1 * s1
    if var <= TAU_PSD:
        raise DegenerateVariance(
            "prescribed moments have zero variance; use the atomic path"
        )
    if heavy_tail or isinstance(target_hint, Cauchy):
        return Cauchy(s1, _CAUCHY_IQR_FACTOR * math.sqrt(var))
    return Gaussian(s1, 1.5 * var)


def standardize_moments(sigma: MomentVector, shift: float, scale: float) -> MomentVector:
    """Moments of y = (u - shift)/scale from the moments of u."""
    ext = np.concatenate([[1.0], sigma.values])
    out = np.empty(sigma.order)
    for ell in range(1, sigma.order + 1):
        total = math.fsum(
            math.comb(ell, i) * ext[i] * (-shift) ** (ell - i)
            for i in range(ell + 1)
        )
        out[ell - 1] = total / scale ** ell
    return MomentVector(out)


def realize_moments(sigma: MomentVector, heavy_tail: bool = False) -> RealizedDensity:
    """Realize a raw moment vector, standardizing internally.

    The dual is solved in the affinely standardized variable (zero mean,
    unit variance), which keeps the Newton system well conditioned at high
    orders; the returned density lives on the original axis.
    """
    me = min_eig(scaled_hankel(sigma))
    if me < -TAU_PSD:
        raise HankelIndefinite(
            f"sigma Hankel has scaled min eigenvalue {me:.3e}"
        )
    if me <= TAU_PSD:
        points, probs = atomic_from_singular(sigma)
        return RealizedDensity(kind="atomic", points=points, probs=probs)
    s1 = sigma.moment(1)
    var = sigma.moment(2) - s1 * s1
    if var <= TAU_PSD:
        raise DegenerateVariance("zero-variance moments reached the continuous path")
    scale = math.sqrt(var)
    sigma_y = standardize_moments(sigma, s1, scale)
    prior = choose_prior(None, sigma_y, heavy_tail=heavy_tail)
    problem = RealizationProblem(sigma_y, prior)
    lam, iterations, gnorm = problem.solve()
    return _build_continuous(problem, lam, iterations, gnorm, shift=s1, scale=scale)
