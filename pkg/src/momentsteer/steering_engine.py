"""End-to-end steering: moment trajectory, per-step solves, swarm simulation.

Planning builds the straight-line moment trajectory between the initial and
target densities (on the extended moment vectors when the dynamics are
polynomial), then solves the per-step gain optimization and realizes each
control density. Simulation drives N agents with controls sampled from the
planned densities; it never re-solves anything.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import ScalarDistribution
from .errors import IllConditionedFit, MomentSteerError, PlanFailed
from .gain_optimizer import optimize_gain
from .kl_realization import RealizedDensity, realize_moments
from .moment_core import MomentVector, extended_schedule, smooth_trajectory, truncate
from .moment_dynamics import DynamicsSpec, propagate

_ROUND_TRIP_TOL = 1e-10


@dataclass(frozen=True)
class SteeringProblem:
    """A complete steering task description."""

    horizon: int
    half_order: int
    dynamics: DynamicsSpec
    initial: ScalarDistribution
    target: ScalarDistribution
    n_agents: int = 2000
    seed: int = 0
    heavy_tail_prior: bool = False

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.half_order < 1:
            raise ValueError("half_order must be >= 1")
        if self.n_agents < 1:
            raise ValueError("n_agents must be >= 1")
        # validates the order cap up front
        self.schedule()

    def schedule(self) -> list[int]:
        return extended_schedule(self.half_order, self.horizon, self.dynamics.degree)


@dataclass(frozen=True)
class StepPlan:
    """Planned control of one step."""

    c: float
    u_tilde: MomentVector
    density: RealizedDensity
    cost: float
    min_eig: float
    feasible_lo: float
    boundary_atomic: bool


@dataclass(frozen=True)
class SteeringPlan:
    trajectory: tuple[MomentVector, ...]
    steps: tuple[StepPlan, ...]
    schedule: tuple[int, ...]


@dataclass(frozen=True)
class EnsembleState:
    """Snapshot of the agent population at one step.

    Agent i draws from the stream spawned as child i of SeedSequence(root_seed),
    so results do not depend on the order agents are visited.
    """

    states: np.ndarray = field(repr=False)
    step: int
    root_seed: int

    def __post_init__(self):
        arr = np.asarray(self.states, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise ValueError("agent states must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "states", arr)


def _attach_step(exc: MomentSteerError, k: int) -> MomentSteerError:
    exc.step = k
    exc.args = (f"step {k}: {exc.args[0]}" if exc.args else f"step {k}",) + exc.args[1:]
    return exc


def plan(problem: SteeringProblem) -> SteeringPlan:
    """Plan the full steering run.

    The trajectory interpolates the extended moment vectors of the initial
    and target densities and truncates each entry to the step's scheduled
    length. Steps are independent given the trajectory; MOMENT_STEER_THREADS
    (default 1) caps how many are solved concurrently.
    """
    schedule = problem.schedule()
    x_bar_0 = MomentVector(problem.initial.moments(schedule[0]))
    x_bar_K = MomentVector(problem.target.moments(schedule[0]))
    extended = smooth_trajectory(x_bar_0, x_bar_K, problem.horizon)
    trajectory = tuple(
        truncate(extended[k], schedule[k]) for k in range(problem.horizon + 1)
    )

    def solve_step(k: int) -> StepPlan:
        try:
            a = MomentVector(problem.dynamics.param_at(k).moments(schedule[k + 1]))
            gain = optimize_gain(trajectory[k], trajectory[k + 1], a, problem.dynamics)
            density = realize_moments(gain.u_tilde,
                                      heavy_tail=problem.heavy_tail_prior)
        except MomentSteerError as exc:
            raise _attach_step(exc, k)
        forward = propagate(trajectory[k], gain.u_tilde, a, gain.c_star,
                            problem.dynamics)
        err = np.max(
            np.abs(forward.values - trajectory[k + 1].values)
            / np.maximum(1.0, np.abs(trajectory[k + 1].values))
        )
        if err > _ROUND_TRIP_TOL:
            raise PlanFailed(f"round-trip error {err:.3e} at step {k}", step=k)
        return StepPlan(
            c=gain.c_star,
            u_tilde=gain.u_tilde,
            density=density,
            cost=gain.cost,
            min_eig=gain.min_eig,
            feasible_lo=gain.feasible_lo,
            boundary_atomic=gain.boundary_atomic,
        )

    threads = int(os.environ.get("MOMENT_STEER_THREADS", "1") or "1")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            steps = tuple(pool.map(solve_step, range(problem.horizon)))
    else:
        steps = tuple(solve_step(k) for k in range(problem.horizon))
    return SteeringPlan(trajectory=trajectory, steps=steps,
                        schedule=tuple(schedule))


def agent_generators(seed: int, n: int) -> list[np.random.Generator]:
    """One independent PCG64 stream per agent, split from a single seed."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.PCG64(ch)) for ch in children]


def simulate(problem: SteeringProblem, steering_plan: SteeringPlan) -> list[EnsembleState]:
    """Drive N agents through the planned controls.

    Per step each agent draws its own parameter realization a_i and control
    perturbation u~_i, applies u_i = -c a_i f(x_i) + u~_i, and advances
    x_i <- a_i f(x_i) + u_i. Fully deterministic given the problem seed.
    """
    n = problem.n_agents
    gens = agent_generators(problem.seed, n)
    f = problem.dynamics.f

    states = np.empty(n)
    for i, g in enumerate(gens):
        states[i] = problem.initial.sample(g, 1)[0]
    trace = [EnsembleState(states.copy(), 0, problem.seed)]

    for k, step in enumerate(steering_plan.steps):
        alpha = problem.dynamics.param_at(k)
        density = step.density
        c = step.c
        new_states = np.empty(n)
        for i, g in enumerate(gens):
            a_i = alpha.sample(g, 1)[0]
            u_tilde_i = density.sample(g, 1)[0]
            fx = f(states[i])
            u_i = -c * a_i * fx + u_tilde_i
            new_states[i] = a_i * fx + u_i
        states = new_states
        trace.append(EnsembleState(states.copy(), k + 1, problem.seed))
    return trace


def empirical_moments(ensemble: EnsembleState, order: int) -> MomentVector:
    """Raw sample moments of the agent population."""
    vals = np.array([
        math.fsum(ensemble.states ** ell) / ensemble.states.size
        for ell in range(1, order + 1)
    ])
    return MomentVector(vals)


def fit_polynomial(f, degree: int, fit_range: tuple[float, float],
                   param: ScalarDistribution | None = None,
                   residual_tol: float = 1e-2) -> DynamicsSpec:
    """Least-squares polynomial surrogate of a black-box state map.

    Fit at 4*degree + 1 Chebyshev nodes over fit_range; the max residual on
    a dense grid must stay below residual_tol.
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    lo, hi = fit_range
    if not lo < hi:
        raise ValueError("fit_range must be a nondegenerate interval")
    m = 4 * degree + 1
    theta = (2.0 * np.arange(m) + 1.0) * np.pi / (2.0 * m)
    nodes = 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos(theta)
    values = np.asarray([f(x) for x in nodes], dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError("f must be finite on the fit range")
    coeffs = np.polynomial.polynomial.polyfit(nodes, values, degree)

    dense = np.linspace(lo, hi, 2001)
    approx = np.polynomial.polynomial.polyval(dense, coeffs)
    exact = np.asarray([f(x) for x in dense], dtype=float)
    residual = float(np.max(np.abs(approx - exact)))
    if residual > residual_tol:
        raise IllConditionedFit(
            f"max residual {residual:.3e} exceeds {residual_tol:.3e}"
        )
    if coeffs[-1] == 0.0:
        coeffs = coeffs.copy()
        coeffs[-1] = np.finfo(float).tiny
    return DynamicsSpec.polynomial(tuple(coeffs), param)


def default_fit_range(initial: ScalarDistribution, max_second_moment: float,
                      coverage: float = 0.999) -> tuple[float, float]:
    """Span where state mass lives: the [0.1%, 99.9%] quantile window of the
    initial density, inflated by the trajectory's largest second moment."""
    moments = initial.moments(2)
    m1, m2 = float(moments[0]), float(moments[1])
    var = max(m2 - m1 * m1, 1e-12)
    lo = m1 - 10.0 * math.sqrt(var)
    hi = m1 + 10.0 * math.sqrt(var)
    grid = np.linspace(lo, hi, 4096)
    pdf = np.asarray(initial.pdf(grid))
    seg = 0.5 * np.diff(grid) * (pdf[:-1] + pdf[1:])
    cdf = np.concatenate([[0.0], np.cumsum(seg)])
    cdf /= cdf[-1]
    q_lo = float(np.interp(1.0 - coverage, cdf, grid))
    q_hi = float(np.interp(coverage, cdf, grid))
    inflate = math.sqrt(max(max_second_moment / max(m2, 1e-12), 1.0))
    mid = 0.5 * (q_lo + q_hi)
    half = 0.5 * (q_hi - q_lo) * inflate
    return mid - half, mid + half
