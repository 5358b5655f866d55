"""Exception hierarchy for the momentsteer package."""

from __future__ import annotations


class MomentSteerError(Exception):
    """Base class for all errors raised by this package."""


# --- distributions ---------------------------------------------------------

class MomentUndefined(MomentSteerError):
    """Requested power moments do not exist or could not be computed."""


class OrderOverflow(MomentSteerError):
    """A requested moment order exceeds the configured cap."""


class NoDensity(MomentSteerError):
    """The distribution has no probability density function."""


class QuadratureNotConverged(MomentSteerError):
    """Adaptive quadrature failed to reach the requested tolerance."""


# --- moment algebra --------------------------------------------------------

class OddOrder(MomentSteerError):
    """A Hankel matrix was requested from an odd-length moment vector."""


class OrderMismatch(MomentSteerError):
    """Two moment vectors that must share an order do not."""


class EndpointNotPD(MomentSteerError):
    """A trajectory endpoint does not have a positive definite Hankel matrix."""


class LengthExceeded(MomentSteerError):
    """Truncation target exceeds the source vector length."""


# --- moment dynamics -------------------------------------------------------

class InsufficientOrder(MomentSteerError):
    """A moment vector is too short for the requested dynamics expansion."""


class NonFiniteIntermediate(MomentSteerError):
    """The moment recursion produced a non-finite value."""


# --- gain optimization -----------------------------------------------------

class InfeasibleAtOne(MomentSteerError):
    """Full state-feedback gain is infeasible: the target Hankel is not PSD."""


# --- density realization ---------------------------------------------------

class NonPositiveQ(MomentSteerError):
    """Dual parameters leave the positive-polynomial cone on the grid."""


class NotConverged(MomentSteerError):
    """Newton iteration stalled; carries the best iterate and diagnostics."""

    def __init__(self, message, lam=None, grad_norm=None, iterations=None):
        super().__init__(message)
        self.lam = lam
        self.grad_norm = grad_norm
        self.iterations = iterations


class HankelIndefinite(MomentSteerError):
    """Prescribed moments have an indefinite Hankel matrix."""


class ComplexRoots(MomentSteerError):
    """Support recovery produced complex roots that cannot be reconciled."""


class NegativeWeight(MomentSteerError):
    """Atomic weight solve produced a significantly negative probability."""


class DegenerateVariance(MomentSteerError):
    """Prescribed moments have (numerically) zero variance."""


# --- engine ----------------------------------------------------------------

class IllConditionedFit(MomentSteerError):
    """Polynomial surrogate fit residual exceeds the configured bound."""


# --- CLI -------------------------------------------------------------------

class ConfigInvalid(MomentSteerError):
    """Run configuration failed schema validation."""


class PlanFailed(MomentSteerError):
    """Planning failed; carries the failing step index when known."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class IoError(MomentSteerError):
    """Reading inputs or writing result files failed."""
