"""Exception types shared across the package."""


class SpectralError(Exception):
    """Base class for all kamtori errors."""


class DimensionMismatch(SpectralError):
    """Operands live on tori of different dimension or order."""


class GridTooSmall(SpectralError):
    """Requested grid cannot hold the coefficient box without aliasing."""


class TailError(SpectralError):
    """Re-expansion after a composition left too much energy above the
    working Fourier order; the result would be silently aliased."""


class CertificateError(SpectralError):
    """A quantitative precondition (invertibility certificate, width
    constraint) is violated."""


class ResonanceError(SpectralError):
    """The frequency vector has an (near-)exact resonance in the working
    coefficient box, so a small-divisor solve is impossible."""


class ConvergenceError(SpectralError):
    """An iteration diverged or stalled.  Carries whatever diagnostic
    payload the caller attached (e.g. a Newton trace) in ``payload``."""

    def __init__(self, message, payload=None):
        super().__init__(message)
        self.payload = payload


class DivergenceError(SpectralError):
    """A series summation grew beyond the overflow guard."""


class TwistDegeneracyError(SpectralError):
    """The averaged Hessian is too ill-conditioned for the outer loop."""


class ConfigError(SpectralError):
    """Experiment configuration is malformed (unknown key, bad value)."""
