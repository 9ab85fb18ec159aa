"""Exception types shared across the package."""

from __future__ import annotations


class DisscatError(Exception):
    """Base class for all package errors."""


class DomainError(DisscatError, ValueError):
    """An argument lies outside its documented domain."""


class ConfigError(DisscatError, ValueError):
    """A run configuration is malformed or inconsistent."""


class NumericalFailure(DisscatError, RuntimeError):
    """A numerical routine could not reach its accuracy target.

    Carries enough state to diagnose the failure without re-running.
    """

    def __init__(self, message, **info):
        super().__init__(message)
        self.info = dict(info)

    def __str__(self):
        base = super().__str__()
        if self.info:
            detail = ", ".join(f"{k}={v!r}" for k, v in sorted(self.info.items()))
            return f"{base} ({detail})"
        return base


class ExceptionalPointError(NumericalFailure):
    """I + K*(G R0 G*) is numerically singular at this energy.

    This signals an embedded eigenvalue of the Hermitian part H0 + V, which
    the admissible model class excludes; the point cannot be deflated away.
    """

    def __init__(self, lam, sigma_min, **info):
        super().__init__(
            f"exceptional point at lam={lam!r}: I + K*(G R0 G*) is singular",
            lam=lam,
            sigma_min=sigma_min,
            **info,
        )
        self.lam = lam
        self.sigma_min = sigma_min


class SpectralSingularityError(NumericalFailure):
    """The boundary matrix A(lam) = I - i C R_V(lam - i0) C* is not invertible.

    Raised where the scattering matrix fails to be boundedly invertible; the
    point should be reported through the singularity scan instead of being
    inverted through.
    """

    def __init__(self, lam, sigma_min, threshold, **info):
        super().__init__(
            f"spectral singularity at lam={lam!r}: sigma_min(A)={sigma_min:.3e}"
            f" below threshold {threshold:.3e}",
            lam=lam,
            sigma_min=sigma_min,
            threshold=threshold,
            **info,
        )
        self.lam = lam
        self.sigma_min = sigma_min
        self.threshold = threshold


class CalibrationError(NumericalFailure):
    """A model calibration sweep found no usable root bracket."""
