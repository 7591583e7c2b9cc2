"""Exception hierarchy shared by every module."""

from __future__ import annotations


class FracSPDEError(Exception):
    """Base class for all package errors."""


class MLDomainError(FracSPDEError, ValueError):
    """Mittag-Leffler parameters outside a > 0, b > 0."""


class SymbolNotIntegrable(FracSPDEError):
    """Fourier symbol decays too slowly for the requested inversion."""


class ResolutionInsufficient(FracSPDEError):
    """Lattice too coarse (or too noisy) for the requested quantity."""


class RateTooHigh(FracSPDEError):
    """Expected Poisson event count exceeds the configured cap."""


class InadmissibleParams(FracSPDEError):
    """Parameters fail the admissibility inequality for the regime."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class NoConvergence(FracSPDEError):
    """Picard iteration stalled without reaching the tolerance."""


class MissingInitialVelocity(FracSPDEError, ValueError):
    """u1 is required when beta lies in (1, 2)."""
