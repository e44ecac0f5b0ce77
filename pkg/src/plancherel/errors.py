"""Exception hierarchy.

Split by failure kind so the CLI can map them onto exit codes: user/parameter
problems vs. numeric-infrastructure problems (quadrature, calibration).
"""


class PlancherelError(Exception):
    """Base class for all package errors."""


class ParameterError(PlancherelError, ValueError):
    """Invalid user-supplied parameter (multiplicity, rational ratio, ...)."""


class InvalidElementError(PlancherelError):
    """A matrix fails its model's defining relations beyond tolerance."""


class ConvergenceDomainError(PlancherelError):
    """Spectral parameter outside the convergence domain of an integral."""


class PoleError(PlancherelError):
    """Evaluation requested at (or too near) a pole."""

    def __init__(self, message, root=None):
        super().__init__(message)
        self.root = root


class SingularParameterError(PlancherelError):
    """Spectral parameter on a chamber wall where regularity is required."""


class QuadratureError(PlancherelError):
    """Self-consistency failure: two quadrature resolutions disagree."""


class CalibrationError(PlancherelError):
    """Calibration residuals disagree across test functions."""


class TruncationError(PlancherelError):
    """Support or spectral tail exceeds the configured window."""

    def __init__(self, message, suggested_cutoff=None):
        super().__init__(message)
        self.suggested_cutoff = suggested_cutoff


class StateError(PlancherelError):
    """Operation requires a calibration that has not been performed."""
