"""Exception types shared across the package.

Each maps to a CLI exit code (see cli.EXIT_CODES).
"""


class ConfigurationError(ValueError):
    """Invalid run configuration: bad resolution, inadmissible gamma, unknown keys."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class SeparationError(RuntimeError):
    """Initial configuration fails the separation gate; run refused."""


class DegenerateMapError(RuntimeError):
    """Jacobian determinant dropped below the positivity floor: mesh collapse."""


class NearContactError(RuntimeError):
    """Tidal denominator fell below the safety margin; stars numerically too close."""


class IdentitySuiteError(RuntimeError):
    """One or more residuals of the identity verification suite exceeded threshold."""
