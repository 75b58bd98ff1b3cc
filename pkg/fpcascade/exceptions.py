from .config import EXIT_CODES, EXIT_UNEXPECTED


##############################################################################
# FpCascadeError
##############################################################################
class FpCascadeError(Exception):
    """Root of every error raised by fpcascade

    Each subclass maps to a stable process exit code (see config.EXIT_CODES).
    """

    def __init__(self, message: str, **details):
        if not message.startswith('[ERROR]'):
            message = f"[ERROR] {message}"
        super().__init__(message)
        self.message = message
        self.details = details

    @property
    def exit_code(self) -> int:
        return EXIT_CODES.get(type(self).__name__, EXIT_UNEXPECTED)

    def to_dict(self) -> dict:
        return {
            'error': type(self).__name__,
            'message': self.message,
            'exit_code': self.exit_code,
            **{k: v for k, v in self.details.items()},
        }


class ScenarioError(FpCascadeError, ValueError):
    """Invalid profile, initial condition, scenario or solver config."""


class DomainError(FpCascadeError, ValueError):
    """Argument outside its mathematical domain (scale range, gamma < 0)."""


class IntegrationRangeError(FpCascadeError, ValueError):
    """A quadrature grid could not capture its integrand."""


class MassAuditError(FpCascadeError, RuntimeError):
    """Finite-difference run fails to conserve mass with clean boundaries."""


class NegativeDensityError(FpCascadeError, RuntimeError):
    """Finite-difference density undershoots below the allowed floor."""


class DegenerateMeasureError(FpCascadeError, ValueError):
    """Density requested for a measure that is an atom."""


class UnsupportedOperationError(FpCascadeError, TypeError):
    """Operation not defined for this kind of initial condition."""


class ContractError(FpCascadeError, ValueError):
    """Caller broke a documented contract (e.g. non-monotone CDF)."""


class KsRejectedError(FpCascadeError, RuntimeError):
    """Monte-Carlo law rejected by the Kolmogorov-Smirnov test."""
