"""Exception hierarchy shared by all dipolatt modules.

The CLI maps the two families onto exit codes: ``ValidationError`` (and its
subclasses) to 2 and ``NumericalError`` (and its subclasses) to 3.
"""


class DipolattError(Exception):
    """Base class for library errors."""


class ValidationError(DipolattError, ValueError):
    """Bad input: the caller asked for something that is not defined."""


class DomainError(ValidationError):
    """Quantum numbers or arguments outside their physical domain."""


class InputError(ValidationError):
    """Malformed composite input (duplicate basis states, bad config, ...)."""


class RegimeError(ValidationError):
    """Parameters fall outside the approximation regime a routine relies on."""


class ProtocolError(ValidationError):
    """A gate protocol cannot be run for the requested configuration."""


class EstimationError(ValidationError):
    """Statistical estimator is undefined for the given counts."""


class NumericalError(DipolattError, ArithmeticError):
    """A numerical procedure failed to reach its tolerance."""


class SingularityError(NumericalError):
    """Evaluation requested exactly at a singular point."""


class IntegrabilityError(NumericalError):
    """Integrand is not integrable for the requested moment."""
