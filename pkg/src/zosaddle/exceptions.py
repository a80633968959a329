"""Exception types raised across the package."""


class DomainError(ValueError):
    """A point lies outside the domain of a divergence or prox-operator."""

    def __init__(self, message: str, iteration: int | None = None):
        if iteration is not None:
            message = f"iteration {iteration}: {message}"
        super().__init__(message)
        self.iteration = iteration


class ConfigError(ValueError):
    """Invalid or inconsistent solver / estimator configuration."""


class CapabilityError(RuntimeError):
    """The problem does not expose something the caller needs (analytic F, y-gradient, ...)."""


class EvaluationError(RuntimeError):
    """The function oracle produced a non-finite value or violated its noise bound."""
