"""Exception types shared across the package."""


class SolveError(RuntimeError):
    """A linear or nonlinear solve failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        if residual is not None:
            message = f"{message} (residual={residual:.3e})"
        super().__init__(message)
        self.residual = residual


class AnnihilatorError(ValueError):
    """A functional expected to vanish on solenoidal tangential fields does not."""


class MeanValueError(ValueError):
    """A field expected to have zero mean on a subdomain does not."""


class CflError(ValueError):
    """A time step violates the configured advective CFL guard."""


class ConfigError(ValueError):
    """An experiment configuration file is malformed."""
