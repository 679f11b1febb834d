"""Exception types shared across the package."""


class VicinalError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(VicinalError):
    """Experiment configuration is malformed or violates an invariant."""


class NumericalError(VicinalError):
    """Base class for runtime numerical failures."""

    def __init__(self, message, t=None):
        if t is not None:
            message = f"{message} (at t={t:.6g})"
        super().__init__(message)
        self.t = t


class CollisionDetected(NumericalError):
    """A terrace width fell below the collision floor."""


class StepSizeUnderflow(NumericalError):
    """The step-size controller requested a step below dt_min."""


class NonFinite(NumericalError):
    """NaN or Inf appeared in the evolving state."""


class SingularSystem(NumericalError):
    """The implicit linear solve failed or left a large residual."""
