"""Exception types shared across the library."""


class InvalidArgument(ValueError):
    """Inputs violate an operation's preconditions (shape or value)."""


class SizeLimitExceeded(RuntimeError):
    """A dense materialization would exceed the configured cap."""


class ConfigurationError(ValueError):
    """A solver or experiment configuration is internally inconsistent."""


class LocalDimensionError(RuntimeError):
    """A local problem is too small to hold the requested number of states.

    Usually a sign that the rank cap is too small for the block size.
    """


class SolverError(RuntimeError):
    """The local eigensolver failed beyond all fallbacks."""
