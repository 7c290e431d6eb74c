"""Exception and warning classes shared across the package."""


class DimensionError(ValueError):
    """Shapes or factor dimensions are inconsistent."""


class ResourceLimitError(RuntimeError):
    """A configured size cap (matrix dimension, atom count, step budget) was hit."""


class ExcludedConfigurationError(RuntimeError):
    """A trajectory reached a configuration where the potential is singular."""

    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(indices)


class NotConvergedWarning(RuntimeWarning):
    pass
