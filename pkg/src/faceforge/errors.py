"""Exception types shared across the engine."""


class ContractError(ValueError):
    """An argument violates an operation's contract (shape, range, index)."""


class DegenerateGeometryError(RuntimeError):
    """Landmark configuration is rank-deficient; pose cannot be recovered."""


class IllConditionedError(RuntimeError):
    """Normal equations are singular; a positive regularizer is required."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, message, epoch=None, learning_rate=None):
        super().__init__(message)
        self.epoch = epoch
        self.learning_rate = learning_rate


class DatasetQualityError(RuntimeError):
    """Too many samples had to be regenerated during dataset creation."""
