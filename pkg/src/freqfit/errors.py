"""Exception types shared across the package."""


class FreqfitError(Exception):
    """Base class for errors raised by this package."""


class DegenerateSignalError(FreqfitError, ValueError):
    """A signal has no usable frequency content (e.g. a constant image)."""


class TrainingDivergedError(FreqfitError, RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, step: int, config, loss: float):
        self.step = step
        self.config = config
        self.loss = loss
        super().__init__(
            f"non-finite loss {loss!r} at step {step} with config {config!r}"
        )
