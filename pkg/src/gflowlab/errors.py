"""Exception types shared across the package.

ConfigError maps to CLI exit code 2, TrainingError (and other runtime
failures) to exit code 3.
"""


class ConfigError(ValueError):
    """Invalid configuration: bad key, bad value, missing file, bad table."""


class TrainingError(RuntimeError):
    """Non-finite numbers or contract violations during training."""

    def __init__(self, message: str, step: int | None = None):
        if step is not None:
            message = f"{message} (at training step {step})"
        super().__init__(message)
        self.step = step
