class ConfigError(ValueError):
    """Invalid or unparseable simulation configuration."""


class NumericalAbort(RuntimeError):
    """The time stepper produced a non-finite state or could not complete a step."""

    def __init__(self, step: int, t: float, reason: str = "non-finite state"):
        self.step = step
        self.t = t
        self.reason = reason
        super().__init__(f"{reason} at step {step} (t = {t:.17g})")
