"""Exception hierarchy shared by all modules."""


class SaddleLabError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(SaddleLabError, ValueError):
    """A model or job parameter is out of its admissible range."""


class DomainError(SaddleLabError, ValueError):
    """A state lies outside the model's domain."""


class DomainExitError(DomainError):
    """An integrated trajectory left the domain."""

    def __init__(self, time, state):
        super().__init__(f"trajectory left the domain at t={time!r}")
        self.time = time
        self.state = state


class NotASaddleError(SaddleLabError):
    pass


class ConvergenceError(SaddleLabError, ArithmeticError):
    pass


class ShootingError(SaddleLabError):
    pass


class HorizonError(SaddleLabError):
    pass


class InsufficientSpanError(SaddleLabError, ValueError):
    pass


class StateError(SaddleLabError, ValueError):
    """A functional was applied to a trajectory in the wrong state."""


class InputError(SaddleLabError, ValueError):
    pass
