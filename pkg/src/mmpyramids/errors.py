"""Exception types shared across the package."""


class InvalidParameter(ValueError):
    """An argument is outside the domain of an operation."""


class ResourceLimit(RuntimeError):
    """An exact search would exceed its configured budget.

    ``knob`` names the keyword argument that controls the budget.
    """

    def __init__(self, message: str, knob: str | None = None):
        super().__init__(message)
        self.knob = knob


class Refusal(RuntimeError):
    """No sound answer is available for the given inputs."""
