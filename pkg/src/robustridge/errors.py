"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class UnsupportedBranchError(DomainError):
    """Requested quantity is not defined on a limiting branch of the loss."""


class EmptyBatchError(ValueError):
    pass


class SingularSystemError(ValueError):
    pass


class InvalidSpecError(ValueError):
    pass


class ConfigError(ValueError):
    pass


class DivergenceError(RuntimeError):
    def __init__(self, iteration, value):
        super().__init__(f"training diverged at iteration {iteration} (objective={value})")
        self.iteration = iteration
        self.value = value


class TargetLostError(RuntimeError):
    """The target left the frame; ``state`` holds the last valid track state."""

    def __init__(self, state, message="target lost"):
        super().__init__(message)
        self.state = state
