"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A physical parameter lies outside its allowed domain."""


class DomainError(ValueError):
    """A function was evaluated outside the range where it is defined."""


class ConfigurationError(ValueError):
    """Inconsistent simulation setup (grid mismatch, stability guard, ...)."""


class DivergenceError(ArithmeticError):
    """Non-finite state encountered while integrating."""

    def __init__(self, step, realization=None):
        self.step = step
        self.realization = realization
        msg = f"non-finite state at step {step}"
        if realization is not None:
            msg += f" (realization {realization})"
        super().__init__(msg)


class ScenarioError(ValueError):
    """Scenario document could not be parsed or validated.

    ``violations`` lists every problem found, not only the first one.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
