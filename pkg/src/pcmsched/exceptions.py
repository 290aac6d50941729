"""Exception types raised across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class NumericInstabilityError(ArithmeticError):
    """The thermal integrator produced a non-finite value."""

    def __init__(self, substep, message=None):
        self.substep = substep
        super().__init__(message or f"non-finite temperature at substep {substep}")


class ScenarioValidationError(ValueError):
    """A scenario or building parameter set violates one or more invariants.

    ``fields`` lists the offending field names, in the order they were found.
    """

    def __init__(self, problems):
        # problems: list of (field, message)
        self.problems = list(problems)
        self.fields = [f for f, _ in self.problems]
        super().__init__("; ".join(f"{f}: {m}" for f, m in self.problems))


class ParseError(ValueError):
    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class GapError(ValueError):
    def __init__(self, path, missing):
        self.path = str(path)
        self.missing = list(missing)
        shown = ", ".join(self.missing[:5])
        more = "" if len(self.missing) <= 5 else f" (+{len(self.missing) - 5} more)"
        super().__init__(f"{path}: missing hours {shown}{more}")


class SchemaError(ValueError):
    """A persisted file has an unexpected header or layout."""


class ModelValidityError(ValueError):
    """An abstract model violates the spectral condition of the generalized Bellman check."""
