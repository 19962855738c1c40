"""Exception types shared across the package."""


class SpaceError(Exception):
    """Base class for errors raised by spacecl."""


class InvalidArgumentError(SpaceError, ValueError):
    pass


class ShapeError(SpaceError, ValueError):
    pass


class NumericDomainError(SpaceError, ArithmeticError):
    pass


class InvalidActionError(SpaceError, ValueError):
    pass


class InvalidStateError(SpaceError, ValueError):
    pass


class ConfigError(SpaceError, ValueError):
    """Raised with every validation problem found in a config, not just the first."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
