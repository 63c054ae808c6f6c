"""Exception hierarchy for the exact engine, the simulators and the CLI."""

from __future__ import annotations


class EnlargementLabError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(EnlargementLabError, ValueError):
    """A JSON document does not follow the expected layout."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class SpaceError(EnlargementLabError, ValueError):
    """Invalid filtered space; ``index`` names the offending position."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class NonRefiningPartition(SpaceError):
    pass


class WeightsNotNormalized(SpaceError):
    pass


class UnsortedGrid(SpaceError):
    pass


class InvalidRandomTime(EnlargementLabError, ValueError):
    pass


class NotStoppingTime(EnlargementLabError, ValueError):
    pass


class NotThin(EnlargementLabError, ValueError):
    pass


class GraphsNotDisjoint(EnlargementLabError, ValueError):
    def __init__(self, message: str, pair: tuple[int, int] | None = None):
        super().__init__(message)
        self.pair = pair


class NotCovering(EnlargementLabError, ValueError):
    def __init__(self, message: str, mass=None):
        super().__init__(message)
        self.mass = mass


class MismatchedTime(EnlargementLabError, ValueError):
    pass


class HasContinuousPart(EnlargementLabError, ValueError):
    pass


class NotMartingale(EnlargementLabError, ValueError):
    pass


class NotHonest(EnlargementLabError, ValueError):
    pass


class ThickHonestOnJumpingFiltration(EnlargementLabError, RuntimeError):
    """An honest time with a density part was found; the model is broken."""


class DegenerateDenominator(EnlargementLabError, ArithmeticError):
    pass


class InvalidParams(EnlargementLabError, ValueError):
    pass
