"""Exception types shared across the solver modules."""


class Hotelling2DError(Exception):
    """Base class for all solver errors."""


class DuplicateSites(Hotelling2DError):
    """Two sites coincide within tolerance."""


class OutOfDomain(Hotelling2DError):
    """A point lies outside the unit square."""


class DegeneratePolygon(Hotelling2DError):
    """Polygon has fewer than three distinct vertices."""


class DimensionMismatch(Hotelling2DError):
    """Input lengths do not agree (firms vs prices vs demands)."""


class InfeasibleN(Hotelling2DError):
    """No n-firm configuration gives the n-th entrant non-negative profit."""


class DeterrenceImpossible(Hotelling2DError):
    """Every n-firm configuration admits profitable entry at this market size."""


class BracketingFailure(Hotelling2DError):
    """A threshold bisection bracket does not contain a sign change.

    Carries the profit signs observed at the interval ends.
    """

    def __init__(self, message: str, lo_value: float, hi_value: float):
        super().__init__(message)
        self.lo_value = lo_value
        self.hi_value = hi_value


class ConfigValidationError(Hotelling2DError):
    """Scenario configuration failed validation; message names the field."""
