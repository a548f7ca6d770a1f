"""Exception types shared across the package."""


class GroupTestingError(Exception):
    """Base class for all errors raised by this package."""


class EmptyPopulation(GroupTestingError):
    """A population must contain at least one item."""


class InvalidProbability(GroupTestingError):
    """A probability value fell outside [0, 1].

    Carries the 1-based item index and the offending value.
    """

    def __init__(self, index, value):
        super().__init__(f"item {index}: probability {value!r} is not in [0, 1]")
        self.index = index
        self.value = value


class InvalidParameter(GroupTestingError):
    """A numeric parameter is outside its admissible range."""


class DegenerateSet(GroupTestingError):
    """A search set has zero total probability mass."""


class DegeneratePartition(GroupTestingError):
    """No retained items: bounds over the retained population are undefined."""


class RatioViolated(GroupTestingError):
    """A search set breaks the bounded-ratio condition for the supplied gamma."""


class OracleInconsistent(GroupTestingError):
    """A test outcome contradicts a previously inferred certainty."""


class TooLarge(GroupTestingError):
    """Exhaustive enumeration was requested above the tractable size cap."""


class EmptyInput(GroupTestingError):
    """An aggregation was asked to summarize zero records."""


class IoError(GroupTestingError):
    """Wraps OS-level failures while writing output files."""
