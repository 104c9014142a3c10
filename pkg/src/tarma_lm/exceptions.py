"""Exception and warning classes."""


class TarmaError(Exception):
    """Base class for errors raised by this package."""


class InvalidSpecError(TarmaError, ValueError):
    """Model parameters violate their invariants."""


class UnsupportedSpecError(TarmaError, ValueError):
    pass


class TooShortError(TarmaError, ValueError):
    pass


class DegenerateInputError(TarmaError, ValueError):
    """Series without variation in its first differences."""


class UntestableSeriesError(TarmaError):
    """No admissible threshold remains in the search band."""


class MissingTableError(TarmaError, KeyError):
    def __init__(self, theta, n, pi):
        self.key = (theta, n, pi)
        super().__init__(f"no null table entry for theta={theta}, n={n}, pi={pi}")

    def __str__(self) -> str:
        return self.args[0]


class TableFormatError(TarmaError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NoAdmissibleThresholdError(TarmaError):
    pass


class NearNoninvertibleWarning(UserWarning):
    """MA estimate sits on the boundary of the invertibility region."""
