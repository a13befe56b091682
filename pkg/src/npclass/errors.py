"""Exception types shared across the package."""


class NPError(Exception):
    """Base class for all errors raised by npclass."""


class InvalidArgumentError(NPError, ValueError):
    pass


class InsufficientSampleError(NPError, ValueError):
    """Too few left-out class 0 points to reach the requested violation bound.

    Carries the sample size that was supplied and the smallest one that works,
    so callers can tell the user exactly what to change.
    """

    def __init__(self, n: int, n_min: int, alpha: float, delta: float):
        self.n = n
        self.n_min = n_min
        self.alpha = alpha
        self.delta = delta
        super().__init__(
            f"left-out class 0 sample has n={n} points but alpha={alpha:g}, "
            f"delta={delta:g} require n >= n_min={n_min}; "
            "collect more class 0 data or increase alpha or delta"
        )


class TooFewPointsError(NPError, ValueError):
    pass


class UnfitError(NPError, ValueError):
    """A base learner could not be fitted (e.g. only one class present)."""


class DataFormatError(NPError, ValueError):
    """Malformed input file: parse failure, empty file or non-binary label."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class NonBinaryLabelError(DataFormatError):
    pass


class EmptyFileError(DataFormatError):
    pass
