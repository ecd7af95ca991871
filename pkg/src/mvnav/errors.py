"""Exception types shared across the package."""


class MvnavError(Exception):
    """Base class for all package errors."""


class MissingFile(MvnavError):
    pass


class DimensionMismatch(MvnavError):
    pass


class BadCalibration(MvnavError):
    pass


class DegenerateSpec(MvnavError):
    pass


class BadDimensions(MvnavError):
    pass


class CorruptStream(MvnavError):
    pass


class InvalidState(MvnavError):
    pass


class InfeasibleBudget(MvnavError):
    pass


class InsufficientOverlap(MvnavError):
    pass


class OutOfCone(MvnavError):
    pass


class MissingFrame(MvnavError):
    pass


class StorageFull(MvnavError):
    pass
