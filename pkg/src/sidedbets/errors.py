"""Exception types raised across the package."""


class MartingaleError(Exception):
    """Base class for every domain error raised here."""


class MissingEntry(MartingaleError):
    pass


class DepthExceeded(MartingaleError):
    pass


class DepthMismatch(MartingaleError):
    pass


class NotPrefixFree(MartingaleError):
    def __init__(self, a, b):
        super().__init__(f"{a!r} is a prefix of {b!r}")
        self.pair = (a, b)


class ZeroInitialCapital(MartingaleError):
    pass


class NotFSided(MartingaleError):
    pass


class InvalidCheckpoint(MartingaleError):
    pass


class QOutOfRange(MartingaleError):
    pass


class EpsOutOfRange(MartingaleError):
    pass


class EnumerationTooLarge(MartingaleError):
    pass


class TestExhausted(MartingaleError):
    __test__ = False  # keep pytest from collecting it


class PreconditionViolated(MartingaleError):
    def __init__(self, clause, detail=""):
        super().__init__(f"{clause}: {detail}" if detail else clause)
        self.clause = clause


class NotAnExtension(MartingaleError):
    pass


class BudgetExceeded(MartingaleError):
    pass


class UnknownStrategy(MartingaleError):
    pass


__all__ = [
    "MartingaleError", "MissingEntry", "DepthExceeded", "DepthMismatch", "NotPrefixFree",
    "ZeroInitialCapital", "NotFSided", "InvalidCheckpoint", "QOutOfRange", "EpsOutOfRange",
    "EnumerationTooLarge", "TestExhausted", "PreconditionViolated", "NotAnExtension",
    "BudgetExceeded", "UnknownStrategy",
]
