"""Exception and warning types raised across the routing engine."""


class DexRouteError(Exception):
    """Base class for all engine errors."""


class NonPositiveReserve(DexRouteError, ValueError):
    pass


class NegativeInput(DexRouteError, ValueError):
    pass


class InvalidFee(DexRouteError, ValueError):
    pass


class ParseError(DexRouteError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InvariantViolation(DexRouteError, ValueError):
    pass


class EmptyResult(DexRouteError):
    pass


class MissingPrice(DexRouteError, KeyError):
    pass


class DuplicatePool(InvariantViolation):
    pass


class UnknownToken(DexRouteError, KeyError):
    pass


class IsolatedSource(DexRouteError, ValueError):
    pass


class NoRoute(DexRouteError):
    pass


class BrokenPath(DexRouteError, ValueError):
    pass


class TooLarge(DexRouteError):
    pass


class RoundCapExceeded(RuntimeWarning):
    """Label-correcting sweeps hit ``max_rounds`` while labels were still improving."""
