class StomlabError(Exception):
    """Base class for errors raised by stomlab."""


class InputError(StomlabError, ValueError):
    """An argument violates a documented precondition."""


class DisconnectedNetworkError(InputError):
    pass


class NumericalError(StomlabError, ArithmeticError):
    """A computed object failed its own invariant check (conditioning failure)."""


class UnsupportedOrderError(InputError):
    pass


class DivergentSeriesError(StomlabError):
    pass
