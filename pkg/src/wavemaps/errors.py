"""Exception types raised by the solver and its diagnostics."""


class WaveMapError(Exception):
    pass


class InvalidArgument(WaveMapError, ValueError):
    pass


class NonFiniteValue(WaveMapError, ArithmeticError):
    pass


class UndefinedDrift(WaveMapError, ZeroDivisionError):
    """E(0) vanished, so the relative energy drift has no meaning."""


class IndeterminateConvergence(WaveMapError, ZeroDivisionError):
    """The two finer solutions coincide and Q cannot be formed."""


class FitFailure(WaveMapError, RuntimeError):
    pass
