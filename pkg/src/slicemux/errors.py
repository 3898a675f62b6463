"""Exception hierarchy.

``exit_code`` is what the CLI returns when the exception escapes a command.
"""


class SlicemuxError(Exception):
    exit_code = 1


class ConfigError(SlicemuxError, ValueError):
    exit_code = 3


class ValidationError(SlicemuxError, ValueError):
    exit_code = 2


class CapExceeded(SlicemuxError):
    exit_code = 4


# demand_gen
class NonStochasticMatrix(ConfigError):
    pass


class NotIrreducible(ConfigError):
    pass


class Periodic(ConfigError):
    pass


# demand_stats / scheduler
class EmptyTrace(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


# provisioner
class InfeasibleAtUpperBound(SlicemuxError):
    pass


class GridTooLarge(CapExceeded):
    pass


# lp
class NumericalBreakdown(SlicemuxError):
    pass


# oracle
class StateSpaceTooLarge(CapExceeded):
    pass


class ModelTooLarge(CapExceeded):
    pass


# equivalence
class InputInfeasible(ValidationError):
    pass
