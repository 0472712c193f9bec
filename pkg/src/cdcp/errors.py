"""Exception hierarchy.

Each error carries the CLI exit code it maps to, so the command-line
front end never has to enumerate the classes.
"""


class CDCPError(Exception):
    exit_code = 4


class ConfigInvalid(CDCPError, ValueError):
    exit_code = 2


class InvalidTilt(ConfigInvalid):
    pass


class DivergentTransform(CDCPError, ValueError):
    pass


class NoPositiveRoot(CDCPError):
    exit_code = 3


class HorizonExceedsRegime(CDCPError):
    exit_code = 3


class OutOfDomain(CDCPError, ValueError):
    pass


class OutOfHorizon(CDCPError, ValueError):
    pass


class GridTooCoarse(CDCPError):
    pass


class QuadratureNotConverged(CDCPError):
    pass


class UnboundedRate(CDCPError):
    pass


class DominationViolated(CDCPError, AssertionError):
    pass


class InsufficientPaths(ConfigInvalid):
    pass


class StatisticOverflow(CDCPError, OverflowError):
    pass
