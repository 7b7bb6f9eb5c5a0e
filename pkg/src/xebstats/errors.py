"""Exception hierarchy shared by all modules."""


class XebStatsError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(XebStatsError, ValueError):
    pass


class DomainError(XebStatsError, ValueError):
    pass


class EmptyInputError(XebStatsError, ValueError):
    pass


class DegenerateDenominatorError(XebStatsError, ArithmeticError):
    pass


class FlatLikelihoodError(XebStatsError):
    """The likelihood does not depend on the parameters; nothing is identifiable."""


class ConvergenceError(XebStatsError):
    pass


class NoAcceptanceError(XebStatsError):
    pass


class DegenerateBinningError(XebStatsError, ValueError):
    pass


class MissingInputError(XebStatsError):
    """A requested computation needs an input that was not supplied."""


class ExperimentError(XebStatsError):
    """A Monte Carlo replicate failed; the message names its seed stream."""
