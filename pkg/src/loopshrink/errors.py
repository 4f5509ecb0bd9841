"""Exception hierarchy shared by all modules."""


class LoopShrinkError(Exception):
    """Base class for every error raised by this package."""


class InvalidParameter(LoopShrinkError, ValueError):
    pass


class ParseError(LoopShrinkError):
    pass


class TopologyError(LoopShrinkError):
    pass


class DegeneracyError(LoopShrinkError):
    pass


class DimensionMismatch(LoopShrinkError, ValueError):
    pass


class EmptySeed(LoopShrinkError, ValueError):
    pass


class ZeroColumn(LoopShrinkError):
    """A vertex lost all of its field mass."""


class InvalidSplit(LoopShrinkError):
    pass


class InvalidMerge(LoopShrinkError):
    pass


class NumericalBlowup(LoopShrinkError):
    """Non-finite values appeared; usually the time step is too large."""


class MaxStepsExceeded(LoopShrinkError):
    pass


class DegenerateLevel(LoopShrinkError):
    pass


class Unreachable(LoopShrinkError):
    """A restricted diffusion never reached its target set."""


class StallError(LoopShrinkError):
    pass


class LoopError(LoopShrinkError):
    pass


class Ambiguous(LoopShrinkError):
    pass


class InconsistentLog(LoopShrinkError):
    pass
