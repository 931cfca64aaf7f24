"""Exception hierarchy for fairclust."""


class FairClustError(Exception):
    """Base class for all library errors."""


# metric construction / evaluation
class EmptyInputError(FairClustError, ValueError):
    pass


class RaggedVectorsError(FairClustError, ValueError):
    pass


class AsymmetricMatrixError(FairClustError, ValueError):
    pass


class NegativeDistanceError(FairClustError, ValueError):
    pass


class KOutOfRangeError(FairClustError, ValueError):
    pass


class EmptyCentersError(FairClustError, ValueError):
    pass


class EmptySetError(FairClustError, ValueError):
    pass


class LengthMismatchError(FairClustError, ValueError):
    pass


# LP
class InfinitePNormError(FairClustError, ValueError):
    """LP rounding is only defined for finite p."""


class NumericalFailureError(FairClustError, RuntimeError):
    pass


class BackendUnavailableError(FairClustError, RuntimeError):
    pass


class InfeasibleInstanceError(FairClustError):
    """The fairness-constrained LP has no feasible point."""


class InfeasibleReducedLpError(InfeasibleInstanceError):
    pass


# rounding
class MassMismatchError(FairClustError, ValueError):
    pass


class NonTerminationError(FairClustError, RuntimeError):
    pass


class SingletonSError(FairClustError, ValueError):
    pass


class NoFeasibleBetaError(InfeasibleInstanceError):
    pass


class PartitionBrokenError(FairClustError, ValueError):
    pass


# oracle / harness
class TooLargeError(FairClustError, ValueError):
    pass


class MissingColumnError(FairClustError, KeyError):
    pass


class AllRowsSkippedError(FairClustError, ValueError):
    pass


class SampleTooLargeError(FairClustError, ValueError):
    pass
