"""Exception hierarchy.

Format/I-O problems derive from `FormatError`; the CLI maps those to exit
code 2 and every other `ChebfilterError` to exit code 1.
"""


class ChebfilterError(Exception):
    pass


class FormatError(ChebfilterError):
    pass


class ParseError(FormatError, ValueError):
    def __init__(self, path, lineno, message):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


class NodeIndexError(FormatError, IndexError):
    pass


class LabelError(FormatError, ValueError):
    pass


class DimensionError(ChebfilterError, ValueError):
    pass


class DomainError(ChebfilterError, ValueError):
    pass


class CapacityError(ChebfilterError, ValueError):
    pass


class NodeError(ChebfilterError, ValueError):
    """Interpolation nodes are not pairwise distinct."""


class ConditioningError(ChebfilterError, ValueError):
    pass


class EvaluationError(ChebfilterError, ValueError):
    """A function produced a non-finite value where a finite one is required."""


class DecayRateUndefined(ChebfilterError, ValueError):
    pass


class RecoveryError(ChebfilterError, ValueError):
    def __init__(self, index, projection, eps):
        self.index = index
        self.projection = projection
        super().__init__(
            f"signal is (near-)orthogonal to eigenvector {index}: "
            f"|<u_{index}, x>| = {abs(projection):.3e} <= {eps:.1e}"
        )


class StaleTapeError(ChebfilterError, RuntimeError):
    pass


class OptimizerError(ChebfilterError, RuntimeError):
    pass


class TrainingError(ChebfilterError, RuntimeError):
    pass
