"""Typed failures raised by the algorithms."""


class SuperfastError(Exception):
    """Base class for all typed failures."""


class DimensionError(SuperfastError, ValueError):
    pass


class RangeFailure(SuperfastError):
    """The sketch MH has numerical rank below the target rank."""


class PremultRankFailure(SuperfastError):
    """FU has numerical rank below the target rank."""


class GeneratorRankFailure(SuperfastError):
    """The CUR generator has numerical rank below the target rank."""


class SelectionFailure(SuperfastError):
    """Maxvol could not reach the dominance threshold."""


class SketchRankFailure(SuperfastError):
    """Sketched least-squares matrix FA lost rank."""


class EmptySample(SuperfastError):
    """Expected(l) sampling kept no index."""


class CapExceeded(SuperfastError, ValueError):
    pass
