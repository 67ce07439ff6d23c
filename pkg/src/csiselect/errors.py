"""Exception types shared across the package."""


class CsiSelectError(Exception):
    """Base class for every error this package raises on purpose."""


# --- configuration / input problems -----------------------------------------

class InvalidSpec(CsiSelectError):
    pass


class ZeroRow(CsiSelectError):
    def __init__(self, row: int):
        self.row = row
        super().__init__(f"row {row} has (near-)zero norm and cannot be normalized")


class NonPositiveSigma(CsiSelectError):
    pass


class TooFewPoints(CsiSelectError):
    pass


class AlreadySelected(CsiSelectError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"element {index} is already in the selected set")


class BudgetExceedsGroundSet(CsiSelectError):
    pass


class InstanceTooLarge(CsiSelectError):
    pass


class KTooLarge(CsiSelectError):
    pass


class ClassTooSmall(CsiSelectError):
    def __init__(self, label, count: int, needed: int):
        self.label = label
        super().__init__(f"class {label!r} has {count} points, fewer than the {needed} required")


class TooFewSlices(CsiSelectError):
    pass


class EmptySelection(CsiSelectError):
    pass


class NoTailPoints(CsiSelectError):
    pass


class EmptyDistribution(CsiSelectError):
    pass


# --- numerical problems ------------------------------------------------------

class NumericalError(CsiSelectError):
    """Base for failures that are numerical rather than configuration mistakes."""


class SingularSubmatrix(NumericalError):
    pass


class DegenerateDistances(NumericalError):
    pass


class AllSingletonsZero(NumericalError):
    pass
