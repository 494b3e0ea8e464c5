"""Exception types raised across the toolkit."""


class IceSegError(Exception):
    """Base class for data errors (bad inputs, inconsistent files)."""


class UnknownPixelValue(IceSegError, ValueError):
    def __init__(self, value, row, col):
        self.value, self.row, self.col = int(value), int(row), int(col)
        super().__init__(f"unknown mask value {self.value} at ({self.row}, {self.col})")


class DimensionMismatch(IceSegError, ValueError):
    pass


class EmptyInput(IceSegError, ValueError):
    pass


class PatchTooLarge(IceSegError, ValueError):
    pass


class DegenerateCrop(IceSegError, ValueError):
    pass


class LayoutMismatch(IceSegError, ValueError):
    pass


class EmptyConfusion(IceSegError, ValueError):
    pass


class ZeroBaseline(IceSegError, ZeroDivisionError):
    pass


class LengthMismatch(IceSegError, ValueError):
    pass


class TooFewFrames(IceSegError, ValueError):
    pass


class WidthMismatch(IceSegError, ValueError):
    pass


class EmptySelection(IceSegError, ValueError):
    pass


class NoTrainableData(IceSegError, ValueError):
    pass


class InsufficientPool(IceSegError, ValueError):
    pass
