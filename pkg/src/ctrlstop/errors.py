"""Exception types shared across the package."""


class CtrlStopError(Exception):
    pass


class InvalidModel(CtrlStopError):
    pass


class CrossingNotBracketed(CtrlStopError):
    pass


class AmbiguousRegion(CtrlStopError):
    pass


class AtBreakpoint(CtrlStopError):
    pass


class BracketFailure(CtrlStopError):
    pass


class RegimeGap(CtrlStopError):
    pass


class RegimeOverlap(CtrlStopError):
    pass


class ComplexRoot(CtrlStopError):
    pass


class OutOfSupportedRange(CtrlStopError):
    pass


class GridTooCoarse(CtrlStopError):
    pass


class UnverifiedGenerator(CtrlStopError):
    pass


class StepTooLarge(CtrlStopError):
    pass


class NoConvergence(CtrlStopError):
    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class NonMonotoneScheme(CtrlStopError):
    pass
