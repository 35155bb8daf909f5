"""Exception hierarchy shared by all rfc modules."""


class RfcError(Exception):
    """Base class for every error raised by the package."""


class DimensionError(RfcError, ValueError):
    pass


class ParameterError(RfcError, ValueError):
    pass


class NoRootsError(RfcError, ValueError):
    pass


class NoConvergenceError(RfcError, ArithmeticError):
    pass


class DegenerateSamplingError(RfcError, ArithmeticError):
    """Interpolation system stayed singular after re-scaling the sample points."""


class SynthesisError(RfcError, ValueError):
    pass


class StageError(RfcError, ValueError):
    """An augmented system was used at the wrong loop-closure stage."""


class ExtractionError(RfcError, ArithmeticError):
    pass


class LocusError(RfcError, ArithmeticError):
    def __init__(self, gain, cause):
        super().__init__(f"root finding failed at gain {gain!r}: {cause}")
        self.gain = gain


class InconsistencyError(RfcError, AssertionError):
    """Two independent computations of the same poles disagree."""


class DivergenceError(RfcError, ArithmeticError):
    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ConfigError(RfcError, ValueError):
    pass
