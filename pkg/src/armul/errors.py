"""Exception types shared across the package."""


class ArmulError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(ArmulError):
    pass


class EmptyTask(ArmulError):
    pass


class BadLabel(ArmulError):
    pass


class NonFinite(ArmulError):
    pass


class TooFewTasks(ArmulError):
    pass


class DegenerateS(ArmulError):
    pass


class EmptySubset(ArmulError):
    pass


class KTooLarge(ArmulError):
    pass


class BadFraction(ArmulError):
    pass


class TooFewSamples(ArmulError):
    pass


class EmptyCluster(ArmulError):
    pass


class SingularDesign(ArmulError):
    pass


class RankDeficientBasis(ArmulError):
    pass


class StructureMismatch(ArmulError):
    pass


class ConfigError(ArmulError):
    pass


class ParseError(ArmulError):
    pass
