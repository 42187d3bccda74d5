"""Exception hierarchy shared by every module of the package."""


class FloquetDefectError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FloquetDefectError, ValueError):
    """Invalid crystal description or run configuration."""


class NonUnitPeriod(ConfigError):
    pass


class NonPositiveThickness(ConfigError):
    pass


class ZeroPermittivity(ConfigError):
    pass


class OutOfDomain(FloquetDefectError, ValueError):
    pass


class NumericalError(FloquetDefectError, ArithmeticError):
    """A computation left its domain of validity or failed to converge."""


class DegenerateLayer(NumericalError):
    pass


class NonRealTrace(NumericalError):
    pass


class DegenerateEigenvalues(NumericalError):
    pass


class NotInGap(NumericalError):
    pass


class GrazingIncidence(NumericalError):
    pass


class PoleOnAxis(NumericalError):
    pass


class SingularSystem(NumericalError):
    pass


class OutsideBand(NumericalError):
    pass


class BranchTrackingLost(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class EscapedNeighborhood(NumericalError):
    pass


class UndefinedAtNonMode(NumericalError):
    pass


class PoorFit(NumericalError):
    pass


class NoBandFound(NumericalError):
    pass
