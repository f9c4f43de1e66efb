"""Exception hierarchy."""


class BivError(Exception):
    """Base class for all library errors."""


class NotPositiveDefinite(BivError, ArithmeticError):
    pass


class DimensionMismatch(BivError, ValueError):
    pass


class DegenerateCell(BivError, ValueError):
    """A joint-missingness cross-tabulation has an empty or negative cell."""


class RankDeficient(BivError, ArithmeticError):
    pass


class EmptyTrainingSet(BivError, ValueError):
    pass


class CoxFitFailure(BivError):
    """The Cox model could not be fitted; counted as a model failure."""


class SingularInformation(CoxFitFailure):
    pass


class NonConvergence(CoxFitFailure):
    pass


class MetricUndefined(BivError):
    pass


class NoCases(MetricUndefined):
    pass


class NoControls(MetricUndefined):
    pass


class ZeroWeight(MetricUndefined):
    pass


class DegenerateNoInformation(BivError, ZeroDivisionError):
    """Apparent performance equals the no-information value."""


class AnalysisModelFailure(BivError):
    """The apparent (original-data) analysis model could not be fitted or scored."""


class AllBootstrapsFailed(AnalysisModelFailure):
    pass


class ConfigError(BivError, ValueError):
    pass
