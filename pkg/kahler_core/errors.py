"""Exception hierarchy shared by the library, the CLI and the HTTP layer.

ConfigError maps to exit code 2 / HTTP 400, NumericalError to exit code 3 /
HTTP 500.
"""


class KahlerError(Exception):
    exit_code = 1
    http_status = 500


class ConfigError(KahlerError):
    exit_code = 2
    http_status = 400


class NumericalError(KahlerError):
    exit_code = 3
    http_status = 500


class SchemeMismatch(ConfigError):
    pass


class ExponentMismatch(ConfigError):
    pass


class DegreeOverflow(ConfigError):
    pass


class NotPositiveDefinite(NumericalError):
    pass


class NotSelfAdjoint(NumericalError):
    pass


class NotInvariant(NumericalError):
    def __init__(self, message, deviation=None):
        super().__init__(message)
        self.deviation = deviation


class NotPositive(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


class InsufficientDecay(NumericalError):
    pass


class RankDeficient(NumericalError):
    pass


class PointError(NumericalError):
    """Failure tied to a specific surface or chart point"""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class OutsideDomain(PointError):
    pass


class NearBranchSingularity(PointError):
    pass


class MaxStepsExceeded(NumericalError):
    def __init__(self, message, params=None, trace=None):
        super().__init__(message)
        self.params = params
        self.trace = trace
