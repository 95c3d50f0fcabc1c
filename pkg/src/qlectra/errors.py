"""Exception hierarchy shared by all modules.

Two families matter to the CLI: ``ConfigError`` (bad inputs, exit code 2)
and ``NumericalError`` (a computation could not meet its contract, exit 3).
"""


class QlectraError(Exception):
    exit_code = 3


class ConfigError(QlectraError, ValueError):
    exit_code = 2


class NumericalError(QlectraError, ArithmeticError):
    exit_code = 3


# qstate
class NotNormalized(ConfigError): ...
class EmptyPartition(ConfigError): ...
class DimensionMismatch(ConfigError): ...
class InvalidDensity(NumericalError): ...


# qgate
class BadParams(ConfigError): ...
class TargetCollision(ConfigError): ...
class UnsupportedControlCount(ConfigError): ...


# qalgo
class NoSolutions(ConfigError): ...
class Exhausted(NumericalError): ...
class BadCutoff(ConfigError): ...
class NotCoprime(ConfigError): ...
class FactorNotFound(NumericalError): ...
class BadTimeStep(ConfigError): ...


# qadiabatic
class IndexOutOfRange(ConfigError): ...
class BadSchedule(ConfigError): ...
class DegenerateGap(NumericalError): ...


# qopen
class CutoffTooSmall(NumericalError): ...
class DimensionOverflow(ConfigError): ...
class NotFound(NumericalError): ...
class BadRatio(ConfigError): ...
class BadDensity(ConfigError): ...


# qproto
class AllZero(NumericalError): ...
class AllTruncated(NumericalError): ...
class NotEquilibrium(ConfigError): ...
class TooLarge(ConfigError): ...


# qcli
class UnknownExperiment(ConfigError): ...
class SchemaViolation(ConfigError): ...
class IOFailure(QlectraError):
    exit_code = 2
