"""Exception hierarchy with stable process exit codes.

Exit code contract: 0 success, 2 configuration/usage, 3 capacity,
4 numeric gate failure, 5 empty result.
"""


class GlassmixError(Exception):
    exit_code = 1


class ConfigError(GlassmixError):
    exit_code = 2


class InvalidParams(ConfigError):
    pass


class DimensionMismatch(ConfigError):
    pass


class DomainError(ConfigError):
    pass


class IndexOutOfRange(DomainError):
    pass


class NotAdjacent(DomainError):
    pass


class InvalidSet(DomainError):
    pass


class InvalidX(DomainError):
    pass


class NotAdmissible(DomainError):
    pass


class CapacityExceeded(GlassmixError):
    exit_code = 3


class NotReversible(GlassmixError):
    exit_code = 4


class NumericGateFailed(GlassmixError):
    exit_code = 4


class EnergyDriftError(GlassmixError):
    exit_code = 4


class DisorderSanityError(GlassmixError):
    exit_code = 4


class NoValidSet(GlassmixError):
    exit_code = 5
