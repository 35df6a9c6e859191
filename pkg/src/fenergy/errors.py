"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line can map failures to
the documented statuses: 2 for bad configuration, 3 for numerical-domain
problems and 1 for a check that ran but did not pass.
"""


class FEnergyError(Exception):
    exit_code = 3


class ConfigError(FEnergyError, ValueError):
    exit_code = 2


class DomainExceeded(FEnergyError, ValueError):
    """|omega|^2/2 reached the cap of the profile (e.g. |dsigma| >= 1 for BI-minus)."""


class PoleViolation(FEnergyError, ValueError):
    pass


class OutOfRegimeRange(FEnergyError, ValueError):
    pass


class Inadmissible(FEnergyError, ValueError):
    """The side condition of the monotonicity theorem fails for this exponent."""


InadmissibleExponent = Inadmissible


class ShapeMismatch(ConfigError):
    pass


class DegreeZero(ConfigError):
    pass


class DegreeOutOfRange(ConfigError):
    pass


class SupportViolation(ConfigError):
    pass


class SpanTooShort(ConfigError):
    pass


class GridTooSmall(ConfigError):
    pass


class NotSimplyConnectedSupport(ConfigError):
    pass


class SingularRadius(FEnergyError, ValueError):
    pass


class NotSpacelike(FEnergyError, ValueError):
    pass


class CheckFailed(FEnergyError):
    exit_code = 1


class ConservationPrecheckFailed(CheckFailed):
    pass


class NotASolution(CheckFailed):
    pass
