"""Exception hierarchy shared by every lab module.

Each family carries the process exit status the CLI reports for it.
"""


class LabError(ValueError):
    exit_code = 1


class ConfigError(LabError):
    """Bad parameter or unknown subcommand."""

    exit_code = 2


class PrecisionError(LabError):
    """A surrogate or working precision cannot support the requested run."""

    exit_code = 3


class GuardError(LabError):
    """A domain or size guard was violated."""

    exit_code = 4


class HypothesisViolation(LabError):
    """An input fails a hypothesis the experiment requires."""

    exit_code = 5


# Finer-grained errors named after the contract failures they signal.

class InvalidDenominator(GuardError):
    pass


class InvalidMultiplier(GuardError):
    pass


class UnsupportedTag(ConfigError):
    pass


class TooLarge(GuardError):
    """Exact term would be astronomically large; use residues instead."""


class NotIncreasing(HypothesisViolation):
    pass


class ModulusGuard(GuardError):
    pass


class NotPrime(GuardError):
    pass


class LogDomainError(GuardError):
    pass


class ExpDomainError(GuardError):
    pass


class NotAUnit(GuardError):
    pass


class NoAnalyticModel(HypothesisViolation):
    pass


class EmptyCloud(GuardError):
    pass


class NonLacunarityNotWitnessed(HypothesisViolation):
    pass


class ShrinkX0(GuardError):
    pass


class InsufficientPrecision(PrecisionError):
    pass


class InvalidLevel(GuardError):
    pass
