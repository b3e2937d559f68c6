"""Exception hierarchy shared by all modules."""


class LorentzGasError(Exception):
    """Base class for all errors raised by this package."""


class NoCollisionWithinHorizon(LorentzGasError):
    """The ray never met an obstacle within the configured cell horizon.

    Signals a (near-)rational corridor direction; callers should perturb
    or reject the direction.
    """


class RationalSlope(LorentzGasError):
    """The direction slope was detected to be rational (or numerically
    indistinguishable from rational)."""


class DegenerateDirection(LorentzGasError):
    """Direction is exactly axis-aligned or diagonal (slope 0 or +-1)."""


class BinMismatch(LorentzGasError):
    """Two histograms do not share the same binning / time stamp."""


class EmptyEnsemble(LorentzGasError):
    """An operation that needs at least one sample got zero."""
