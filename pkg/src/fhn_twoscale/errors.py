"""Exception types shared across the solver and verification layers."""


class FhnTwoscaleError(Exception):
    """Base class for all package errors."""


class GridMismatch(FhnTwoscaleError):
    """Fields combined across incompatible grids."""


class UnsupportedOperator(FhnTwoscaleError):
    """Cell operator outside the families with a known eigenbasis."""


class BlowUp(FhnTwoscaleError):
    """A solution left the trust region (sup norm above the ceiling, or NaN)."""


class NotSettled(FhnTwoscaleError):
    """Co-moving profile still drifting faster than the settle tolerance."""


class NoPulse(FhnTwoscaleError):
    """No localized excitation found (amplitude below the pulse floor)."""


class SpeedZero(FhnTwoscaleError):
    """Wave speed invalid for the causal filter (negative or non-finite)."""


class TailTooShort(FhnTwoscaleError):
    """Too few samples in the fit band to estimate a decay rate."""


class DegenerateFit(FhnTwoscaleError):
    """Error series unusable for a rate fit (non-monotone beyond tolerance)."""


class NotDecaying(FhnTwoscaleError):
    """Perturbation distance did not decrease over the experiment."""


class ParseError(FhnTwoscaleError):
    """Config file is syntactically malformed (carries a line number)."""


class ValidationError(FhnTwoscaleError):
    """Config value fails validation (names the offending field)."""
