"""Exception types raised by the simulator."""


class WPTError(Exception):
    """Base class for runtime failures of the simulation or estimation chain."""


class InconsistentMeasurement(WPTError, ValueError):
    """A primary-side measurement that no mutual inductance can produce."""

    def __init__(self, message, zin_mag=None):
        super().__init__(message)
        self.zin_mag = zin_mag


class IllConditionedPhase(WPTError, ValueError):
    """Phase-based inversion is singular at this operating point."""


class NearUnityCoupling(WPTError, ValueError):
    """The inductance matrix L1*L2 - M^2 is numerically singular."""
