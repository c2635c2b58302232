"""Adaptive maximum-power-transfer tracking for a two-coil resonant wireless power link."""

from .circuit import (
    TABLE1,
    CircuitParams,
    Coupling,
    PhasorSolution,
    SweepCurve,
    i2_magnitude,
    input_impedance,
    local_maxima,
    mutual_from_k,
    resonant_frequency,
    solve_phasor,
    splitting_surface,
    sweep,
    tank_reactance,
)
from .errors import IllConditionedPhase, InconsistentMeasurement, NearUnityCoupling, WPTError
from .estimation import PrimaryMeasurement, estimate_i2, m_from_zin_magnitude, m_from_zin_phase

__version__ = "0.1.0"
