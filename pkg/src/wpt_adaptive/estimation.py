"""Mutual inductance and secondary current recovered from primary-side quantities.

Two inversions of the input impedance are provided.  The magnitude route
solves a quadratic in M^2 and needs only |V| and |I1|; the phase route needs
the angle of Z_IN.  The closed loop uses the magnitude route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .circuit import CircuitParams, i2_magnitude, tank_reactance
from .errors import IllConditionedPhase, InconsistentMeasurement

EPS = 1e-9


@dataclass(frozen=True)
class PrimaryMeasurement:
    v_amp: float
    i1_amp: float
    omega: float
    zin_phase: Optional[float] = None

    def __post_init__(self):
        if not self.v_amp > 0:
            raise ValueError(f"v_amp must be positive, got {self.v_amp!r}")
        if not self.i1_amp > 0:
            raise ValueError(f"i1_amp must be positive, got {self.i1_amp!r}")
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega!r}")
        if self.zin_phase is not None and not abs(self.zin_phase) < math.pi / 2:
            raise ValueError(f"zin_phase must lie in (-pi/2, pi/2), got {self.zin_phase!r}")

    @property
    def zin_mag(self) -> float:
        return self.v_amp / self.i1_amp


@dataclass(frozen=True)
class QuadraticTerms:
    alpha: float
    beta: float
    gamma: float


@dataclass(frozen=True)
class EstimationResult:
    m_est: float
    i2_est: float
    method: str  # "magnitude" or "phase"
    quadratic_terms: Optional[QuadraticTerms]
    zin_mag: float


def quadratic_terms(zin_mag: float, p: CircuitParams, omega: float) -> QuadraticTerms:
    """Coefficients of alpha*t^2 + 2*beta*t + gamma = 0 with t = M^2."""
    x1 = tank_reactance(p.l1, p.c1, omega)
    x2 = tank_reactance(p.l2, p.c2, omega)
    z2sq = p.r2 ** 2 + x2 ** 2
    a = omega ** 2 * p.r2 / z2sq
    b = omega ** 2 * x2 / z2sq
    return QuadraticTerms(
        alpha=a * a + b * b,
        beta=p.r1 * a - x1 * b,
        gamma=p.r1 ** 2 + x1 ** 2 - zin_mag ** 2,
    )


def m_from_zin_magnitude(zin_mag: float, p: CircuitParams, omega: float) -> float:
    """Invert |Z_IN| for M, taking the non-negative root of the quadratic in M^2."""
    if not omega > 0:
        raise ValueError(f"angular frequency must be positive, got {omega!r}")
    q = quadratic_terms(zin_mag, p, omega)
    base = q.gamma + zin_mag ** 2  # |Z_IN|^2 with M = 0
    if q.gamma > EPS * base:
        raise InconsistentMeasurement(
            f"|Z_IN| = {zin_mag:.6g} ohm is below the uncoupled value {math.sqrt(base):.6g} ohm",
            zin_mag=zin_mag,
        )
    if q.gamma >= 0.0:
        return 0.0
    disc = q.beta * q.beta - q.alpha * q.gamma
    if disc < -EPS * (q.beta * q.beta + abs(q.alpha * q.gamma)):
        raise InconsistentMeasurement(
            f"negative discriminant for |Z_IN| = {zin_mag:.6g} ohm", zin_mag=zin_mag
        )
    root = math.sqrt(max(disc, 0.0))
    # (-beta + root)/alpha, rewritten to avoid cancellation when beta > 0
    if q.beta > 0:
        t = -q.gamma / (q.beta + root)
    else:
        t = (root - q.beta) / q.alpha
    return math.sqrt(max(t, 0.0))


def m_from_zin_phase(zin_phase: float, p: CircuitParams, omega: float) -> float:
    """Invert the angle of Z_IN for M.

    tan(phase) = (X1|Z2|^2 - w^2 M^2 X2) / (R1|Z2|^2 + w^2 M^2 R2), which is
    linear in M^2.
    """
    if not omega > 0:
        raise ValueError(f"angular frequency must be positive, got {omega!r}")
    if not abs(zin_phase) < math.pi / 2:
        raise ValueError(f"zin_phase must lie in (-pi/2, pi/2), got {zin_phase!r}")
    x1 = tank_reactance(p.l1, p.c1, omega)
    x2 = tank_reactance(p.l2, p.c2, omega)
    tan_phi = math.tan(zin_phase)
    z2sq = p.r2 ** 2 + x2 ** 2
    num = z2sq * (x1 - tan_phi * p.r1)
    den = omega ** 2 * (tan_phi * p.r2 + x2)
    if abs(den) <= EPS * omega ** 2 * (abs(tan_phi) * p.r2 + abs(x2)):
        raise IllConditionedPhase(
            f"phase inversion is singular at omega = {omega:.6g} rad/s (tan*R2 + X2 ~ 0)"
        )
    num_scale = z2sq * (abs(x1) + abs(tan_phi) * p.r1)
    if abs(num) <= EPS * num_scale:
        return 0.0
    m_sq = num / den
    if m_sq < 0:
        raise InconsistentMeasurement(
            f"phase {zin_phase:.6g} rad implies a negative M^2 at omega = {omega:.6g} rad/s"
        )
    return math.sqrt(m_sq)


def estimate_i2(meas: PrimaryMeasurement, p: CircuitParams, method: str = "magnitude") -> EstimationResult:
    """Estimate M and |I2| from one primary-side measurement."""
    zin_mag = meas.zin_mag
    if method == "magnitude":
        try:
            m = m_from_zin_magnitude(zin_mag, p, meas.omega)
        except InconsistentMeasurement as exc:
            raise InconsistentMeasurement(
                f"{exc} (measured |Z_IN| = {zin_mag:.6g} ohm)", zin_mag=zin_mag
            ) from exc
        terms = quadratic_terms(zin_mag, p, meas.omega)
    elif method == "phase":
        if meas.zin_phase is None:
            raise ValueError("phase method needs a zin_phase measurement")
        m = m_from_zin_phase(meas.zin_phase, p, meas.omega)
        terms = None
    else:
        raise ValueError(f"unknown estimation method {method!r}")
    # |I2| is linear in the drive amplitude; use the measured one
    i2 = i2_magnitude(p, m, meas.omega) * meas.v_amp / p.v_amp if m > 0 else 0.0
    return EstimationResult(m_est=m, i2_est=i2, method=method, quadratic_terms=terms, zin_mag=zin_mag)
