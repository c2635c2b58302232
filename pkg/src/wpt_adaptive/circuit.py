"""Steady-state phasor analysis of two magnetically coupled series RLC tanks.

The primary tank (r1, l1, c1) is driven by a sinusoid of amplitude ``v_amp``;
the secondary tank (r2, l2, c2) is closed on itself.  All phasors use peak
amplitudes and the drive phasor is the real number ``v_amp``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

K_MAX = 0.99


@dataclass(frozen=True)
class CircuitParams:
    v_amp: float = 10.0
    r1: float = 5.0
    l1: float = 20e-6
    c1: float = 240.7e-9
    r2: float = 5.0
    r_load: float = 5.0
    l2: float = 20e-6
    c2: float = 240.7e-9

    def __post_init__(self):
        for name in ("v_amp", "r1", "l1", "c1", "r2", "l2", "c2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a finite positive number, got {value!r}")
        if not (0.0 <= self.r_load <= self.r2):
            raise ValueError(f"r_load must lie in [0, r2={self.r2}], got {self.r_load!r}")

    @property
    def r_parasite(self) -> float:
        return self.r2 - self.r_load


# element values of the reference design
TABLE1 = CircuitParams()


def mutual_from_k(k: float, l1: float, l2: float) -> float:
    """Mutual inductance M = k*sqrt(l1*l2)."""
    if not (0.0 <= k < 1.0):
        raise ValueError(f"coupling coefficient k must be in [0, 1), got {k!r}")
    return k * math.sqrt(l1 * l2)


@dataclass(frozen=True)
class Coupling:
    """Coupling coefficient and the mutual inductance it implies."""

    k: float
    m: float = field(repr=False)

    @classmethod
    def from_k(cls, k: float, l1: float, l2: float, k_max: float = K_MAX) -> "Coupling":
        if not (0.0 < k <= k_max):
            raise ValueError(f"k must be in (0, {k_max}], got {k!r}")
        return cls(k=k, m=mutual_from_k(k, l1, l2))

    @classmethod
    def from_m(cls, m: float, l1: float, l2: float, k_max: float = K_MAX) -> "Coupling":
        return cls.from_k(m / math.sqrt(l1 * l2), l1, l2, k_max)


@dataclass(frozen=True)
class PhasorSolution:
    i1: complex
    i2: complex
    z_in: complex
    omega: float


@dataclass(frozen=True)
class SweepCurve:
    freqs: np.ndarray
    i1_mag: np.ndarray
    i2_mag: np.ndarray
    zin_mag: np.ndarray
    zin_phase: np.ndarray

    def __len__(self):
        return len(self.freqs)


def _check_omega(omega):
    if not omega > 0:
        raise ValueError(f"angular frequency must be positive, got {omega!r}")


def tank_reactance(l: float, c: float, omega: float) -> float:
    """Series reactance omega*l - 1/(omega*c) of one tank."""
    _check_omega(omega)
    return omega * l - 1.0 / (omega * c)


def resonant_frequency(l: float, c: float) -> float:
    """Resonant frequency in hertz."""
    if not (l > 0 and c > 0):
        raise ValueError("l and c must be positive")
    return 1.0 / (2.0 * math.pi * math.sqrt(l * c))


def input_impedance(p: CircuitParams, m: float, omega: float) -> complex:
    """Primary tank impedance plus the impedance reflected by the secondary."""
    _check_omega(omega)
    z1 = complex(p.r1, tank_reactance(p.l1, p.c1, omega))
    z2 = complex(p.r2, tank_reactance(p.l2, p.c2, omega))
    return z1 + (omega * m) ** 2 / z2


def solve_phasor(p: CircuitParams, m: float, omega: float) -> PhasorSolution:
    """Solve both loop equations for the primary and secondary current phasors."""
    _check_omega(omega)
    z1 = complex(p.r1, tank_reactance(p.l1, p.c1, omega))
    z2 = complex(p.r2, tank_reactance(p.l2, p.c2, omega))
    zm = 1j * omega * m
    # [z1, -zm; -zm, z2] [i1; i2] = [V; 0]
    det = z1 * z2 - zm * zm
    i1 = p.v_amp * z2 / det
    i2 = p.v_amp * zm / det
    return PhasorSolution(i1=i1, i2=i2, z_in=input_impedance(p, m, omega), omega=omega)


def i2_magnitude(p: CircuitParams, m: float, omega: float) -> float:
    """Closed-form secondary current amplitude written in real arithmetic."""
    _check_omega(omega)
    x1 = tank_reactance(p.l1, p.c1, omega)
    x2 = tank_reactance(p.l2, p.c2, omega)
    wm2 = (omega * m) ** 2
    z2sq = p.r2 ** 2 + x2 ** 2
    re = p.r1 + wm2 * p.r2 / z2sq
    im = x1 - wm2 * x2 / z2sq
    return abs(omega * m) * p.v_amp / (math.sqrt(z2sq) * math.sqrt(re * re + im * im))


def _check_grid(f_grid):
    f = np.asarray(f_grid, dtype=float)
    if f.ndim != 1 or f.size == 0:
        raise ValueError("frequency grid must be a non-empty 1-D array")
    if not np.all(f > 0):
        raise ValueError("frequency grid must be positive")
    if np.any(np.diff(f) <= 0):
        raise ValueError("frequency grid must be strictly increasing")
    return f


def sweep(p: CircuitParams, m: float, f_grid) -> SweepCurve:
    """Evaluate the phasor solution at every frequency of ``f_grid`` (hertz)."""
    f = _check_grid(f_grid)
    w = 2.0 * np.pi * f
    x1 = w * p.l1 - 1.0 / (w * p.c1)
    x2 = w * p.l2 - 1.0 / (w * p.c2)
    z1 = p.r1 + 1j * x1
    z2 = p.r2 + 1j * x2
    zm = 1j * w * m
    det = z1 * z2 - zm * zm
    i1 = p.v_amp * z2 / det
    i2 = p.v_amp * zm / det
    z_in = z1 + (w * m) ** 2 / z2
    return SweepCurve(
        freqs=f,
        i1_mag=np.abs(i1),
        i2_mag=np.abs(i2),
        zin_mag=np.abs(z_in),
        zin_phase=np.angle(z_in),
    )


def local_maxima(values, freqs) -> list[tuple[float, float]]:
    """Strict interior maxima of ``values`` sampled at ``freqs``.

    A plateau of equal values that rises above both neighbours is reported
    once, at its middle sample.  Endpoints are never reported.
    """
    v = np.asarray(values, dtype=float)
    f = np.asarray(freqs, dtype=float)
    if v.shape != f.shape or v.ndim != 1:
        raise ValueError("values and freqs must be 1-D arrays of equal length")
    if v.size < 3:
        raise ValueError("need at least 3 samples to locate interior maxima")
    out = []
    n = v.size
    i = 1
    while i < n - 1:
        if v[i] > v[i - 1]:
            j = i
            while j + 1 < n and v[j + 1] == v[i]:
                j += 1
            if j + 1 < n and v[j + 1] < v[i]:
                mid = (i + j) // 2
                out.append((float(f[mid]), float(v[mid])))
            i = j + 1
        else:
            i += 1
    return out


@dataclass(frozen=True)
class SplittingSurface:
    k_grid: np.ndarray
    f_grid: np.ndarray
    i2: np.ndarray  # shape (len(k_grid), len(f_grid))
    maxima: list  # per k row: list of (f, |I2|)


def splitting_surface(p: CircuitParams, k_grid, f_grid) -> SplittingSurface:
    """|I2| over a (k, f) grid together with the frequency-direction maxima of each row."""
    ks = np.asarray(k_grid, dtype=float)
    f = _check_grid(f_grid)
    rows = []
    maxima = []
    for k in ks:
        curve = sweep(p, Coupling.from_k(float(k), p.l1, p.l2).m, f)
        rows.append(curve.i2_mag)
        maxima.append(local_maxima(curve.i2_mag, f))
    return SplittingSurface(k_grid=ks, f_grid=f, i2=np.vstack(rows), maxima=maxima)


def split_pole_ceiling(p: CircuitParams) -> float:
    """Largest secondary amplitude any (k, f) can produce: V / (2 sqrt(R1 R2))."""
    return p.v_amp / (2.0 * math.sqrt(p.r1 * p.r2))
