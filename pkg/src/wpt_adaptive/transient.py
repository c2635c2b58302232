"""Time-domain simulation of the coupled tanks.

State is (i1, i2, v_c1, v_c2).  The loop equations

    L1 i1' + M i2' = v - R1 i1 - v_c1
    M  i1' + L2 i2' =   - R2 i2 - v_c2
    v_c1' = i1 / C1,   v_c2' = i2 / C2

are integrated with fixed-step classical RK4 under an ideal sinusoidal drive.
Coupling follows a piecewise-constant schedule; currents and capacitor
voltages are continuous across a coupling step.  The drive frequency may be
retuned at controller ticks without a phase jump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numba import njit

from . import controller as ctl
from .circuit import K_MAX, CircuitParams, mutual_from_k
from .errors import InconsistentMeasurement, NearUnityCoupling
from .estimation import PrimaryMeasurement, estimate_i2

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class TransientState:
    i1: float = 0.0
    i2: float = 0.0
    v_c1: float = 0.0
    v_c2: float = 0.0
    t: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.i1, self.i2, self.v_c1, self.v_c2])


@njit(cache=True)
def _deriv(i1, i2, vc1, vc2, v, r1, l1, c1, r2, l2, c2, m):
    det = l1 * l2 - m * m
    a = v - r1 * i1 - vc1
    b = -r2 * i2 - vc2
    return (l2 * a - m * b) / det, (l1 * b - m * a) / det, i1 / c1, i2 / c2


def _check_inductance(p: CircuitParams, m: float):
    if p.l1 * p.l2 - m * m <= 1e-12 * p.l1 * p.l2:
        raise NearUnityCoupling(
            f"inductance matrix is singular for M = {m:.6g} H "
            f"(k = {m / math.sqrt(p.l1 * p.l2):.6g})"
        )


def derivatives(s: TransientState, v_drive: float, p: CircuitParams, m: float) -> np.ndarray:
    """Time derivative (i1', i2', v_c1', v_c2') at state ``s`` under drive ``v_drive``."""
    _check_inductance(p, m)
    return np.array(_deriv(s.i1, s.i2, s.v_c1, s.v_c2, v_drive, p.r1, p.l1, p.c1, p.r2, p.l2, p.c2, m))


def rk4_step(s: TransientState, h: float, drive: Callable[[float], float], p: CircuitParams, m: float) -> TransientState:
    """One classical RK4 step of size ``h``; ``drive`` maps time to source voltage."""
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h!r}")
    y = s.as_array()
    t = s.t
    k1 = derivatives(s, drive(t), p, m)
    y2 = y + 0.5 * h * k1
    k2 = derivatives(TransientState(*y2, t + 0.5 * h), drive(t + 0.5 * h), p, m)
    y3 = y + 0.5 * h * k2
    k3 = derivatives(TransientState(*y3, t + 0.5 * h), drive(t + 0.5 * h), p, m)
    y4 = y + h * k3
    k4 = derivatives(TransientState(*y4, t + h), drive(t + h), p, m)
    y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return TransientState(float(y[0]), float(y[1]), float(y[2]), float(y[3]), t + h)


@njit(cache=True)
def _integrate(y, n, hs, v_amp, omega, phase0, r1, l1, c1, r2, l2, c2, m,
               out_i1, out_i2, out_vc1, out_vc2, out_v, out_w, start):
    """Advance y = [i1, i2, vc1, vc2, w] by n RK4 steps of size hs.

    w accumulates the net power flow v*i1 - R1*i1^2 - R2*i2^2 with the same
    stages as the circuit state.  Samples are written to out_*[start+1 ...].
    """
    i1, i2, vc1, vc2, w = y[0], y[1], y[2], y[3], y[4]
    for j in range(n):
        tl = j * hs
        va = v_amp * math.sin(phase0 + omega * tl)
        vb = v_amp * math.sin(phase0 + omega * (tl + 0.5 * hs))
        vc = v_amp * math.sin(phase0 + omega * (tl + hs))

        a1, b1, c1_, d1 = _deriv(i1, i2, vc1, vc2, va, r1, l1, c1, r2, l2, c2, m)
        e1 = va * i1 - r1 * i1 * i1 - r2 * i2 * i2

        x1 = i1 + 0.5 * hs * a1
        x2 = i2 + 0.5 * hs * b1
        a2, b2, c2_, d2 = _deriv(x1, x2, vc1 + 0.5 * hs * c1_, vc2 + 0.5 * hs * d1, vb, r1, l1, c1, r2, l2, c2, m)
        e2 = vb * x1 - r1 * x1 * x1 - r2 * x2 * x2

        x1 = i1 + 0.5 * hs * a2
        x2 = i2 + 0.5 * hs * b2
        a3, b3, c3_, d3 = _deriv(x1, x2, vc1 + 0.5 * hs * c2_, vc2 + 0.5 * hs * d2, vb, r1, l1, c1, r2, l2, c2, m)
        e3 = vb * x1 - r1 * x1 * x1 - r2 * x2 * x2

        x1 = i1 + hs * a3
        x2 = i2 + hs * b3
        a4, b4, c4_, d4 = _deriv(x1, x2, vc1 + hs * c3_, vc2 + hs * d3, vc, r1, l1, c1, r2, l2, c2, m)
        e4 = vc * x1 - r1 * x1 * x1 - r2 * x2 * x2

        s6 = hs / 6.0
        i1 = i1 + s6 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        i2 = i2 + s6 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        vc1 = vc1 + s6 * (c1_ + 2.0 * c2_ + 2.0 * c3_ + c4_)
        vc2 = vc2 + s6 * (d1 + 2.0 * d2 + 2.0 * d3 + d4)
        w = w + s6 * (e1 + 2.0 * e2 + 2.0 * e3 + e4)

        k = start + 1 + j
        out_i1[k] = i1
        out_i2[k] = i2
        out_vc1[k] = vc1
        out_vc2[k] = vc2
        out_v[k] = vc
        out_w[k] = w
    y[0] = i1
    y[1] = i2
    y[2] = vc1
    y[3] = vc2
    y[4] = w


def stored_energy(i1, i2, v_c1, v_c2, p: CircuitParams, m):
    """Magnetic plus electric energy held by the two tanks."""
    return (
        0.5 * p.l1 * i1 ** 2
        + 0.5 * p.l2 * i2 ** 2
        + m * i1 * i2
        + 0.5 * p.c1 * v_c1 ** 2
        + 0.5 * p.c2 * v_c2 ** 2
    )


def amplitude_detector(window, times=None, period: Optional[float] = None) -> float:
    """Peak absolute value of ``window``.

    When ``times`` and ``period`` are given the window must span at least one
    carrier period, otherwise the peak may be missed.
    """
    w = np.asarray(window, dtype=float)
    if w.size == 0:
        raise ValueError("empty detector window")
    if period is not None:
        if times is None:
            raise ValueError("times are needed to check the window span")
        tt = np.asarray(times, dtype=float)
        span = tt[-1] - tt[0]
        if span < period * (1.0 - 1e-9):
            raise ValueError(f"detector window spans {span:.6g} s, shorter than one period {period:.6g} s")
    return float(np.max(np.abs(w)))


@dataclass(frozen=True)
class CouplingSchedule:
    """Piecewise-constant coupling: k holds from each t_start to the next."""

    segments: tuple  # ((t_start, k), ...)
    k_max: float = K_MAX

    def __post_init__(self):
        segs = tuple((float(t), float(k)) for t, k in self.segments)
        if not segs:
            raise ValueError("coupling schedule needs at least one segment")
        if segs[0][0] != 0.0:
            raise ValueError("first schedule segment must start at t = 0")
        for (t0, _), (t1, _) in zip(segs, segs[1:]):
            if not t1 > t0:
                raise ValueError("schedule start times must be strictly increasing")
        for _, k in segs:
            if not 0.0 <= k <= self.k_max:
                raise ValueError(f"k must be in (0, {self.k_max}], got {k!r}")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def constant(cls, k: float, k_max: float = K_MAX) -> "CouplingSchedule":
        return cls(((0.0, k),), k_max)

    @classmethod
    def ramp(cls, k_values: Sequence[float], ramp_time: float, k_max: float = K_MAX) -> "CouplingSchedule":
        """Step through ``k_values`` at equal intervals, reaching the last one at ``ramp_time``."""
        ks = list(k_values)
        if len(ks) == 1:
            return cls.constant(ks[0], k_max)
        dt = ramp_time / (len(ks) - 1)
        return cls(tuple((i * dt, k) for i, k in enumerate(ks)), k_max)

    def k_at(self, t: float) -> float:
        k = self.segments[0][1]
        for t0, kk in self.segments:
            if t0 <= t:
                k = kk
        return k

    @property
    def boundaries(self) -> list[float]:
        return [t for t, _ in self.segments[1:]]


@dataclass(frozen=True)
class Timing:
    dt_ctrl: float = 150e-6
    dt_detect: Optional[float] = None  # None: one carrier period at the present frequency
    h: float = 50e-9
    duration: float = 0.025

    def __post_init__(self):
        for name in ("dt_ctrl", "h", "duration"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.dt_detect is not None:
            if not self.dt_detect > 0:
                raise ValueError(f"dt_detect must be positive, got {self.dt_detect!r}")
            if self.dt_detect > self.dt_ctrl:
                raise ValueError("dt_detect must not exceed dt_ctrl")


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TickLog:
    """Detector, estimator and controller outputs, one entry per controller tick."""

    t: np.ndarray
    k: np.ndarray
    f: np.ndarray  # drive frequency during the detection window
    f_next: np.ndarray  # frequency applied after the tick
    v_det: np.ndarray
    i1_det: np.ndarray
    i2_det: np.ndarray  # measured secondary amplitude, for comparison only
    i2_est: np.ndarray  # nan when the measurement was inconsistent
    m_est: np.ndarray
    clamped: np.ndarray
    held: np.ndarray  # estimation failed, frequency held
    settled: np.ndarray  # no coupling step since the previous tick

    def __len__(self):
        return len(self.t)


@dataclass(frozen=True)
class RunRecord:
    t: np.ndarray
    i1: np.ndarray
    i2: np.ndarray
    v: np.ndarray
    f: np.ndarray
    k: np.ndarray
    v_c1: np.ndarray
    v_c2: np.ndarray
    work: np.ndarray  # integral of v*i1 - R1 i1^2 - R2 i2^2 plus work done at coupling steps
    ticks: TickLog
    params: CircuitParams = field(repr=False)

    def __len__(self):
        return len(self.t)

    @property
    def m(self) -> np.ndarray:
        return self.k * math.sqrt(self.params.l1 * self.params.l2)

    def final_amplitude(self, name: str = "i2", periods: float = 1.0) -> float:
        """Detector output over the last ``periods`` carrier periods of the run."""
        x = getattr(self, name)
        span = periods / self.f[-1]
        start = max(int(np.searchsorted(self.t, self.t[-1] - span, side="right")) - 1, 0)
        return amplitude_detector(x[start:], self.t[start:], span)


def run_scenario(
    p: CircuitParams,
    schedule: CouplingSchedule,
    controller: Optional[ctl.ControllerState] = None,
    timing: Timing = Timing(),
    f_drive: Optional[float] = None,
    initial: TransientState = TransientState(),
    drive_amp: Optional[float] = None,
) -> RunRecord:
    """Simulate the plant under a coupling schedule, optionally closing the tracking loop.

    Every ``timing.dt_ctrl`` the detector measures |V|, |I1| (and |I2| for the
    record) over the last ``dt_detect`` seconds, the estimator infers |I2|, and
    the controller, when present, retunes the drive for the next interval.
    ``drive_amp`` overrides ``p.v_amp`` for the source (0 gives a free decay).
    """
    if controller is None:
        if f_drive is None or not f_drive > 0:
            raise ValueError("a positive drive frequency is required without a controller")
        f = float(f_drive)
        f_low = f
    else:
        f = controller.f_curr
        f_low = controller.f_min
    if timing.dt_detect is not None and timing.dt_detect < (1.0 - 1e-9) / f_low:
        raise ValueError("dt_detect must cover one carrier period at the lowest frequency")
    if timing.dt_ctrl < (1.0 - 1e-9) / f_low:
        raise ValueError("dt_ctrl must cover one carrier period at the lowest frequency")

    v_amp = p.v_amp if drive_amp is None else float(drive_amp)
    if not v_amp >= 0:
        raise ValueError(f"drive amplitude must be non-negative, got {drive_amp!r}")
    duration = timing.duration
    h = timing.h
    tol = 1e-12

    # event list: (time, is_tick, new_k or None)
    events: dict[float, list] = {}

    def add(t, tick=False, k=None):
        for t0 in events:
            if abs(t0 - t) < tol:
                t = t0
                break
        e = events.setdefault(t, [False, None])
        if tick:
            e[0] = True
        if k is not None:
            e[1] = k

    n_ticks = int(math.floor(duration / timing.dt_ctrl + 1e-9))
    for i in range(1, n_ticks + 1):
        add(i * timing.dt_ctrl, tick=True)
    for t0, k in schedule.segments[1:]:
        if t0 < duration - tol:
            add(t0, k=k)
    add(duration)
    times = sorted(events)

    cap = int(duration / h) + 2 * len(times) + 8
    out_t = np.empty(cap)
    out_i1 = np.empty(cap)
    out_i2 = np.empty(cap)
    out_vc1 = np.empty(cap)
    out_vc2 = np.empty(cap)
    out_v = np.empty(cap)
    out_w = np.empty(cap)
    out_f = np.empty(cap)
    out_k = np.empty(cap)

    k_now = schedule.segments[0][1]
    m_now = mutual_from_k(k_now, p.l1, p.l2)
    _check_inductance(p, m_now)
    y = np.array([initial.i1, initial.i2, initial.v_c1, initial.v_c2, 0.0])
    t_now = initial.t
    phase = 0.0
    out_t[0] = t_now
    out_i1[0], out_i2[0], out_vc1[0], out_vc2[0] = y[0], y[1], y[2], y[3]
    out_v[0] = 0.0
    out_w[0] = 0.0
    out_f[0] = f
    out_k[0] = k_now
    n = 0

    log = {key: [] for key in TickLog.__dataclass_fields__}
    st = controller
    switched_since_tick = False

    for t_ev in times:
        span = t_ev - t_now
        if span > tol:
            steps = max(1, int(math.ceil(span / h - 1e-9)))
            hs = span / steps
            omega = TWO_PI * f
            _integrate(y, steps, hs, v_amp, omega, phase, p.r1, p.l1, p.c1, p.r2, p.l2, p.c2,
                       m_now, out_i1, out_i2, out_vc1, out_vc2, out_v, out_w, n)
            out_t[n + 1:n + steps + 1] = t_now + hs * np.arange(1, steps + 1)
            out_f[n + 1:n + steps + 1] = f
            out_k[n + 1:n + steps + 1] = k_now
            n += steps
            phase = math.fmod(phase + omega * span, TWO_PI)
            t_now = t_ev
            out_t[n] = t_now

        is_tick, new_k = events[t_ev]
        if is_tick:
            detect = timing.dt_detect if timing.dt_detect is not None else 1.0 / f
            start = max(int(np.searchsorted(out_t[:n + 1], t_now - detect, side="right")) - 1, 0)
            tw = out_t[start:n + 1]
            v_det = amplitude_detector(out_v[start:n + 1], tw, detect)
            i1_det = amplitude_detector(out_i1[start:n + 1], tw, detect)
            i2_det = amplitude_detector(out_i2[start:n + 1], tw, detect)
            omega = TWO_PI * f
            i2_est = m_est = float("nan")
            held = True
            if i1_det > 0 and v_det > 0:
                try:
                    est = estimate_i2(PrimaryMeasurement(v_det, i1_det, omega), p)
                    i2_est, m_est = est.i2_est, est.m_est
                    held = False
                except InconsistentMeasurement:
                    pass
            f_next = f
            clamped = False
            if st is not None and not held:
                st, f_next = ctl.ascent_step(st, i2_est)
                clamped = st.clamped
            log["t"].append(t_now)
            log["k"].append(k_now)
            log["f"].append(f)
            log["f_next"].append(f_next)
            log["v_det"].append(v_det)
            log["i1_det"].append(i1_det)
            log["i2_det"].append(i2_det)
            log["i2_est"].append(i2_est)
            log["m_est"].append(m_est)
            log["clamped"].append(clamped)
            log["held"].append(held)
            log["settled"].append(not switched_since_tick)
            f = f_next
            switched_since_tick = False

        if new_k is not None:
            m_new = mutual_from_k(new_k, p.l1, p.l2)
            _check_inductance(p, m_new)
            # currents are continuous, so the step changes the stored energy by dM*i1*i2
            y[4] += (m_new - m_now) * y[0] * y[1]
            out_w[n] = y[4]
            k_now, m_now = new_k, m_new
            out_k[n] = k_now
            switched_since_tick = True

    ticks = TickLog(
        **{
            key: _frozen(np.array(vals, dtype=bool if key in ("clamped", "held", "settled") else float))
            for key, vals in log.items()
        }
    )
    return RunRecord(
        t=_frozen(out_t[:n + 1]),
        i1=_frozen(out_i1[:n + 1]),
        i2=_frozen(out_i2[:n + 1]),
        v=_frozen(out_v[:n + 1]),
        v_c1=_frozen(out_vc1[:n + 1]),
        v_c2=_frozen(out_vc2[:n + 1]),
        f=_frozen(out_f[:n + 1]),
        k=_frozen(out_k[:n + 1]),
        work=_frozen(out_w[:n + 1]),
        ticks=ticks,
        params=p,
    )


def run_open_loop(p: CircuitParams, k: float, f: float, duration: float, h: float = 50e-9,
                  dt_ctrl: float = 150e-6) -> RunRecord:
    """Fixed (k, f) run of the plant from rest."""
    if not f > 0:
        raise ValueError(f"frequency must be positive, got {f!r}")
    if duration < 20.0 / f * (1.0 - 1e-9):
        raise ValueError("duration must cover at least 20 carrier periods")
    timing = Timing(dt_ctrl=min(dt_ctrl, duration), h=h, duration=duration)
    return run_scenario(p, CouplingSchedule.constant(k), None, timing, f_drive=f)
