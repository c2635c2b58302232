"""Reproduction harness: AC sweeps, the splitting surface, the closed-loop ramp
and the static-versus-adaptive comparison, each written as CSV plus a JSON
summary of headline numbers.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import controller as ctl
from .circuit import (
    TABLE1,
    CircuitParams,
    Coupling,
    local_maxima,
    resonant_frequency,
    split_pole_ceiling,
    splitting_surface,
    sweep,
)
from .transient import CouplingSchedule, RunRecord, Timing, run_scenario

OUT_DIR_ENV = "WPT_OUT_DIR"
DEFAULT_K_LIST = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
DEFAULT_RAMP = (0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_DIR_ENV, "results"))


@dataclass(frozen=True)
class ExperimentConfig:
    circuit: CircuitParams = TABLE1
    k_list: tuple = DEFAULT_K_LIST
    # AC sweep grid, hertz
    f_min: float = 40e3
    f_max: float = 120e3
    f_points: int = 8001
    # closed-loop ramp
    ramp_k: tuple = DEFAULT_RAMP
    ramp_time: float = 0.02
    timing: Timing = Timing()
    # tracker
    f_start: float = 75e3
    learn_rate: float = ctl.DEFAULT_LEARN_RATE
    ctrl_f_min: float = ctl.DEFAULT_F_MIN
    ctrl_f_max: float = ctl.DEFAULT_F_MAX
    max_step: Optional[float] = ctl.DEFAULT_MAX_STEP
    # static-versus-adaptive comparison
    static_k: float = 0.5
    compare_duration: float = 0.01
    settle_ticks: int = 10
    out_dir: Path = field(default_factory=default_out_dir)

    def __post_init__(self):
        if not (0 < self.f_min < self.f_max):
            raise ValueError(f"need 0 < fmin < fmax, got fmin={self.f_min!r}, fmax={self.f_max!r}")
        if self.f_points < 3:
            raise ValueError(f"points must be at least 3, got {self.f_points!r}")
        for name in ("k_list", "ramp_k"):
            ks = getattr(self, name)
            if not ks:
                raise ValueError(f"{name} must not be empty")
            for k in ks:
                Coupling.from_k(k, self.circuit.l1, self.circuit.l2)
        for name in ("ramp_time", "compare_duration"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.settle_ticks < 1:
            raise ValueError("settle_ticks must be at least 1")
        Coupling.from_k(self.static_k, self.circuit.l1, self.circuit.l2)
        # validates the tracker settings
        self.new_controller(self.f_start)

    @property
    def f_grid(self) -> np.ndarray:
        return np.linspace(self.f_min, self.f_max, self.f_points)

    def new_controller(self, f_start: float) -> ctl.ControllerState:
        return ctl.init(f_start, self.learn_rate, self.ctrl_f_min, self.ctrl_f_max, self.max_step)

    def m_of(self, k: float) -> float:
        return Coupling.from_k(k, self.circuit.l1, self.circuit.l2).m


@dataclass(frozen=True)
class ComparisonRow:
    k: float
    static_metric: float
    dynamic_metric: float
    improvement_pct: float
    p_load_w: float


# ---------------------------------------------------------------- output helpers


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    return format(float(x), ".12g")


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def write_summary(path: Path, summary: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def k_label(k: float) -> str:
    return f"{k:.2f}"


def analytic_max_i2(p: CircuitParams, k: float, f_lo: float = 20e3, f_hi: float = 400e3,
                    points: int = 76001) -> tuple[float, float]:
    """(frequency, |I2|) of the largest |I2| over a dense grid, refined on a 1 Hz grid."""
    m = Coupling.from_k(k, p.l1, p.l2).m
    f = np.linspace(f_lo, f_hi, points)
    c = sweep(p, m, f)
    i = int(np.argmax(c.i2_mag))
    step = f[1] - f[0]
    fine = np.arange(max(f[i] - step, f_lo), min(f[i] + step, f_hi) + 0.5, 1.0)
    c2 = sweep(p, m, fine)
    j = int(np.argmax(c2.i2_mag))
    return float(fine[j]), float(c2.i2_mag[j])


# ---------------------------------------------------------------- experiments


def exp_ac_sweep(cfg: ExperimentConfig) -> dict:
    """Phasor sweep of |I1|, |I2| and Z_IN for every k in ``cfg.k_list``."""
    p = cfg.circuit
    f = cfg.f_grid
    out = {}
    for k in cfg.k_list:
        c = sweep(p, cfg.m_of(k), f)
        write_csv(
            cfg.out_dir / f"sweep_{k_label(k)}.csv",
            ["f_hz", "i1_a", "i2_a", "zin_ohm", "zin_rad"],
            zip(c.freqs, c.i1_mag, c.i2_mag, c.zin_mag, c.zin_phase),
        )
        max1 = local_maxima(c.i1_mag, f)
        max2 = local_maxima(c.i2_mag, f)
        out[k_label(k)] = {
            "argmax_i1_hz": float(f[np.argmax(c.i1_mag)]),
            "argmax_i2_hz": float(f[np.argmax(c.i2_mag)]),
            "maxima_i1": max1,
            "maxima_i2": max2,
            "n_maxima_i1": len(max1),
            "n_maxima_i2": len(max2),
        }
    split1 = [k for k in cfg.k_list if out[k_label(k)]["n_maxima_i1"] >= 2]
    split2 = [k for k in cfg.k_list if out[k_label(k)]["n_maxima_i2"] >= 2]
    summary = {
        "per_k": out,
        "first_split_k_i1": min(split1) if split1 else None,
        "first_split_k_i2": min(split2) if split2 else None,
        "f0_hz": resonant_frequency(p.l1, p.c1),
    }
    write_summary(cfg.out_dir / "sweep_summary.json", summary)
    return summary


def exp_surface(cfg: ExperimentConfig) -> dict:
    """|I2| over the (k, f) grid plus the ridge of per-k frequency maxima."""
    p = cfg.circuit
    surf = splitting_surface(p, cfg.k_list, cfg.f_grid)
    rows = (
        (k, f, v)
        for k, row in zip(surf.k_grid, surf.i2)
        for f, v in zip(surf.f_grid, row)
    )
    write_csv(cfg.out_dir / "surface.csv", ["k", "f_hz", "i2_a"], rows)
    ridge = [(k, f, v) for k, mx in zip(surf.k_grid, surf.maxima) for f, v in mx]
    write_csv(cfg.out_dir / "ridge.csv", ["k", "f_hz", "i2_a"], ridge)
    summary = {
        "shape": list(surf.i2.shape),
        "ridge_counts": {k_label(k): len(mx) for k, mx in zip(surf.k_grid, surf.maxima)},
        "ridge_max_a": {
            k_label(k): max((v for _, v in mx), default=float("nan"))
            for k, mx in zip(surf.k_grid, surf.maxima)
        },
        "split_pole_ceiling_a": split_pole_ceiling(p),
    }
    write_summary(cfg.out_dir / "surface_summary.json", summary)
    return summary


def ramp_schedule(cfg: ExperimentConfig, ks=None) -> CouplingSchedule:
    return CouplingSchedule.ramp(cfg.ramp_k if ks is None else ks, cfg.ramp_time)


def run_adaptive(cfg: ExperimentConfig, ks=None) -> RunRecord:
    """The closed-loop ramp scenario."""
    return run_scenario(cfg.circuit, ramp_schedule(cfg, ks), cfg.new_controller(cfg.f_start), cfg.timing)


def first_reversal_index(f_before, f_after) -> Optional[int]:
    """Index of the first tick whose frequency step opposes the previous non-zero step."""
    last = 0.0
    for i, (a, b) in enumerate(zip(f_before, f_after)):
        d = np.sign(b - a)
        if d == 0:
            continue
        if last != 0 and d != last:
            return i
        last = d
    return None


def adaptive_summary(cfg: ExperimentConfig, rec: RunRecord) -> dict:
    p = cfg.circuit
    tk = rec.ticks
    rev = first_reversal_index(tk.f, tk.f_next)
    err = np.abs(tk.i2_est - tk.i2_det) / tk.i2_det
    post = np.zeros(len(tk), dtype=bool)
    if rev is not None:
        post[rev:] = True
    post &= tk.settled & ~tk.held
    sched = ramp_schedule(cfg)
    seg_mean = {}
    for t0, k in sched.segments:
        sel = tk.k == k
        if np.any(sel):
            seg_mean[k_label(k)] = float(np.mean(tk.f[sel]))
    k_final = float(tk.k[-1])
    f_peak, i2_peak = analytic_max_i2(p, k_final)
    metric_final = float(tk.i2_est[-1])
    t06 = next((t0 for t0, k in sched.segments if k >= 0.6 - 1e-12), None)
    after06 = tk.t > t06 if t06 is not None else np.zeros(len(tk), dtype=bool)
    return {
        "first_reversal_t_s": float(tk.t[rev]) if rev is not None else None,
        "max_post_settling_est_err": float(np.max(err[post])) if np.any(post) else None,
        "n_post_settling_ticks": int(np.sum(post)),
        "segment_mean_f_hz": seg_mean,
        "min_f_after_k06_hz": float(np.min(tk.f_next[after06])) if np.any(after06) else None,
        "f0_hz": resonant_frequency(p.l1, p.c1),
        "final_k": k_final,
        "final_f_hz": float(tk.f_next[-1]),
        "final_metric_a": metric_final,
        "analytic_max_i2_a": i2_peak,
        "analytic_peak_f_hz": f_peak,
        "final_power_ratio": metric_final ** 2 / i2_peak ** 2,
        "n_clamped": int(np.sum(tk.clamped)),
        "n_held": int(np.sum(tk.held)),
    }


def exp_adaptive(cfg: ExperimentConfig) -> dict:
    """Closed-loop tracking through the coupling ramp, one CSV row per controller tick."""
    rec = run_adaptive(cfg)
    tk = rec.ticks
    write_csv(
        cfg.out_dir / "adaptive.csv",
        ["t_s", "k", "f_hz", "i2_meas_a", "i2_est_a", "metric_a"],
        zip(tk.t, tk.k, tk.f, tk.i2_det, tk.i2_est, tk.i2_est),
    )
    summary = adaptive_summary(cfg, rec)
    write_summary(cfg.out_dir / "adaptive_summary.json", summary)
    return summary


def static_frequency(cfg: ExperimentConfig) -> float:
    """Frequency of the static design: the |I2| maximum at ``cfg.static_k``."""
    return analytic_max_i2(cfg.circuit, cfg.static_k)[0]


def incoming_frequencies(cfg: ExperimentConfig) -> dict:
    """Drive frequency the tracker holds when each k of ``cfg.k_list`` begins.

    The ramp steps through ``cfg.k_list``; the first segment starts at ``cfg.f_start``.
    """
    ks = sorted(cfg.k_list)
    if len(ks) == 1:
        return {ks[0]: cfg.f_start}
    rec = run_adaptive(cfg, ks)
    sched = ramp_schedule(cfg, ks)
    out = {}
    for t0, k in sched.segments:
        i = int(np.searchsorted(rec.t, t0, side="right")) - 1
        out[k] = float(rec.f[max(i, 0)]) if t0 > 0 else cfg.f_start
    return out


def dynamic_metric(cfg: ExperimentConfig, k: float, f_seed: float) -> float:
    """Mean measured |I2|^2 over the last ``settle_ticks`` ticks of a fixed-k closed-loop run."""
    f_seed = min(cfg.ctrl_f_max, max(cfg.ctrl_f_min, f_seed))
    timing = Timing(cfg.timing.dt_ctrl, cfg.timing.dt_detect, cfg.timing.h, cfg.compare_duration)
    rec = run_scenario(cfg.circuit, CouplingSchedule.constant(k), cfg.new_controller(f_seed), timing)
    tail = rec.ticks.i2_det[-cfg.settle_ticks:]
    return float(np.mean(tail ** 2))


def compare_rows(cfg: ExperimentConfig) -> list[ComparisonRow]:
    p = cfg.circuit
    f_static = static_frequency(cfg)
    seeds = incoming_frequencies(cfg)
    rows = []
    for k in cfg.k_list:
        static = float(sweep(p, cfg.m_of(k), [f_static]).i2_mag[0] ** 2)
        dyn = dynamic_metric(cfg, k, seeds[k])
        imp = 100.0 * (dyn - static) / static if static > 0 else float("nan")
        rows.append(ComparisonRow(k, static, dyn, imp, 0.5 * dyn * p.r_load))
    return rows


def format_table(rows: list[ComparisonRow]) -> str:
    lines = [f"{'k':>5} {'static [A^2]':>13} {'dynamic [A^2]':>14} {'improv [%]':>11} {'P_load [W]':>11}"]
    for r in rows:
        lines.append(
            f"{r.k:5.2f} {r.static_metric:13.4f} {r.dynamic_metric:14.4f} {r.improvement_pct:11.2f} {r.p_load_w:11.4f}"
        )
    return "\n".join(lines)


def exp_compare(cfg: ExperimentConfig) -> dict:
    """Static matching at the k=0.5 optimum versus the closed-loop tracker, per k."""
    rows = compare_rows(cfg)
    write_csv(
        cfg.out_dir / "compare.csv",
        ["k", "static_a2", "dynamic_a2", "improvement_pct", "p_load_w"],
        ((r.k, r.static_metric, r.dynamic_metric, r.improvement_pct, r.p_load_w) for r in rows),
    )
    summary = {
        "f_static_hz": static_frequency(cfg),
        "rows": [asdict(r) for r in rows],
        "table": format_table(rows),
    }
    write_summary(cfg.out_dir / "compare_summary.json", summary)
    return summary


EXPERIMENTS = {
    "sweep": exp_ac_sweep,
    "surface": exp_surface,
    "adapt": exp_adaptive,
    "compare": exp_compare,
}


def run_all(cfg: ExperimentConfig) -> dict:
    summary = {name: fn(cfg) for name, fn in EXPERIMENTS.items()}
    write_summary(cfg.out_dir / "summary.json", summary)
    return summary
