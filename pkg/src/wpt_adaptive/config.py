"""Flat ``key = value`` configuration files.

Blank lines and ``#`` comments are ignored.  Values are SI numbers written in
plain or exponent form (``l1 = 20e-6``); list keys take comma-separated
numbers (``k = 0.1, 0.5, 0.9``).  Recognised keys:

    circuit:    v_amp r1 l1 c1 r2 r_load l2 c2
    sweep:      k fmin fmax points
    ramp:       ramp_k ramp_time duration dt_ctrl dt_detect h
    tracker:    start_freq learn_rate ctrl_fmin ctrl_fmax max_step
    comparison: static_k compare_duration settle_ticks
    output:     out_dir
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

from .circuit import CircuitParams
from .experiments import ExperimentConfig
from .transient import Timing


class ConfigError(ValueError):
    """Malformed or invalid configuration; names the offending key."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


CIRCUIT_KEYS = ("v_amp", "r1", "l1", "c1", "r2", "r_load", "l2", "c2")
TIMING_KEYS = {"duration": "duration", "dt_ctrl": "dt_ctrl", "dt_detect": "dt_detect", "h": "h"}
LIST_KEYS = {"k": "k_list", "ramp_k": "ramp_k"}
FLOAT_KEYS = {
    "fmin": "f_min",
    "fmax": "f_max",
    "ramp_time": "ramp_time",
    "start_freq": "f_start",
    "learn_rate": "learn_rate",
    "ctrl_fmin": "ctrl_f_min",
    "ctrl_fmax": "ctrl_f_max",
    "max_step": "max_step",
    "static_k": "static_k",
    "compare_duration": "compare_duration",
}
INT_KEYS = {"points": "f_points", "settle_ticks": "settle_ticks"}
KNOWN_KEYS = set(CIRCUIT_KEYS) | set(TIMING_KEYS) | set(LIST_KEYS) | set(FLOAT_KEYS) | set(INT_KEYS) | {"out_dir"}


def parse_text(text: str, source: str = "<config>") -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}", f"expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(key, f"unknown configuration key ({source}:{lineno})")
        out[key] = value
    return out


def load_file(path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror or exc}") from exc
    return parse_text(text, str(path))


def _num(key, value) -> float:
    if isinstance(value, (int, float)):
        return float(value)
    try:
        return float(value)
    except ValueError:
        raise ConfigError(key, f"not a number: {value!r}") from None


def _int(key, value) -> int:
    x = _num(key, value)
    if x != int(x):
        raise ConfigError(key, f"expected an integer, got {value!r}")
    return int(x)


def _nums(key, value) -> tuple:
    if isinstance(value, (list, tuple)):
        return tuple(_num(key, v) for v in value)
    parts = [s for s in str(value).replace(",", " ").split()]
    if not parts:
        raise ConfigError(key, "empty list")
    return tuple(_num(key, s) for s in parts)


def build_config(values: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Apply ``values`` (already merged file + overrides) on top of ``base``."""
    base = base or ExperimentConfig()
    circuit = {f.name: getattr(base.circuit, f.name) for f in dataclasses.fields(CircuitParams)}
    timing = dataclasses.asdict(base.timing)
    kw = {}
    for key, value in values.items():
        if value is None:
            continue
        if key in CIRCUIT_KEYS:
            circuit[key] = _num(key, value)
        elif key in TIMING_KEYS:
            timing[TIMING_KEYS[key]] = _num(key, value)
        elif key in LIST_KEYS:
            kw[LIST_KEYS[key]] = _nums(key, value)
        elif key in FLOAT_KEYS:
            kw[FLOAT_KEYS[key]] = _num(key, value)
        elif key in INT_KEYS:
            kw[INT_KEYS[key]] = _int(key, value)
        elif key == "out_dir":
            kw["out_dir"] = Path(value)
        else:
            raise ConfigError(key, "unknown configuration key")
    if "r_load" not in values and "r2" in values:
        circuit["r_load"] = min(circuit["r_load"], circuit["r2"])
    try:
        kw["circuit"] = CircuitParams(**circuit)
    except ValueError as exc:
        raise ConfigError(str(exc).split()[0], str(exc)) from None
    try:
        kw["timing"] = Timing(**timing)
    except ValueError as exc:
        raise ConfigError(str(exc).split()[0], str(exc)) from None
    try:
        return dataclasses.replace(base, **kw)
    except ValueError as exc:
        raise ConfigError(_guess_key(str(exc)), str(exc)) from None


def _guess_key(message: str) -> str:
    if message.startswith("k must") or "coupling coefficient" in message:
        return "k"
    return message.split()[0].rstrip(":")
