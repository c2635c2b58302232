"""Discrete gradient-ascent (perturb-and-observe) frequency tracker.

Each tick moves the drive frequency in the direction of the last frequency
change, scaled by how much the tracked metric improved:

    f_next = f_curr + learn_rate * (metric_new - metric_prev) * sign(f_curr - f_prev)

with sign(0) taken as +1.  The proposal is limited to ``max_step`` hertz per
tick and clamped to ``[f_min, f_max]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

DEFAULT_LEARN_RATE = 8e5  # Hz per ampere
DEFAULT_F_MIN = 40e3
DEFAULT_F_MAX = 110e3
DEFAULT_MAX_STEP = 1e3  # Hz per tick


@dataclass(frozen=True)
class ControllerState:
    f_curr: float
    f_prev: float
    metric_prev: float
    metric_prev2: float
    learn_rate: float
    f_min: float
    f_max: float
    max_step: Optional[float] = DEFAULT_MAX_STEP
    clamped: bool = False  # last proposal hit f_min or f_max

    def __post_init__(self):
        if not self.learn_rate > 0:
            raise ValueError(f"learn_rate must be positive, got {self.learn_rate!r}")
        if not self.f_min < self.f_max:
            raise ValueError(f"need f_min < f_max, got [{self.f_min!r}, {self.f_max!r}]")
        for name in ("f_curr", "f_prev"):
            f = getattr(self, name)
            if not self.f_min <= f <= self.f_max:
                raise ValueError(f"{name}={f!r} outside [{self.f_min!r}, {self.f_max!r}]")
        if self.max_step is not None and not self.max_step > 0:
            raise ValueError(f"max_step must be positive or None, got {self.max_step!r}")


def init(
    f_start: float,
    learn_rate: float = DEFAULT_LEARN_RATE,
    f_min: float = DEFAULT_F_MIN,
    f_max: float = DEFAULT_F_MAX,
    max_step: Optional[float] = DEFAULT_MAX_STEP,
) -> ControllerState:
    """Controller sitting at ``f_start`` with zeroed metric memory."""
    if not f_min <= f_start <= f_max:
        raise ValueError(f"start frequency {f_start!r} outside [{f_min!r}, {f_max!r}]")
    return ControllerState(
        f_curr=f_start,
        f_prev=f_start,
        metric_prev=0.0,
        metric_prev2=0.0,
        learn_rate=learn_rate,
        f_min=f_min,
        f_max=f_max,
        max_step=max_step,
    )


def ascent_step(st: ControllerState, metric_new: float) -> tuple[ControllerState, float]:
    """Advance the tracker by one tick; returns the new state and the next frequency."""
    if not (math.isfinite(metric_new) and metric_new >= 0):
        raise ValueError(f"metric must be finite and non-negative, got {metric_new!r}")
    delta = metric_new - st.metric_prev
    direction = 1.0 if st.f_curr >= st.f_prev else -1.0
    step = st.learn_rate * delta * direction
    if st.max_step is not None:
        step = max(-st.max_step, min(st.max_step, step))
    proposal = st.f_curr + step
    f_next = min(st.f_max, max(st.f_min, proposal))
    new = replace(
        st,
        f_prev=st.f_curr,
        f_curr=f_next,
        metric_prev2=st.metric_prev,
        metric_prev=metric_new,
        clamped=f_next != proposal,
    )
    return new, f_next
