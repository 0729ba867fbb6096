"""Curriculum schedules for pretraining difficulty.

Two knobs grow harder with the step index n: the noise-mean distance bounds
(a, b, c, d) that control how separable foreground and background are, and the
number M of polygon vertices hinted in the pretraining instruction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

# Euclidean diameter of the RGB cube, sqrt(3) * 255, rounded up at 2 dp.
MAX_RGB_DISTANCE = 441.68
MAX_HINTS = 15


@dataclass(frozen=True)
class ScheduleConfig:
    """Endpoints of the linear schedules plus the total pretraining step count."""

    a0: float = 100.0
    b0: float = 150.0
    c_final: float = 50.0
    d_final: float = 100.0
    total_steps: int = 60_000

    def __post_init__(self):
        if not (0 <= self.a0 <= self.b0 <= MAX_RGB_DISTANCE):
            raise ParameterError(f"need 0 <= a0 <= b0 <= {MAX_RGB_DISTANCE}")
        if not (0 <= self.c_final <= self.d_final <= MAX_RGB_DISTANCE):
            raise ParameterError(f"need 0 <= c_final <= d_final <= {MAX_RGB_DISTANCE}")
        if self.total_steps <= 0 or self.total_steps % 60 != 0:
            raise ParameterError("total_steps must be positive and divisible by 60")


@dataclass(frozen=True)
class StepParams:
    """Distance bounds and hint count in effect at one pretraining step."""

    n: int
    a: float
    b: float
    c: float
    d: float
    m: int

    def __post_init__(self):
        if self.a < 0 or self.a > self.b or self.c < 0 or self.c > self.d:
            raise ParameterError("distance bounds must satisfy 0 <= a <= b and 0 <= c <= d")
        if not (0 <= self.m <= MAX_HINTS):
            raise ParameterError(f"m must lie in [0, {MAX_HINTS}]")


def image_schedule(n: int, cfg: ScheduleConfig = ScheduleConfig()) -> tuple[float, float, float, float]:
    """Distance bounds at step n: a decays to 0, c rises to c_final; widths fixed."""
    if not (0 <= n <= cfg.total_steps):
        raise ParameterError(f"step {n} outside [0, {cfg.total_steps}]")
    a = cfg.a0 - n * cfg.a0 / cfg.total_steps
    b = a + cfg.b0 - cfg.a0
    c = n * cfg.c_final / cfg.total_steps
    d = c + cfg.d_final - cfg.c_final
    return a, b, c, d


def mask_schedule(n: int, cfg: ScheduleConfig = ScheduleConfig()) -> int:
    """Hint count M: drops by 1 every total_steps/30 steps, 0 for the second half."""
    if not (0 <= n < cfg.total_steps):
        raise ParameterError(f"step {n} outside [0, {cfg.total_steps})")
    if n >= cfg.total_steps // 2:
        return 0
    return max(0, MAX_HINTS - n // (cfg.total_steps // 30))


def step_params(n: int, cfg: ScheduleConfig = ScheduleConfig()) -> StepParams:
    """Bundle both schedules for step n."""
    a, b, c, d = image_schedule(n, cfg)
    return StepParams(n=n, a=a, b=b, c=c, d=d, m=mask_schedule(n, cfg))


def sample_hint_indices(rng: np.random.Generator, m: int) -> tuple[int, ...]:
    """Uniformly choose m distinct vertex indices to reveal, in ascending order."""
    if not (0 <= m <= MAX_HINTS):
        raise ParameterError(f"m must lie in [0, {MAX_HINTS}]")
    picked = rng.choice(16, size=m, replace=False)
    return tuple(int(i) for i in sorted(picked))
