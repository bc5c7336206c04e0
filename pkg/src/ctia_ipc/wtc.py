"""Weight-to-time converter.

A stored 4-bit weight magnitude is matched against a sliding 4-bit window
of a free-running 7-bit global counter.  The match fires a reset pulse, so
the exposure seen by the pixel runs from counter start to the first tick
whose windowed value equals the weight: exposure = magnitude * 2**window
ticks.  Window selection rescales every exposure by 1X/2X/4X/8X without
touching the stored weights.

Tick arithmetic is exact integer math; ticks convert to seconds only at
the boundary to the device model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

COUNTER_BITS = 7
WEIGHT_BITS = 4
MAG_MAX = (1 << WEIGHT_BITS) - 1
WINDOWS = (0, 1, 2, 3)


@dataclass(frozen=True)
class CounterConfig:
    """Global counter configuration.

    t_step: seconds per counter tick.
    window: which 4-bit slice of the 7-bit counter feeds the comparators;
        window w compares counter bits (3+w)..w, scaling exposure by 2**w.
    """

    t_step: float = 1e-6
    window: int = 0
    width: int = COUNTER_BITS

    def __post_init__(self):
        if self.width != COUNTER_BITS:
            raise ValidationError(f"counter width is fixed at {COUNTER_BITS} bits")
        if self.window not in WINDOWS:
            raise ValidationError(f"counter window must be one of {WINDOWS}, got {self.window}")
        if not (math.isfinite(self.t_step) and self.t_step > 0):
            raise ValidationError(f"counter t_step must be finite and > 0, got {self.t_step}")

    @property
    def exposure_multiplier(self) -> int:
        return 1 << self.window


def _check_magnitude(magnitude) -> None:
    m = np.asarray(magnitude)
    if not np.issubdtype(m.dtype, np.integer):
        raise ValidationError("weight magnitude must be an integer")
    if np.any(m < 0) or np.any(m > MAG_MAX):
        raise ValidationError(f"weight magnitude must be in [0, {MAG_MAX}]")


def match_ticks(cfg: CounterConfig, magnitude):
    """First counter tick at which the selected window equals the weight.

    Exact integer arithmetic: magnitude << window.  Accepts scalars or
    integer arrays.
    """
    _check_magnitude(magnitude)
    ticks = np.asarray(magnitude) << cfg.window
    if ticks.ndim == 0:
        return int(ticks)
    return ticks


def match_time(cfg: CounterConfig, magnitude):
    """Exposure duration in seconds before the weighted reset fires."""
    ticks = match_ticks(cfg, magnitude)
    t = np.asarray(ticks, dtype=float) * cfg.t_step
    if t.ndim == 0:
        return float(t)
    return t


@dataclass(frozen=True)
class TimedPulse:
    """Exposure pulse: asserted at t=0, deasserted at the match time."""

    assert_time: float
    deassert_time: float

    @property
    def width(self) -> float:
        return self.deassert_time - self.assert_time


def pulse(cfg: CounterConfig, magnitude: int, reset: bool = False) -> TimedPulse:
    """Exposure pulse for one stored weight.

    Reset dominates: an asserted reset forces the pulse deasserted
    immediately (zero width), regardless of the stored weight.
    """
    if reset:
        return TimedPulse(assert_time=0.0, deassert_time=0.0)
    return TimedPulse(assert_time=0.0, deassert_time=match_time(cfg, magnitude))


class WeightPlane:
    """Per-pixel weight magnitude storage (the vertically stacked SRAM).

    Writes happen in the write phase; the compute phase only reads, so no
    locking is needed.
    """

    def __init__(self, rows: int, cols: int):
        if rows < 1 or cols < 1:
            raise ValidationError("weight plane dimensions must be >= 1")
        self.rows = rows
        self.cols = cols
        self._mags = np.zeros((rows, cols), dtype=np.uint8)

    def write(self, row: int, col: int, magnitude: int) -> None:
        """Store one weight magnitude; out-of-bounds raises IndexError."""
        _check_magnitude(magnitude)
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise IndexError(f"weight plane write out of bounds: ({row}, {col})")
        self._mags[row, col] = magnitude

    def read(self, row: int, col: int) -> int:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise IndexError(f"weight plane read out of bounds: ({row}, {col})")
        return int(self._mags[row, col])

    def load(self, magnitudes) -> None:
        """Bulk write phase: replace the whole plane."""
        arr = np.asarray(magnitudes)
        _check_magnitude(arr)
        if arr.shape != (self.rows, self.cols):
            raise ValidationError(
                f"weight plane expects shape {(self.rows, self.cols)}, got {arr.shape}"
            )
        self._mags = arr.astype(np.uint8, copy=True)

    def magnitudes(self) -> np.ndarray:
        """Read-only view of the stored magnitudes."""
        view = self._mags.view()
        view.flags.writeable = False
        return view
