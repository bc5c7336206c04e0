"""Column-parallel 6-bit single-slope ADC with digital CDS.

One conversion compares the charge-bitline voltage against a linear ramp
while a counter runs; the count at the crossing is the code.  Running the
counter up for the positive-weight sample and down for the negative-weight
sample turns the CDS counter into a signed accumulator, and preloading it
with the batch-norm offset folds the BN bias in for free.  ReLU is just
clipping negative counter results to zero, requantization drops the two
LSBs, and max pooling reduces the output grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import StateError, ValidationError

ADC_BITS = 6

# Guard against float division landing one ulp below a code boundary; the
# counter itself is exact.
_BOUNDARY_GUARD = 1e-9


@dataclass(frozen=True)
class AdcConfig:
    """bits is fixed at 6; v_fs is the ramp span; bn_offset_codes is the
    preloaded CDS counter value (digitized BN offset); out_bits is the
    requantized activation width."""

    v_fs: float = 0.64
    bn_offset_codes: int = 0
    out_bits: int = 4
    bits: int = ADC_BITS

    def __post_init__(self):
        if self.bits != ADC_BITS:
            raise ValidationError(f"ADC resolution is fixed at {ADC_BITS} bits")
        if not (math.isfinite(self.v_fs) and self.v_fs > 0):
            raise ValidationError(f"adc.v_fs must be finite and > 0, got {self.v_fs}")
        if not 1 <= self.out_bits <= self.bits:
            raise ValidationError(
                f"adc.out_bits must be in [1, {self.bits}], got {self.out_bits}"
            )
        if not isinstance(self.bn_offset_codes, (int, np.integer)):
            raise ValidationError("adc.bn_offset_codes must be an integer")

    @property
    def lsb(self) -> float:
        return self.v_fs / (1 << self.bits)

    @property
    def code_max(self) -> int:
        return (1 << self.bits) - 1

    @property
    def out_max(self) -> int:
        return (1 << self.out_bits) - 1


def quantize(cfg: AdcConfig, v):
    """Counter value when the ramp crosses v: min(floor(v / lsb), 63).

    Accepts scalars or arrays.  Charge-bitline voltages are nonnegative by
    construction, so negative input is an invalid analog state.
    """
    arr = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise StateError("quantize: voltage must be finite")
    if np.any(arr < 0):
        raise StateError("quantize: negative voltage on the ADC input")
    ratio = arr / cfg.lsb
    code = np.floor(ratio + _BOUNDARY_GUARD).astype(np.int64)
    code = np.minimum(code, cfg.code_max)
    if code.ndim == 0:
        return int(code)
    return code


def cds_signed(cfg: AdcConfig, v_pos, v_neg):
    """Signed CDS result: up-count on the positive-weight sample, down-count
    on the negative-weight sample, starting from the BN preload."""
    return quantize(cfg, v_pos) - quantize(cfg, v_neg) + cfg.bn_offset_codes


def relu_requantize(cfg: AdcConfig, code):
    """Clip negative codes to zero, then truncate to out_bits."""
    arr = np.asarray(code)
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValidationError("relu_requantize expects integer codes")
    clipped = np.maximum(arr, 0)
    value = np.minimum(clipped >> (cfg.bits - cfg.out_bits), cfg.out_max)
    if value.ndim == 0:
        return int(value)
    return value


def maxpool(grid, stride: int):
    """Non-overlapping stride x stride max pooling with ceiling output
    dimensions; a ragged edge is pooled over the partial window."""
    if stride < 1:
        raise ValidationError(f"pooling stride must be >= 1, got {stride}")
    arr = np.asarray(grid)
    if arr.ndim != 2 or arr.size == 0:
        raise ValidationError("maxpool expects a non-empty 2-D grid")
    if stride == 1:
        return arr.copy()
    row_starts = np.arange(0, arr.shape[0], stride)
    col_starts = np.arange(0, arr.shape[1], stride)
    pooled = np.maximum.reduceat(arr, row_starts, axis=0)
    return np.maximum.reduceat(pooled, col_starts, axis=1)
