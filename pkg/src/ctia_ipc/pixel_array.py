"""Pixel array core: charge-bitline accumulation and column combining.

Every pixel in a column dumps its exposure charge onto a shared charge
bitline (CBL); a switching matrix then charge-shares k adjacent column
capacitors into one ADC input following

    V_adc_in = (V_1 + ... + V_N) / (4 + 2*C2/C1 + CF/C1)

Sign handling never touches the CBL: positive- and negative-weight
magnitudes run in separate cycles and meet again only in the ADC's up/down
counter.

Summation order is fixed (column index, then row, then channel) so that
results are bit-reproducible regardless of how column evaluations are
scheduled.

Bayer geometry: the mosaic is interpreted as four channels (R, G1, G2, B
at even/even, even/odd, odd/even, odd/odd parities) held constant over
each 2x2 quad.  A kernel window anchored at raw pixel (r0, c0) reads, for
every channel, the k x k quad-sampled values at (r0+i, c0+j), giving the
k*k*4 contributions per output node that the accumulation network sums.
MAC mode therefore requires even frame dimensions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ScheduleError, StateError, ValidationError
from .pixel import PixelParams, integrate
from .wtc import CounterConfig, match_ticks

MODE_READOUT = "readout"
MODE_MAC = "mac"

# (row parity, col parity) per channel, in channel order R, G1, G2, B.
BAYER_OFFSETS = ((0, 0), (0, 1), (1, 0), (1, 1))
N_CHANNELS = 4


@dataclass(frozen=True)
class ArrayConfig:
    rows: int = 1024
    cols: int = 1280
    c1: float = 10e-15
    c2: float = 10e-15
    c_f_acc: float = 10e-15
    mode: str = MODE_MAC

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValidationError("array dimensions must be >= 1")
        for name in ("c1", "c2", "c_f_acc"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"array.{name} must be finite and > 0, got {value!r}")
        if self.mode not in (MODE_READOUT, MODE_MAC):
            raise ValidationError(f"array mode must be readout or mac, got {self.mode!r}")

    @property
    def divider(self) -> float:
        return 4.0 + 2.0 * self.c2 / self.c1 + self.c_f_acc / self.c1


@dataclass
class CblState:
    """One charge bitline: accumulated volts plus contributor count."""

    volts: float = 0.0
    contributors: int = 0

    def add(self, dv: float) -> None:
        v = float(dv)
        if not math.isfinite(v):
            raise StateError("CBL contribution must be finite")
        if v < 0:
            raise StateError("negative contribution on a charge bitline")
        self.volts += v
        self.contributors += 1


def accumulate_column(contributions) -> float:
    """Charge-share one column's pixel contributions onto its CBL.

    Contributions are discharge magnitudes and must be nonnegative; the
    two-cycle sign split guarantees this upstream.
    """
    cbl = CblState()
    for value in contributions:
        cbl.add(value)
    return cbl.volts


def combine_columns(cfg: ArrayConfig, column_voltages) -> float:
    """Switching-matrix charge sharing of k column voltages into V_adc_in."""
    volts = list(column_voltages)
    if not volts:
        raise ValidationError("combine_columns needs at least one column voltage")
    total = 0.0
    for v in volts:
        total += float(v)
    return total / cfg.divider


def bayer_channel_view(frame: np.ndarray) -> np.ndarray:
    """Expand an RGGB mosaic to a (4, rows, cols) channel stack.

    Channel ch at (r, c) is the mosaic sample of that color inside the 2x2
    quad containing (r, c).  Requires even dimensions.
    """
    arr = np.asarray(frame)
    if arr.ndim != 2:
        raise ValidationError("frame must be 2-D")
    rows, cols = arr.shape
    if rows % 2 or cols % 2:
        raise ValidationError(
            f"MAC mode needs even frame dimensions (RGGB quads), got {rows}x{cols}"
        )
    row_base = np.arange(rows) & ~1
    col_base = np.arange(cols) & ~1
    channels = np.empty((N_CHANNELS,) + arr.shape, dtype=arr.dtype)
    for ch, (dr, dc) in enumerate(BAYER_OFFSETS):
        channels[ch] = arr[np.ix_(row_base + dr, col_base + dc)]
    return channels


def extract_window(channels: np.ndarray, r0: int, c0: int, k: int) -> np.ndarray:
    """One output node's (4, k, k) receptive field from a channel stack."""
    if channels.ndim != 3 or channels.shape[0] != N_CHANNELS:
        raise ValidationError("expected a (4, rows, cols) channel stack")
    rows, cols = channels.shape[1:]
    if r0 < 0 or c0 < 0 or r0 + k > rows or c0 + k > cols:
        raise ScheduleError(f"window ({r0}, {c0}) size {k} exceeds {rows}x{cols} frame")
    return channels[:, r0 : r0 + k, c0 : c0 + k]


def run_mac_cycle(
    cfg: ArrayConfig,
    params: PixelParams,
    wtc_cfg: CounterConfig,
    region,
    magnitudes,
    polarity: str = "positive",
) -> float:
    """One output node's ADC-input voltage for one polarity cycle.

    region: (4, k, k) photocurrents for the node's receptive field.
    magnitudes: (4, k, k) unsigned weight magnitudes for this polarity
        (cells belonging to the other polarity hold 0).

    Each active pixel contributes integrate(photocurrent, match_time(w));
    contributions accumulate per column (rows, then channels) and the
    switching matrix combines the k columns.
    """
    if cfg.mode != MODE_MAC:
        raise ValidationError("run_mac_cycle requires mac mode")
    if polarity not in ("positive", "negative"):
        raise ValidationError(f"polarity must be positive or negative, got {polarity!r}")
    x = np.asarray(region, dtype=float)
    mags = np.asarray(magnitudes)
    if x.ndim != 3 or x.shape[0] != N_CHANNELS or x.shape[1] != x.shape[2]:
        raise ScheduleError(f"region must be (4, k, k), got {x.shape}")
    if mags.shape != x.shape:
        raise ScheduleError(f"weight plane shape {mags.shape} != region shape {x.shape}")
    k = x.shape[1]
    exposures = np.asarray(match_ticks(wtc_cfg, mags), dtype=float) * wtc_cfg.t_step
    column_voltages = []
    for j in range(k):
        contributions = [
            integrate(params, x[ch, i, j], exposures[ch, i, j])
            for i in range(k)
            for ch in range(N_CHANNELS)
        ]
        column_voltages.append(accumulate_column(contributions))
    return combine_columns(cfg, column_voltages)


@dataclass(frozen=True)
class MacCycleResult:
    """ADC inputs of one output node's two polarity cycles.

    Each cycle accumulates magnitudes only, so both voltages are
    nonnegative; their signed difference exists only as a counter value
    after CDS.
    """

    v_pos: float
    v_neg: float

    def __post_init__(self):
        if self.v_pos < 0 or self.v_neg < 0:
            raise StateError("polarity-cycle voltages accumulate magnitudes only")


def run_signed_mac(
    cfg: ArrayConfig,
    params: PixelParams,
    wtc_cfg: CounterConfig,
    region,
    pos_magnitudes,
    neg_magnitudes,
) -> MacCycleResult:
    """Both polarity cycles of one output node."""
    return MacCycleResult(
        v_pos=run_mac_cycle(cfg, params, wtc_cfg, region, pos_magnitudes, "positive"),
        v_neg=run_mac_cycle(cfg, params, wtc_cfg, region, neg_magnitudes, "negative"),
    )


def mac_node_voltages(
    cfg: ArrayConfig,
    params: PixelParams,
    wtc_cfg: CounterConfig,
    channels: np.ndarray,
    magnitudes,
    k: int,
    stride: int,
) -> np.ndarray:
    """All output nodes' ADC-input voltages for one polarity cycle set.

    Vectorized equivalent of run_mac_cycle over every stride-spaced window
    of the frame: for each kernel tap, a strided slice of the channel stack
    is integrated and accumulated.  Tap order is fixed (column, row,
    channel) to keep results reproducible.
    """
    if cfg.mode != MODE_MAC:
        raise ValidationError("mac_node_voltages requires mac mode")
    mags = np.asarray(magnitudes)
    if mags.shape != (N_CHANNELS, k, k):
        raise ScheduleError(f"weight plane must be (4, {k}, {k}), got {mags.shape}")
    rows, cols = channels.shape[1:]
    if rows < k or cols < k:
        raise ScheduleError(f"frame {rows}x{cols} smaller than kernel {k}")
    out_r = (rows - k) // stride + 1
    out_c = (cols - k) // stride + 1
    ticks = np.asarray(match_ticks(wtc_cfg, mags), dtype=np.int64)
    acc = np.zeros((out_r, out_c))
    for j in range(k):
        for i in range(k):
            for ch in range(N_CHANNELS):
                t = float(ticks[ch, i, j]) * wtc_cfg.t_step
                if t == 0.0:
                    continue
                patch = channels[
                    ch,
                    i : i + stride * (out_r - 1) + 1 : stride,
                    j : j + stride * (out_c - 1) + 1 : stride,
                ]
                acc += np.minimum(patch * t / params.c_f, params.headroom)
    return acc / cfg.divider


def readout_frame(cfg: ArrayConfig, params: PixelParams, frame, exposure: float) -> np.ndarray:
    """Conventional per-pixel voltage readout: no accumulation, no WTC."""
    if cfg.mode != MODE_READOUT:
        raise ValidationError("readout_frame requires readout mode")
    arr = np.asarray(frame, dtype=float)
    if arr.ndim != 2:
        raise ValidationError("frame must be 2-D")
    return np.asarray(integrate(params, arr, exposure), dtype=float)
