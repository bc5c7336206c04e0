"""Behavioral simulator and verification harness for a CTIA-based
in-pixel computing accelerator."""

from .adc import AdcConfig, cds_signed, maxpool, quantize, relu_requantize
from .golden import CalibrationMap, compare_runs, golden_layer
from .mapper import (
    BnParams,
    ConvSpec,
    FusedLayer,
    Schedule,
    build_schedule,
    fuse_and_quantize,
    fuse_bn,
    output_dims,
    quantize_weights,
)
from .metrics import (
    MetricsReport,
    MismatchSpec,
    bandwidth_reduction,
    energy_estimate,
    linearity_sweep,
    metrics_report,
    monte_carlo,
    op_count,
)
from .pipeline import ChainConfig, simulate_layer
from .pixel import (
    FitResult,
    PixelParams,
    TransferModel,
    eval_transfer,
    fit_transfer,
    integrate,
)
from .pixel_array import (
    ArrayConfig,
    CblState,
    MacCycleResult,
    accumulate_column,
    bayer_channel_view,
    combine_columns,
    readout_frame,
    run_mac_cycle,
    run_signed_mac,
)
from .wtc import CounterConfig, TimedPulse, WeightPlane, match_ticks, match_time, pulse

__version__ = "0.1.0"
