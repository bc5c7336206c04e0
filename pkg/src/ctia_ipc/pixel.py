"""Behavioral model of a single CTIA pixel.

The pixel front-end is a capacitive transimpedance amplifier: photodiode
current integrates onto a feedback capacitor around an amplifier, so the
integration node discharges linearly from its reset level while the
exposure pulse is active.  The amplifier itself is treated as ideal
(infinite gain, zero offset); mismatch and noise are injected only by the
Monte Carlo analysis, never here.

`integrate` is the analog multiply: photocurrent encodes the input
activation and exposure time encodes the weight, so the discharge
magnitude is proportional to their product until the headroom clamp
engages.  `fit_transfer` recovers the affine transfer curve from sampled
(weight, input, voltage) triples; the fitted model is what an external
training framework consumes in place of the first convolution layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FitError, ValidationError

IDEAL_LINEAR = "ideal-linear"
FITTED_POLYNOMIAL = "fitted-polynomial"


@dataclass(frozen=True)
class PixelParams:
    """Electrical parameters of one pixel.

    v_rst: reset voltage of the integration node [V]
    c_f: feedback/integration capacitance [F]
    i_max: photocurrent at full-scale pixel value [A]
    headroom: maximum |dV| excursion before the clamp engages [V]
    """

    v_rst: float = 0.8
    c_f: float = 10e-15
    i_max: float = 50e-12
    headroom: float = 0.8

    def __post_init__(self):
        for name in ("v_rst", "c_f", "i_max", "headroom"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValidationError(f"pixel.{name} must be finite, got {value!r}")
        if self.v_rst <= 0:
            raise ValidationError(f"pixel.v_rst must be > 0, got {self.v_rst}")
        if self.c_f <= 0:
            raise ValidationError(f"pixel.c_f must be > 0, got {self.c_f}")
        if self.i_max <= 0:
            raise ValidationError(f"pixel.i_max must be > 0, got {self.i_max}")
        if not 0 < self.headroom <= self.v_rst:
            raise ValidationError(
                f"pixel.headroom must satisfy 0 < headroom <= v_rst, got {self.headroom}"
            )


def integrate(params: PixelParams, photocurrent, exposure):
    """Discharge magnitude |dV| at the integration node after one exposure.

    dV = min(photocurrent * exposure / c_f, headroom).  Accepts scalars or
    numpy arrays (broadcast together); returns the same shape.
    """
    i = np.asarray(photocurrent, dtype=float)
    t = np.asarray(exposure, dtype=float)
    if not np.all(np.isfinite(i)) or not np.all(np.isfinite(t)):
        raise ValidationError("integrate: photocurrent and exposure must be finite")
    if np.any(i < 0):
        raise ValidationError("integrate: photocurrent must be >= 0")
    if np.any(t < 0):
        raise ValidationError("integrate: exposure must be >= 0")
    dv = np.minimum(i * t / params.c_f, params.headroom)
    if dv.ndim == 0:
        return float(dv)
    return dv


@dataclass(frozen=True)
class TransferModel:
    """Transfer curve from normalized weight*input product to volts.

    kind "ideal-linear" evaluates clamp(slope * (w*x) + intercept); kind
    "fitted-polynomial" evaluates clamp(poly(w*x)) with ``coeffs`` in
    highest-degree-first order (numpy polyval convention).
    """

    kind: str = IDEAL_LINEAR
    slope: float = 1.0
    intercept: float = 0.0
    clamp_lo: float = 0.0
    clamp_hi: float = 1.0
    coeffs: tuple = ()

    def __post_init__(self):
        if self.kind not in (IDEAL_LINEAR, FITTED_POLYNOMIAL):
            raise ValidationError(f"unknown transfer kind {self.kind!r}")
        if self.clamp_lo > self.clamp_hi:
            raise ValidationError("transfer clamp_lo must be <= clamp_hi")
        if not self.clamp_lo <= self.intercept <= self.clamp_hi:
            raise ValidationError("transfer intercept must lie within the clamp range")
        if self.kind == FITTED_POLYNOMIAL and len(self.coeffs) == 0:
            raise ValidationError("fitted-polynomial transfer needs coefficients")


def eval_transfer(model: TransferModel, w_norm, x_norm):
    """Evaluate the transfer model at normalized weight/input values."""
    w = np.asarray(w_norm, dtype=float)
    x = np.asarray(x_norm, dtype=float)
    if not np.all(np.isfinite(w)) or not np.all(np.isfinite(x)):
        raise ValidationError("eval_transfer: inputs must be finite")
    product = w * x
    if model.kind == IDEAL_LINEAR:
        v = model.slope * product + model.intercept
    else:
        v = np.polyval(model.coeffs, product)
    v = np.clip(v, model.clamp_lo, model.clamp_hi)
    if v.ndim == 0:
        return float(v)
    return v


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    residual_rms: float


def fit_transfer(samples) -> FitResult:
    """Least-squares line through (w_norm * x_norm, volts) samples.

    ``samples`` is an iterable of (w_norm, x_norm, volts) triples.  Raises
    FitError when fewer than two distinct abscissae are present.
    """
    arr = np.asarray(list(samples), dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValidationError("fit_transfer expects (w_norm, x_norm, volts) triples")
    if arr.shape[0] < 2:
        raise FitError("fit_transfer needs at least 2 samples")
    product = arr[:, 0] * arr[:, 1]
    volts = arr[:, 2]
    if np.ptp(product) == 0:
        raise FitError("all sample abscissae identical; fit is degenerate")
    slope, intercept = np.polyfit(product, volts, 1)
    residuals = volts - (slope * product + intercept)
    ss_res = float(np.dot(residuals, residuals))
    centered = volts - volts.mean()
    ss_tot = float(np.dot(centered, centered))
    # Flat-but-consistent data is a perfect fit, not 0/0; the floor absorbs
    # the one-ulp noise a constant column picks up from the mean.
    vscale = float(np.max(np.abs(volts))) if volts.size else 0.0
    flat_floor = (16 * np.finfo(float).eps * max(vscale, 1e-300)) ** 2 * arr.shape[0]
    r_squared = 1.0 if ss_tot <= flat_floor else 1.0 - ss_res / ss_tot
    return FitResult(
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r_squared,
        residual_rms=math.sqrt(ss_res / arr.shape[0]),
    )


def fit_transfer_model(samples, degree: int = 1, clamp_lo: float = 0.0, clamp_hi: float = float("inf")) -> TransferModel:
    """Fit a polynomial transfer model of the given degree to samples.

    Degree 1 yields an ideal-linear model; higher degrees yield a
    fitted-polynomial model (the hook for curves extracted from external
    circuit-simulator data).
    """
    if degree < 1:
        raise ValidationError("transfer fit degree must be >= 1")
    if degree == 1:
        fit = fit_transfer(samples)
        lo = min(clamp_lo, fit.intercept)
        hi = max(clamp_hi, fit.intercept)
        return TransferModel(
            kind=IDEAL_LINEAR,
            slope=fit.slope,
            intercept=fit.intercept,
            clamp_lo=lo,
            clamp_hi=hi,
        )
    arr = np.asarray(list(samples), dtype=float)
    if arr.shape[0] <= degree:
        raise FitError(f"need more than {degree} samples for a degree-{degree} fit")
    product = arr[:, 0] * arr[:, 1]
    if np.ptp(product) == 0:
        raise FitError("all sample abscissae identical; fit is degenerate")
    coeffs = np.polyfit(product, arr[:, 2], degree)
    intercept = float(coeffs[-1])
    lo = min(clamp_lo, intercept)
    hi = max(clamp_hi, intercept)
    return TransferModel(
        kind=FITTED_POLYNOMIAL,
        slope=float(coeffs[-2]),
        intercept=intercept,
        clamp_lo=lo,
        clamp_hi=hi,
        coeffs=tuple(float(c) for c in coeffs),
    )
