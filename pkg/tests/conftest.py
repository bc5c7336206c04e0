import numpy as np
import pytest

from ctia_ipc.adc import AdcConfig
from ctia_ipc.mapper import BnParams, ConvSpec, fuse_and_quantize
from ctia_ipc.pipeline import ChainConfig
from ctia_ipc.pixel import PixelParams
from ctia_ipc.pixel_array import ArrayConfig
from ctia_ipc.wtc import CounterConfig


@pytest.fixture
def pixel():
    return PixelParams()


@pytest.fixture
def wtc_cfg():
    return CounterConfig()


@pytest.fixture
def adc_cfg():
    return AdcConfig()


def small_chain(rows=64, cols=64):
    return ChainConfig(
        pixel=PixelParams(),
        wtc=CounterConfig(),
        array=ArrayConfig(rows=rows, cols=cols),
        adc=AdcConfig(),
    )


@pytest.fixture
def chain():
    return small_chain()


def random_layer(rng, spec: ConvSpec, beta_bias=0.0):
    """Random signed weights and BN params, fused and quantized."""
    weights = rng.normal(size=(spec.c_o, spec.c_in, spec.k, spec.k))
    bn = BnParams(
        gamma=rng.uniform(0.5, 2.0, spec.c_o),
        beta=rng.normal(size=spec.c_o) * 0.2 + beta_bias,
        mu=rng.normal(size=spec.c_o) * 0.2,
        sigma_sq=rng.uniform(0.5, 2.0, spec.c_o),
        epsilon=1e-5,
    )
    return weights, bn, fuse_and_quantize(weights, bn, spec.mag_max)


def random_frame(rng, rows=64, cols=64):
    return rng.integers(0, 65536, size=(rows, cols), dtype=np.uint16)
