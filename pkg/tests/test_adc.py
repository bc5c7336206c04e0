import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from ctia_ipc.adc import AdcConfig, cds_signed, maxpool, quantize, relu_requantize
from ctia_ipc.errors import StateError, ValidationError


class TestQuantize:
    def test_zero(self, adc_cfg):
        assert quantize(adc_cfg, 0.0) == 0

    def test_full_scale_clips(self, adc_cfg):
        assert quantize(adc_cfg, adc_cfg.v_fs) == 63
        assert quantize(adc_cfg, 10 * adc_cfg.v_fs) == 63

    def test_hand_example(self):
        # v_fs = 0.64 V -> lsb = 10 mV; 0.35 V -> code 35.
        cfg = AdcConfig(v_fs=0.64)
        assert cfg.lsb == pytest.approx(0.01)
        assert quantize(cfg, 0.35) == 35

    def test_negative_rejected(self, adc_cfg):
        with pytest.raises(StateError):
            quantize(adc_cfg, -0.01)

    @given(v=st.floats(0, 1.0), dv=st.floats(0, 0.5))
    @settings(max_examples=300)
    def test_monotone(self, v, dv):
        cfg = AdcConfig()
        assert quantize(cfg, v) <= quantize(cfg, v + dv)

    @given(v=st.floats(0, 0.6))
    @settings(max_examples=300)
    def test_one_lsb_step(self, v):
        cfg = AdcConfig()
        lo = quantize(cfg, v)
        hi = quantize(cfg, v + cfg.lsb)
        assert hi - lo in (0, 1) or hi == cfg.code_max

    def test_vectorized(self, adc_cfg):
        codes = quantize(adc_cfg, np.array([0.0, 0.005, 0.35, 1.0]))
        assert codes.tolist() == [0, 0, 35, 63]


class TestCdsSigned:
    def test_balanced_cancellation(self, adc_cfg):
        assert cds_signed(adc_cfg, 0.123, 0.123) == 0

    def test_two_quantize_oracle(self):
        cfg = AdcConfig(v_fs=0.64)
        assert cds_signed(cfg, 0.35, 0.10) == 35 - 10

    def test_bn_preload(self):
        cfg = AdcConfig(v_fs=0.64, bn_offset_codes=-5)
        assert cds_signed(cfg, 0.03, 0.0) == 3 - 5
        assert relu_requantize(cfg, cds_signed(cfg, 0.03, 0.0)) == 0

    @given(
        a=st.floats(0, 0.64),
        b=st.floats(0, 0.64),
        bn=st.integers(-64, 64),
    )
    @settings(max_examples=200)
    def test_antisymmetry(self, a, b, bn):
        cfg = AdcConfig(bn_offset_codes=bn)
        assert cds_signed(cfg, a, b) + cds_signed(cfg, b, a) == 2 * bn

    @given(a=st.floats(0, 0.62), b=st.floats(0, 0.62), bn=st.integers(-16, 16))
    @settings(max_examples=300)
    def test_within_one_lsb_of_ideal(self, a, b, bn):
        # Below saturation the signed code tracks the real difference.
        cfg = AdcConfig(bn_offset_codes=bn)
        code = cds_signed(cfg, a, b)
        ideal = (a - b) / cfg.lsb
        assert abs(code - ideal - bn) <= 1.0 + 1e-9


class TestReluRequantize:
    def test_relu(self, adc_cfg):
        assert relu_requantize(adc_cfg, -7) == 0

    def test_full_scale(self, adc_cfg):
        assert relu_requantize(adc_cfg, 63) == 15

    def test_shift_example(self, adc_cfg):
        assert relu_requantize(adc_cfg, 25) == 6

    def test_idempotent_after_reexpansion(self, adc_cfg):
        shift = adc_cfg.bits - adc_cfg.out_bits
        for code in range(-10, 70):
            value = relu_requantize(adc_cfg, code)
            assert relu_requantize(adc_cfg, value << shift) == value

    def test_grid(self, adc_cfg):
        out = relu_requantize(adc_cfg, np.array([[-3, 25], [63, 4]]))
        assert out.tolist() == [[0, 6], [15, 1]]


class TestMaxpool:
    def test_identity_stride(self):
        grid = np.arange(6).reshape(2, 3)
        assert np.array_equal(maxpool(grid, 1), grid)

    def test_window_max(self):
        assert maxpool(np.array([[1, 2], [3, 4]]), 2).tolist() == [[4]]

    def test_ceiling_dims(self):
        out = maxpool(np.zeros((637, 509), dtype=int), 2)
        assert out.shape == (319, 255)

    def test_ragged_edges_use_partial_window(self):
        grid = np.array([[1, 2, 9], [4, 5, 6]])
        out = maxpool(grid, 2)
        assert out.tolist() == [[5, 9]]

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            maxpool(np.zeros((0, 3)), 2)
        with pytest.raises(ValidationError):
            maxpool(np.zeros((2, 2)), 0)

    @given(
        grid=hnp.arrays(np.int64, hnp.array_shapes(min_dims=2, max_dims=2, min_side=1, max_side=12),
                        elements=st.integers(0, 63)),
        stride=st.integers(1, 4),
    )
    @settings(max_examples=200)
    def test_never_exceeds_input_max(self, grid, stride):
        assert maxpool(grid, stride).max() <= grid.max()

    @given(
        grid=hnp.arrays(np.int64, (5, 7), elements=st.integers(0, 63)),
        stride=st.integers(1, 3),
        shift=st.integers(0, 3),
    )
    @settings(max_examples=200)
    def test_commutes_with_monotone_map(self, grid, stride, shift):
        mapped_first = maxpool(grid >> shift, stride)
        pooled_first = maxpool(grid, stride) >> shift
        assert np.array_equal(mapped_first, pooled_first)
