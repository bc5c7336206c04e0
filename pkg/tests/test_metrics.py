import json

import numpy as np
import pytest

from ctia_ipc.errors import ValidationError
from ctia_ipc.mapper import ConvSpec, build_schedule
from ctia_ipc.metrics import (
    MismatchSpec,
    bandwidth_reduction,
    default_cycle_time,
    energy_estimate,
    linearity_sweep,
    metrics_report,
    monte_carlo,
    op_count,
)
from ctia_ipc.pixel import fit_transfer



class TestBandwidthReduction:
    def test_default_config_reproduces_headline_figure(self):
        spec = ConvSpec()
        br_printed, br_bits = bandwidth_reduction(spec, 1024, 1280)
        # Long-form oracle: (1280*1024*4 elements * 12 bits) over
        # (319*255 pooled nodes * 16 channels * 4 bits).
        expected_bits = (1280 * 1024 * 4 * 12) / (319 * 255 * 16 * 4)
        assert br_bits == pytest.approx(expected_bits, rel=1e-12)
        assert abs(br_bits - 12.08) <= 0.01
        # The closed form evaluates to something entirely different; both
        # are reported so the discrepancy stays visible.
        expected_printed = (1280 * 1024 * 4) / (637 * 509 * 16) * 0.75 * (12 / 4) * 0.25
        assert br_printed == pytest.approx(expected_printed, rel=1e-12)

    def test_passthrough_config(self):
        spec = ConvSpec(k=1, s=1, p=0, c_o=4, n_b=12, p_s=1)
        _, br_bits = bandwidth_reduction(spec, 16, 16)
        assert br_bits == pytest.approx(1.0)

    def test_scale_consistency(self):
        spec = ConvSpec()
        _, base = bandwidth_reduction(spec, 1024, 1280)
        _, doubled = bandwidth_reduction(spec, 2048, 2560)
        assert abs(doubled - base) / base < 0.01

    def test_too_small_rejected(self):
        with pytest.raises(ValidationError):
            bandwidth_reduction(ConvSpec(), 4, 4)


class TestOpCount:
    def test_single_window(self):
        spec = ConvSpec(k=7, s=1, c_o=1)
        assert op_count(spec, 7, 7) == 2 * 49 * 4

    def test_default_frame(self):
        assert op_count(ConvSpec(), 1024, 1280) == 637 * 509 * 16 * 392

    def test_minimal(self):
        # k=1 keeps 2 ops per tap; the RGGB plane count stays at 4.
        spec = ConvSpec(k=1, s=1, c_o=1)
        assert op_count(spec, 1, 2) == 2 * 1 * 4 * 2

    def test_nested_loop_oracle(self):
        for rows, cols in ((16, 16), (32, 24), (64, 64)):
            spec = ConvSpec(k=5, s=2, c_o=3)
            counted = 0
            out_r = (rows - spec.k) // spec.s + 1
            out_c = (cols - spec.k) // spec.s + 1
            for _ in range(out_r):
                for _ in range(out_c):
                    for _ in range(spec.c_o):
                        counted += 2 * spec.k * spec.k * spec.c_in
            assert op_count(spec, rows, cols) == counted


class TestEnergyEstimate:
    def test_direct_product_example(self):
        # One cycle of 100 active pixels (5x5 window x 4 planes) at 1 uW and
        # 1 ms: energy = 100 * 1e-6 * 1e-3 * 2 = 2e-7 J.
        spec = ConvSpec(k=5, s=1, c_o=1, p_s=1)
        sched = build_schedule(spec, 5, 5)
        assert sched.n_cycles() == 1
        assert sched.total_active_pixels() == 100
        est = energy_estimate(spec, 5, 5, 1e-6, sched, 1e-3)
        assert est.energy == pytest.approx(2e-7, rel=1e-12)
        assert est.frame_time == pytest.approx(2e-3, rel=1e-12)

    def test_cycle_time_scaling(self):
        spec = ConvSpec()
        sched = build_schedule(spec, 64, 64)
        a = energy_estimate(spec, 64, 64, 3.26e-6, sched, 1e-4)
        b = energy_estimate(spec, 64, 64, 3.26e-6, sched, 2e-4)
        assert b.gops == pytest.approx(a.gops / 2, rel=1e-12)

    def test_default_cycle_time(self):
        assert default_cycle_time(1e-6, 0) == pytest.approx(79e-6)
        assert default_cycle_time(1e-6, 3) == pytest.approx((120 + 64) * 1e-6)

    def test_report_carries_reference_metadata(self):
        spec = ConvSpec()
        sched = build_schedule(spec, 64, 64)
        report = metrics_report(spec, 64, 64, sched, 3.26e-6, 79e-6)
        assert report.reference["paper_br"] == 12.08
        assert report.reference["paper_gops"] == 1.98e9
        assert report.reference["paper_gops_w"] == 3.39e9
        # Byte-for-byte deterministic serialization.
        a = json.dumps(report.to_dict(), sort_keys=True)
        b = json.dumps(
            metrics_report(spec, 64, 64, sched, 3.26e-6, 79e-6).to_dict(), sort_keys=True
        )
        assert a == b


class TestMonteCarlo:
    def test_zero_sigma_equals_nominal(self, chain):
        mm = MismatchSpec(trials=16, seed=3)
        result = monte_carlo(chain, mm)
        assert np.all(result.samples == result.nominal)
        assert result.std == 0.0

    def test_seed_determinism(self, chain):
        mm = MismatchSpec(sigma_cap=0.01, sigma_vrst=1e-4, sigma_gain=0.01, trials=64, seed=9)
        a = monte_carlo(chain, mm)
        b = monte_carlo(chain, mm)
        assert np.array_equal(a.samples, b.samples)

    def test_thread_count_invisible(self, chain, monkeypatch):
        mm = MismatchSpec(sigma_gain=0.01, trials=32, seed=5)
        monkeypatch.setenv("CTIA_IPC_THREADS", "1")
        a = monte_carlo(chain, mm)
        monkeypatch.setenv("CTIA_IPC_THREADS", "4")
        b = monte_carlo(chain, mm)
        assert np.array_equal(a.samples, b.samples)

    def test_mean_near_nominal(self, chain):
        mm = MismatchSpec(sigma_gain=0.01, trials=1000, seed=17)
        result = monte_carlo(chain, mm)
        bound = 3 * result.std / np.sqrt(mm.trials)
        assert abs(result.mean - result.nominal) <= bound

    def test_local_sigma_scales_std(self, chain):
        # Small-perturbation regime: std is linear in sigma.
        lo = monte_carlo(chain, MismatchSpec(sigma_gain=0.005, trials=10_000, seed=23))
        hi = monte_carlo(chain, MismatchSpec(sigma_gain=0.010, trials=10_000, seed=23))
        assert hi.std / lo.std == pytest.approx(2.0, rel=0.10)

    def test_invalid_spec(self):
        with pytest.raises(ValidationError):
            MismatchSpec(trials=0)
        with pytest.raises(ValidationError):
            MismatchSpec(sigma_cap=-0.1)


class TestLinearitySweep:
    def test_zero_row(self, chain):
        rows = linearity_sweep(chain, modes=("vs_product",), x_points=3)
        zero = [r for r in rows if r.w_norm == 0.0 and r.x_norm == 0.0]
        assert zero and all(r.v_adc_in == 0.0 and r.code == 0 for r in zero)

    def test_nominal_fit_quality(self, chain):
        rows = linearity_sweep(chain, modes=("vs_product",), x_points=9)
        fit = fit_transfer([(r.w_norm, r.x_norm, r.v_adc_in) for r in rows])
        assert fit.r_squared >= 0.999

    def test_multiwindow_preserves_linearity(self, chain):
        rows = linearity_sweep(chain, modes=("multiwindow",), x_points=5)
        for k in (3, 5, 7):
            sub = [(r.w_norm, r.x_norm, r.v_adc_in) for r in rows if r.k == k]
            assert sub
            assert fit_transfer(sub).r_squared >= 0.999

    def test_column_voltage_consistent(self, chain):
        rows = linearity_sweep(chain, modes=("multiwindow",), x_points=3)
        for r in rows:
            # k identical columns: v_adc_in = k * v_cbl / divider.
            assert r.v_adc_in == pytest.approx(r.k * r.v_cbl / chain.array.divider, rel=1e-9, abs=1e-18)
