"""Command-line entry point.

    ctia-ipc-sim <mode> --config <path> [--seed N] [--out <dir>]

Modes: simulate, verify, sweep, montecarlo, metrics, export-transfer,
readout.  Exit codes: 0 success, 1 validation error, 2 verification
failure, 3 I/O error.  Every run writes a manifest.json carrying the
fully-resolved configuration, so artifacts are reproducible byte for byte
from the manifest alone.  CTIA_IPC_THREADS caps worker parallelism
(0 or unset = auto).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import formats
from .config import MODES, RunConfig, load_config, require_input
from .errors import (
    FormatError,
    SimError,
    ValidationError,
    VerificationError,
)
from .golden import compare_runs, golden_layer
from .mapper import build_schedule, fuse_and_quantize
from .metrics import linearity_sweep, metrics_report, monte_carlo
from .pipeline import simulate_layer, sweep_window_chain
from .pixel import fit_transfer, fit_transfer_model
from .pixel_array import ArrayConfig, MODE_READOUT, readout_frame

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_VERIFY = 2
EXIT_IO = 3

SWEEP_HEADER = ("mode", "k", "w_norm", "x_norm", "v_cbl", "v_adc_in", "code")
MC_HEADER = ("trial", "v_adc_in")
TRANSFER_HEADER = ("w_norm", "x_norm", "volts")


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors, which collides with the
    # verification-failure code; remap to the validation exit code.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(message)


def _write_manifest(cfg: RunConfig, mode: str, out_dir: str, artifacts: list, extra: dict | None = None) -> None:
    manifest = {
        "tool": "ctia-ipc-sim",
        "mode": mode,
        "seed": cfg.seed,
        "config": cfg.resolved(),
        "artifacts": sorted(artifacts),
    }
    if extra:
        manifest.update(extra)
    formats.write_json(os.path.join(out_dir, "manifest.json"), manifest)


def _load_sensor_frame(cfg: RunConfig) -> np.ndarray:
    frame = formats.load_pgm16(require_input(cfg.frame_path, "frame"))
    if frame.shape != (cfg.array.rows, cfg.array.cols):
        raise ValidationError(
            f"frame is {frame.shape[0]}x{frame.shape[1]} but the array is "
            f"{cfg.array.rows}x{cfg.array.cols}"
        )
    return frame


def _load_layer(cfg: RunConfig):
    weights, bn = formats.load_weights(require_input(cfg.weights_path, "weights"))
    if weights.shape != (cfg.conv.c_o, cfg.conv.c_in, cfg.conv.k, cfg.conv.k):
        raise ValidationError(
            f"weight document shape {weights.shape} does not match the conv spec "
            f"{(cfg.conv.c_o, cfg.conv.c_in, cfg.conv.k, cfg.conv.k)}"
        )
    return fuse_and_quantize(weights, bn, cfg.conv.mag_max)


def _run_simulate(cfg: RunConfig, out_dir: str) -> int:
    frame = _load_sensor_frame(cfg)
    fused = _load_layer(cfg)
    activations = simulate_layer(frame, fused, cfg.conv, cfg.chain())
    artifacts = []
    index = {"channels": [], "out_bits": cfg.adc.out_bits, "dims": list(activations.shape[1:])}
    for ch in range(activations.shape[0]):
        name = f"activations_ch{ch:02d}.pgm"
        formats.save_pgm16(os.path.join(out_dir, name), activations[ch].astype(np.uint16))
        index["channels"].append({"channel": ch, "file": name})
        artifacts.append(name)
    formats.write_json(os.path.join(out_dir, "activations_index.json"), index)
    artifacts.append("activations_index.json")
    _write_manifest(cfg, "simulate", out_dir, artifacts)
    return EXIT_OK


def _run_verify(cfg: RunConfig, out_dir: str) -> int:
    frame = _load_sensor_frame(cfg)
    fused = _load_layer(cfg)
    chain = cfg.chain()
    sim_out = simulate_layer(frame, fused, cfg.conv, chain)
    cal = chain.calibration(fused.mag_max)
    gold_out = golden_layer(frame, fused, cfg.conv, chain.adc, cal)
    report = compare_runs(sim_out, gold_out, cfg.verify_max_within)
    formats.write_json(os.path.join(out_dir, "verify_report.json"), report.to_dict())
    _write_manifest(cfg, "verify", out_dir, ["verify_report.json"])
    line = (
        f"verify: max|delta|={report.max_abs_delta} exact={report.fraction_exact:.6f} "
        f"within1={report.fraction_within_1:.6f} nodes={report.n_nodes} "
        f"-> {'PASS' if report.passed else 'FAIL'}"
    )
    print(line)
    return EXIT_OK if report.passed else EXIT_VERIFY


def _run_sweep(cfg: RunConfig, out_dir: str) -> int:
    rows = linearity_sweep(cfg.chain(), modes=cfg.sweep_modes, x_points=cfg.sweep_x_points)
    formats.write_csv(
        os.path.join(out_dir, "sweep.csv"),
        SWEEP_HEADER,
        ((r.mode, r.k, r.w_norm, r.x_norm, r.v_cbl, r.v_adc_in, r.code) for r in rows),
    )
    _write_manifest(cfg, "sweep", out_dir, ["sweep.csv"])
    return EXIT_OK


def _run_montecarlo(cfg: RunConfig, out_dir: str) -> int:
    result = monte_carlo(cfg.chain(), cfg.mismatch, k=cfg.conv.k)
    formats.write_csv(
        os.path.join(out_dir, "montecarlo.csv"),
        MC_HEADER,
        ((t, v) for t, v in enumerate(result.samples)),
    )
    summary = {
        "trials": int(result.samples.size),
        "nominal_v": result.nominal,
        "mean_v": result.mean,
        "std_v": result.std,
        "hist_counts": result.hist_counts.tolist(),
        "hist_edges": result.hist_edges.tolist(),
    }
    formats.write_json(os.path.join(out_dir, "montecarlo_summary.json"), summary)
    _write_manifest(cfg, "montecarlo", out_dir, ["montecarlo.csv", "montecarlo_summary.json"])
    return EXIT_OK


def _run_metrics(cfg: RunConfig, out_dir: str) -> int:
    schedule = build_schedule(cfg.conv, cfg.array.rows, cfg.array.cols)
    report = metrics_report(
        cfg.conv,
        cfg.array.rows,
        cfg.array.cols,
        schedule,
        cfg.power_per_pixel_w,
        cfg.cycle_time(),
    )
    formats.write_json(os.path.join(out_dir, "metrics.json"), report.to_dict())
    _write_manifest(cfg, "metrics", out_dir, ["metrics.json"])
    print(f"br_bits={report.br_bits:.4f} br_printed={report.br_printed:.4f}")
    return EXIT_OK


def _transfer_samples(cfg: RunConfig):
    if cfg.transfer_samples_csv:
        path = require_input(cfg.transfer_samples_csv, "transfer samples")
        return [tuple(row) for row in formats.read_csv(path, TRANSFER_HEADER)]
    # No external samples: sample the nominal single-unit chain.
    samples = []
    mag_max = cfg.conv.mag_max
    chain = cfg.chain()
    for mag in range(mag_max + 1):
        for x_norm in np.linspace(0.0, 1.0, cfg.transfer_grid_points):
            _, v_adc_in, _ = sweep_window_chain(chain, 1, mag, float(x_norm))
            samples.append((mag / mag_max, float(x_norm), v_adc_in))
    return samples


def _run_export_transfer(cfg: RunConfig, out_dir: str) -> int:
    samples = _transfer_samples(cfg)
    fit = fit_transfer(samples)
    model = fit_transfer_model(samples, degree=cfg.transfer_fit_degree)
    formats.write_csv(os.path.join(out_dir, "transfer_samples.csv"), TRANSFER_HEADER, samples)
    doc = {
        "kind": model.kind,
        "slope": model.slope,
        "intercept": model.intercept,
        "clamp_lo": model.clamp_lo,
        "clamp_hi": model.clamp_hi,
        "coeffs": list(model.coeffs),
        "fit": {
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "residual_rms": fit.residual_rms,
        },
    }
    formats.write_json(os.path.join(out_dir, "transfer_model.json"), doc)
    _write_manifest(cfg, "export-transfer", out_dir, ["transfer_samples.csv", "transfer_model.json"])
    return EXIT_OK


def _run_readout(cfg: RunConfig, out_dir: str) -> int:
    raw = _load_sensor_frame(cfg)
    photocurrents = formats.frame_to_photocurrents(raw, cfg.pixel.i_max)
    array_cfg = ArrayConfig(
        rows=cfg.array.rows,
        cols=cfg.array.cols,
        c1=cfg.array.c1,
        c2=cfg.array.c2,
        c_f_acc=cfg.array.c_f_acc,
        mode=MODE_READOUT,
    )
    volts = readout_frame(array_cfg, cfg.pixel, photocurrents, cfg.readout_exposure())
    # Voltages are clamped at headroom, so headroom spans the full code range.
    codes = np.rint(volts / cfg.pixel.headroom * 65535).astype(np.uint16)
    formats.save_pgm16(os.path.join(out_dir, "readout.pgm"), codes)
    _write_manifest(
        cfg,
        "readout",
        out_dir,
        ["readout.pgm"],
        extra={"readout_volts_per_count": cfg.pixel.headroom / 65535},
    )
    return EXIT_OK


_RUNNERS = {
    "simulate": _run_simulate,
    "verify": _run_verify,
    "sweep": _run_sweep,
    "montecarlo": _run_montecarlo,
    "metrics": _run_metrics,
    "export-transfer": _run_export_transfer,
    "readout": _run_readout,
}


def run(cfg: RunConfig, mode: str) -> int:
    if mode not in _RUNNERS:
        raise ValidationError(f"unknown mode {mode!r}; choose from {', '.join(MODES)}")
    out_dir = cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    return _RUNNERS[mode](cfg, out_dir)


def main(argv=None) -> int:
    parser = _Parser(
        prog="ctia-ipc-sim",
        description="Behavioral simulator for a CTIA-based in-pixel computing accelerator",
    )
    parser.add_argument("mode", choices=MODES, help="run mode")
    parser.add_argument("--config", help="JSON run configuration (defaults when omitted)")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", help="override the output directory")
    try:
        args = parser.parse_args(argv)
        cfg = load_config(args.config, seed_override=args.seed, out_override=args.out)
        return run(cfg, args.mode)
    except FormatError as exc:
        print(f"ctia-ipc-sim: format error: {exc}", file=sys.stderr)
        return EXIT_IO
    except VerificationError as exc:
        print(f"ctia-ipc-sim: verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except SimError as exc:
        print(f"ctia-ipc-sim: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"ctia-ipc-sim: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
