"""File formats: 16-bit PGM frames, JSON weight documents, CSV tables.

Every writer goes through a temporary file renamed into place on success,
so a failed run never leaves a partial artifact behind.  Numeric text
output uses repr formatting (period decimal separator, shortest
round-trip), which keeps artifacts byte-reproducible and locale-free.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .errors import FormatError, ValidationError
from .mapper import BnParams
from .pixel_array import N_CHANNELS

PGM_MAXVAL = 65535
_WHITESPACE = b" \t\r\n\x0b\x0c"


def atomic_write_bytes(path, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


# ---------------------------------------------------------------------------
# 16-bit binary PGM (magic P5, maxval 65535, big-endian samples)
# ---------------------------------------------------------------------------

def _next_token(data: bytes, pos: int):
    """Skip whitespace/comments, return (token, token_offset, next_pos)."""
    n = len(data)
    while pos < n:
        byte = data[pos]
        if byte in _WHITESPACE:
            pos += 1
        elif byte == ord("#"):
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
        else:
            break
    if pos >= n:
        raise FormatError("unexpected end of PGM header", pos)
    start = pos
    while pos < n and data[pos] not in _WHITESPACE:
        pos += 1
    return data[start:pos], start, pos


def _int_token(data: bytes, pos: int, what: str):
    token, offset, pos = _next_token(data, pos)
    try:
        value = int(token)
    except ValueError:
        raise FormatError(f"PGM {what} is not an integer: {token!r}", offset)
    return value, offset, pos


def load_pgm16(path) -> np.ndarray:
    """Read a 16-bit binary PGM into a (rows, cols) uint16 array."""
    with open(path, "rb") as handle:
        data = handle.read()
    token, offset, pos = _next_token(data, 0)
    if token != b"P5":
        raise FormatError(f"bad PGM magic {token!r}, expected P5", offset)
    width, offset, pos = _int_token(data, pos, "width")
    if width < 1:
        raise FormatError(f"PGM width must be >= 1, got {width}", offset)
    height, offset, pos = _int_token(data, pos, "height")
    if height < 1:
        raise FormatError(f"PGM height must be >= 1, got {height}", offset)
    maxval, offset, pos = _int_token(data, pos, "maxval")
    if maxval != PGM_MAXVAL:
        raise FormatError(f"PGM maxval must be {PGM_MAXVAL} (16-bit), got {maxval}", offset)
    if pos >= len(data) or data[pos] not in _WHITESPACE:
        raise FormatError("PGM header must end with a whitespace byte", pos)
    pos += 1
    expected = width * height * 2
    raster = data[pos : pos + expected]
    if len(raster) < expected:
        raise FormatError(
            f"truncated PGM raster: expected {expected} bytes, found {len(raster)}",
            pos + len(raster),
        )
    samples = np.frombuffer(raster, dtype=">u2").reshape(height, width)
    return samples.astype(np.uint16)


def save_pgm16(path, samples) -> None:
    arr = np.asarray(samples)
    if arr.ndim != 2:
        raise ValidationError("PGM frames are 2-D")
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValidationError("PGM samples must be integers")
    if np.any(arr < 0) or np.any(arr > PGM_MAXVAL):
        raise ValidationError(f"PGM samples must be in [0, {PGM_MAXVAL}]")
    rows, cols = arr.shape
    header = f"P5\n{cols} {rows}\n{PGM_MAXVAL}\n".encode("ascii")
    atomic_write_bytes(path, header + arr.astype(">u2").tobytes())


def frame_to_photocurrents(raw, i_max: float) -> np.ndarray:
    """Per-pixel photocurrents: i_max * raw / 65535 (full scale maps to
    exactly i_max)."""
    return (np.asarray(raw).astype(float) / PGM_MAXVAL) * i_max


def load_frame(path, i_max: float) -> np.ndarray:
    """Bayer frame as per-pixel photocurrents."""
    return frame_to_photocurrents(load_pgm16(path), i_max)


# ---------------------------------------------------------------------------
# Weight + BN document (JSON)
# ---------------------------------------------------------------------------

def load_weights(path):
    """Load (weights, BnParams) from a weight document.

    Validation reports every violation found, not only the first.
    """
    try:
        with open(path, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
    except json.JSONDecodeError as exc:
        raise FormatError(f"weight document is not valid JSON: {exc}", exc.pos)
    problems = []
    if not isinstance(doc, dict):
        raise ValidationError("weight document must be a JSON object")
    shape = doc.get("shape")
    if not isinstance(shape, dict):
        problems.append("missing or invalid 'shape' object")
        shape = {}
    dims = {}
    for name in ("c_o", "c_in", "k"):
        value = shape.get(name)
        if not isinstance(value, int) or value < 1:
            problems.append(f"shape.{name} must be a positive integer, got {value!r}")
        else:
            dims[name] = value
    if dims.get("c_in", N_CHANNELS) != N_CHANNELS:
        problems.append(f"shape.c_in must be {N_CHANNELS} (RGGB planes)")
    weights = None
    if "weights" not in doc:
        problems.append("missing 'weights' array")
    elif len(dims) == 3:
        expected = (dims["c_o"], dims["c_in"], dims["k"], dims["k"])
        try:
            weights = np.asarray(doc["weights"], dtype=float)
        except (TypeError, ValueError):
            problems.append("weights are not a rectangular numeric array")
        if weights is not None and weights.shape != expected:
            problems.append(f"weights shape {weights.shape} != declared {expected}")
            weights = None
        if weights is not None:
            bad = np.argwhere(~np.isfinite(weights))
            for idx in bad:
                ch, plane, i, j = (int(v) for v in idx)
                problems.append(
                    f"non-finite weight at channel {ch}, plane {plane}, tap ({i}, {j})"
                )
            if bad.size:
                weights = None
    bn_doc = doc.get("bn")
    bn = None
    if not isinstance(bn_doc, dict):
        problems.append("missing or invalid 'bn' object")
    else:
        arrays = {}
        for name in ("gamma", "beta", "mu", "sigma_sq"):
            value = bn_doc.get(name)
            try:
                arr = np.asarray(value, dtype=float)
            except (TypeError, ValueError):
                problems.append(f"bn.{name} is not a numeric array")
                continue
            if arr.ndim != 1 or ("c_o" in dims and arr.shape != (dims["c_o"],)):
                problems.append(
                    f"bn.{name} must be a length-c_o array, got shape {arr.shape}"
                )
                continue
            if not np.all(np.isfinite(arr)):
                problems.append(f"bn.{name} contains non-finite values")
                continue
            arrays[name] = arr
        epsilon = bn_doc.get("epsilon")
        if not isinstance(epsilon, (int, float)) or not epsilon > 0:
            problems.append(f"bn.epsilon must be a positive number, got {epsilon!r}")
        elif len(arrays) == 4:
            if np.any(arrays["sigma_sq"] < 0):
                problems.append("bn.sigma_sq must be >= 0")
            else:
                bn = BnParams(epsilon=float(epsilon), **arrays)
    if problems:
        raise ValidationError(
            "invalid weight document:\n  " + "\n  ".join(problems)
        )
    return weights, bn


def save_weights(path, weights, bn: BnParams) -> None:
    arr = np.asarray(weights, dtype=float)
    if arr.ndim != 4 or arr.shape[1] != N_CHANNELS or arr.shape[2] != arr.shape[3]:
        raise ValidationError(f"weights must be (c_o, {N_CHANNELS}, k, k), got {arr.shape}")
    doc = {
        "shape": {"c_o": arr.shape[0], "c_in": arr.shape[1], "k": arr.shape[2]},
        "weights": arr.tolist(),
        "bn": {
            "gamma": bn.gamma.tolist(),
            "beta": bn.beta.tolist(),
            "mu": bn.mu.tolist(),
            "sigma_sq": bn.sigma_sq.tolist(),
            "epsilon": bn.epsilon,
        },
    }
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# CSV / JSON artifacts
# ---------------------------------------------------------------------------

def _format_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    width = len(header)
    for row in rows:
        cells = [_format_cell(v) for v in row]
        if len(cells) != width:
            raise ValidationError(f"CSV row width {len(cells)} != header width {width}")
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_csv(path, expected_header):
    """Read a CSV written by write_csv; header must match exactly."""
    with open(path, "r", encoding="utf-8") as handle:
        lines = [line.rstrip("\n") for line in handle]
    if not lines:
        raise FormatError("empty CSV file", 0)
    header = lines[0].split(",")
    if header != list(expected_header):
        raise FormatError(f"CSV header {header} != expected {list(expected_header)}", 0)
    rows = []
    for line in lines[1:]:
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise FormatError(f"CSV row width {len(cells)} != header width {len(header)}")
        rows.append([float(cell) for cell in cells])
    return rows


def write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")
