"""Binary file formats for trained models and channel-estimate datasets.

Both formats are little-endian with a fixed magic and version, payload arrays
in float32, and a human-readable JSON sidecar written next to the binary
(path + ".json").  The sidecar is informative; the binary alone is enough to
reload.  Structural problems on load raise DataError.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

from .autoencoder import MlpModel
from .detector import QuantizerCalibration, ThresholdSpec
from .errors import DataError

MODEL_MAGIC = b"UWBAE1"
DATASET_MAGIC = b"UWBCIR"
FORMAT_VERSION = 1

_STAT_CODES = {"max": 0, "p99": 1, "p95": 2}
_STAT_NAMES = {v: k for k, v in _STAT_CODES.items()}
_DISABLED_U32 = 0xFFFFFFFF


def _write_sidecar(path: str, payload: dict) -> None:
    with open(path + ".json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_sidecar(path: str) -> dict:
    try:
        with open(path + ".json", "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError):
        return {}


def save_model(path: str, model: MlpModel,
               calibration: QuantizerCalibration | None = None,
               threshold: ThresholdSpec | None = None,
               meta: dict | None = None) -> None:
    """Write the model (weights float32) and optional detector calibration."""
    if (calibration is None) != (threshold is None):
        raise ValueError("calibration and threshold must be saved together")
    dims = model.layer_dims
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<H", FORMAT_VERSION))
        fh.write(struct.pack("<I", len(dims) - 1))
        fh.write(struct.pack(f"<{len(dims)}I", *dims))
        fh.write(struct.pack("<I", model.latent_index))
        for w, b in zip(model.weights, model.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f4").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f4").tobytes())
        if calibration is None:
            fh.write(struct.pack("<B", 0))
        else:
            if calibration.dim != model.latent_dim:
                raise ValueError("calibration width does not match the latent layer")
            fh.write(struct.pack("<B", 1))
            bounds = np.empty((calibration.dim, 2), dtype="<f4")
            bounds[:, 0] = calibration.lo
            bounds[:, 1] = calibration.hi
            fh.write(bounds.tobytes())
            fh.write(struct.pack("<B", calibration.q))
            fh.write(struct.pack("<f", threshold.alpha_t))
            fh.write(struct.pack("<I", threshold.t_h))
            t = threshold.threshold
            fh.write(struct.pack("<I", _DISABLED_U32 if t < 0 else t))
            fh.write(struct.pack("<B", _STAT_CODES[threshold.statistic]))

    sidecar = {
        "format": "autoencoder-model",
        "version": FORMAT_VERSION,
        "layer_dims": list(dims),
        "latent_index": model.latent_index,
        "has_calibration": calibration is not None,
    }
    if calibration is not None:
        sidecar["quantizer_bits"] = calibration.q
        sidecar["alpha_t"] = threshold.alpha_t
        sidecar["t_h"] = threshold.t_h
        sidecar["threshold"] = threshold.threshold
        sidecar["threshold_statistic"] = threshold.statistic
    sidecar.update(meta or {})
    _write_sidecar(path, sidecar)


class _Reader:
    def __init__(self, path: str):
        try:
            with open(path, "rb") as fh:
                self.buf = fh.read()
        except OSError as exc:
            raise DataError(f"cannot read {path}: {exc}") from exc
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise DataError(f"{self.path}: truncated file")
        out = self.buf[self.pos: self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        vals = struct.unpack(fmt, self.take(struct.calcsize(fmt)))
        return vals[0] if len(vals) == 1 else vals

    def array(self, count: int, shape: tuple) -> np.ndarray:
        raw = self.take(4 * count)
        return np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(shape)

    def done(self) -> None:
        if self.pos != len(self.buf):
            raise DataError(f"{self.path}: {len(self.buf) - self.pos} trailing bytes")


def load_model(path: str) -> tuple[MlpModel, QuantizerCalibration | None,
                                   ThresholdSpec | None, dict]:
    """Read a saved model; returns (model, calibration, threshold, sidecar meta)."""
    r = _Reader(path)
    if r.take(len(MODEL_MAGIC)) != MODEL_MAGIC:
        raise DataError(f"{path}: not a model file (bad magic)")
    version = r.unpack("<H")
    if version != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported model version {version}")
    n_layers = r.unpack("<I")
    if not (1 <= n_layers <= 1024):
        raise DataError(f"{path}: implausible layer count {n_layers}")
    dims = r.unpack(f"<{n_layers + 1}I")
    dims = (dims,) if isinstance(dims, int) else dims
    latent_index = r.unpack("<I")
    weights, biases = [], []
    for l in range(n_layers):
        j, i = dims[l + 1], dims[l]
        weights.append(r.array(j * i, (j, i)))
        biases.append(r.array(j, (j,)))
    try:
        model = MlpModel(dims, weights, biases, latent_index)
    except Exception as exc:
        raise DataError(f"{path}: inconsistent model structure: {exc}") from exc

    calibration = threshold = None
    if r.unpack("<B"):
        d = model.latent_dim
        bounds = r.array(2 * d, (d, 2))
        q = r.unpack("<B")
        alpha_t = r.unpack("<f")
        t_h = r.unpack("<I")
        t_raw = r.unpack("<I")
        statistic = _STAT_NAMES.get(r.unpack("<B"))
        if statistic is None:
            raise DataError(f"{path}: unknown threshold statistic code")
        try:
            calibration = QuantizerCalibration(bounds[:, 0].astype(np.float64),
                                               bounds[:, 1].astype(np.float64), int(q))
            threshold = ThresholdSpec(float(alpha_t), int(t_h),
                                      -1 if t_raw == _DISABLED_U32 else int(t_raw),
                                      statistic)
        except Exception as exc:
            raise DataError(f"{path}: bad calibration block: {exc}") from exc
    r.done()
    return model, calibration, threshold, _read_sidecar(path)


def save_dataset(path: str, pairs: np.ndarray, meta: dict | None = None) -> None:
    """Write paired channel estimates, shape (n, 2, dim), as float32."""
    pairs = np.asarray(pairs, dtype=np.float32)
    if pairs.ndim != 3 or pairs.shape[1] != 2:
        raise ValueError(f"pairs must have shape (n, 2, dim), got {pairs.shape}")
    n, _, dim = pairs.shape
    with open(path, "wb") as fh:
        fh.write(DATASET_MAGIC)
        fh.write(struct.pack("<H", FORMAT_VERSION))
        fh.write(struct.pack("<I", n))
        fh.write(struct.pack("<I", dim))
        fh.write(np.ascontiguousarray(pairs, dtype="<f4").tobytes())
    sidecar = {"format": "cir-dataset", "version": FORMAT_VERSION,
               "n_pairs": n, "dim": dim}
    sidecar.update(meta or {})
    _write_sidecar(path, sidecar)


def load_dataset(path: str) -> tuple[np.ndarray, dict]:
    """Read a dataset file; returns (pairs (n, 2, dim) float32, sidecar meta)."""
    r = _Reader(path)
    if r.take(len(DATASET_MAGIC)) != DATASET_MAGIC:
        raise DataError(f"{path}: not a dataset file (bad magic)")
    version = r.unpack("<H")
    if version != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported dataset version {version}")
    n = r.unpack("<I")
    dim = r.unpack("<I")
    if dim < 1:
        raise DataError(f"{path}: bad dimension {dim}")
    pairs = r.array(n * 2 * dim, (n, 2, dim))
    r.done()
    return pairs, _read_sidecar(path)


def file_exists(path: str) -> bool:
    return os.path.isfile(path)
