"""Feature quantization, in-band fingerprint exchange format, and the decision rule.

Both sides quantize their latent features with shared per-dimension bounds,
Gray-code each level so neighbouring cells differ in one bit, and compare the
exchanged bit strings by Hamming distance.  The alarm threshold is a scaled
statistic of calibration distances collected under benign conditions.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError

SUPPORTED_BITS = (1, 2, 4, 8)
DEFAULT_BITS = 4
DEFAULT_ALPHA = 0.5
BOUND_PAD_FRACTION = 0.005  # widening per side, relative to the observed span
MIN_CALIBRATION_FEATURES = 100
MIN_CALIBRATION_PAIRS = 500
THRESHOLD_DISABLED = -1  # sentinel: never raise the alarm


class Decision(enum.Enum):
    NORMAL = "normal"
    ATTACKED = "attacked"


@dataclass
class QuantizerCalibration:
    """Per-dimension quantization bounds and the bit depth they serve."""

    lo: np.ndarray
    hi: np.ndarray
    q: int

    def __post_init__(self) -> None:
        self.lo = np.asarray(self.lo, dtype=np.float64)
        self.hi = np.asarray(self.hi, dtype=np.float64)
        if self.lo.shape != self.hi.shape or self.lo.ndim != 1:
            raise ConfigError("bounds must be matching one-dimensional arrays")
        if np.any(self.hi <= self.lo):
            raise ConfigError("upper bounds must exceed lower bounds")
        if self.q not in SUPPORTED_BITS:
            raise ConfigError(f"bits per dimension must be one of {SUPPORTED_BITS}")

    @property
    def dim(self) -> int:
        return len(self.lo)


@dataclass
class QuantizedFeature:
    """Gray-coded bit string: dimension-major, most significant bit first."""

    bits: np.ndarray  # uint8 values in {0, 1}, length dim * q
    q: int

    def __post_init__(self) -> None:
        self.bits = np.asarray(self.bits, dtype=np.uint8)
        if self.bits.ndim != 1 or len(self.bits) % self.q != 0:
            raise ConfigError("bit string length must be a multiple of q")
        if np.any(self.bits > 1):
            raise ConfigError("bits must be 0 or 1")


def gray_encode(level: int) -> int:
    return level ^ (level >> 1)


def gray_decode(code: int) -> int:
    level = 0
    while code:
        level ^= code
        code >>= 1
    return level


def calibrate_quantizer(features: np.ndarray, q: int = DEFAULT_BITS) -> QuantizerCalibration:
    """Per-dimension min/max over benign features, widened by 0.5% per side.

    A dimension with zero observed span gets a +-1e-6 band around its value
    (with a warning) so quantization stays defined.  Fewer than 100 feature
    vectors also warns; an empty input is an error.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] == 0:
        raise DataError("need a non-empty (n, dim) feature array")
    if features.shape[0] < MIN_CALIBRATION_FEATURES:
        warnings.warn(f"quantizer calibrated from only {features.shape[0]} features "
                      f"(recommended >= {MIN_CALIBRATION_FEATURES})", stacklevel=2)
    lo = features.min(axis=0)
    hi = features.max(axis=0)
    span = hi - lo
    degenerate = span <= 0
    if np.any(degenerate):
        warnings.warn(f"{int(degenerate.sum())} feature dimension(s) have zero span; "
                      "using a +-1e-6 band", stacklevel=2)
        lo = np.where(degenerate, lo - 1e-6, lo)
        hi = np.where(degenerate, hi + 1e-6, hi)
        span = hi - lo
    pad = BOUND_PAD_FRACTION * span
    return QuantizerCalibration(lo - pad, hi + pad, q)


def quantize(feature: np.ndarray, cal: QuantizerCalibration) -> QuantizedFeature:
    """Uniform levels over [lo, hi), Gray-coded, MSB-first per dimension.

    Values outside the calibrated bounds clamp to the edge cells.
    """
    v = np.asarray(feature, dtype=np.float64)
    if v.shape != (cal.dim,):
        raise DataError(f"feature must have shape ({cal.dim},), got {v.shape}")
    n_levels = 1 << cal.q
    frac = (v - cal.lo) / (cal.hi - cal.lo)
    levels = np.floor(frac * n_levels).astype(np.int64)
    levels = np.clip(levels, 0, n_levels - 1)
    codes = levels ^ (levels >> 1)
    shifts = np.arange(cal.q - 1, -1, -1)
    bits = ((codes[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
    return QuantizedFeature(bits.reshape(-1), cal.q)


def pack_bits(f: QuantizedFeature) -> bytes:
    """Big-endian byte packing of the bit string (zero-padded to a byte)."""
    return np.packbits(f.bits, bitorder="big").tobytes()


def unpack_bits(buf: bytes, n_bits: int, q: int) -> QuantizedFeature:
    if len(buf) * 8 < n_bits:
        raise DataError(f"{len(buf)} bytes cannot hold {n_bits} bits")
    bits = np.unpackbits(np.frombuffer(buf, dtype=np.uint8), bitorder="big")[:n_bits]
    return QuantizedFeature(bits.astype(np.uint8), q)


def hamming(a: QuantizedFeature, b: QuantizedFeature) -> int:
    """Number of differing bit positions; lengths and depths must match."""
    if a.q != b.q:
        raise ValueError(f"bit depths differ: {a.q} vs {b.q}")
    if len(a.bits) != len(b.bits):
        raise ValueError(f"bit string lengths differ: {len(a.bits)} vs {len(b.bits)}")
    return int(np.count_nonzero(a.bits != b.bits))


@dataclass(frozen=True)
class ThresholdSpec:
    """Alarm threshold T = ceil(alpha_t * t_h) with its calibration inputs.

    threshold == THRESHOLD_DISABLED means detection is off and every distance
    maps to a normal decision; threshold == 0 flags every round.
    """

    alpha_t: float
    t_h: int
    threshold: int
    statistic: str = "max"

    def __post_init__(self) -> None:
        if self.threshold != THRESHOLD_DISABLED and self.threshold < 0:
            raise ConfigError("threshold must be >= 0 or the disabled sentinel")


_STATISTICS = ("max", "p99", "p95")


def calibrate_threshold(distances, alpha_t: float = DEFAULT_ALPHA,
                        statistic: str = "max") -> ThresholdSpec:
    """Scale a benign-distance statistic into the alarm threshold.

    distances are Hamming distances between the two sides' fingerprints over
    attack-free calibration rounds.  t_h is their max (or the requested upper
    percentile); the alarm fires at T = ceil(alpha_t * t_h).  Fewer than 500
    distances warns; none at all is an error.
    """
    d = np.asarray(distances, dtype=np.int64)
    if d.ndim != 1 or len(d) == 0:
        raise DataError("need a non-empty vector of calibration distances")
    if np.any(d < 0):
        raise DataError("distances must be non-negative")
    if alpha_t <= 0:
        raise ConfigError("alpha_t must be positive")
    if statistic not in _STATISTICS:
        raise ConfigError(f"statistic must be one of {_STATISTICS}")
    if len(d) < MIN_CALIBRATION_PAIRS:
        warnings.warn(f"threshold calibrated from only {len(d)} distances "
                      f"(recommended >= {MIN_CALIBRATION_PAIRS})", stacklevel=2)
    if statistic == "max":
        t_h = int(d.max())
    else:
        pct = {"p99": 99.0, "p95": 95.0}[statistic]
        t_h = int(math.ceil(np.percentile(d, pct)))
    return ThresholdSpec(alpha_t, t_h, int(math.ceil(alpha_t * t_h)), statistic)


def decide(distance: int, spec: ThresholdSpec) -> Decision:
    """Attacked when the distance reaches the threshold (inclusive)."""
    if distance < 0:
        raise ValueError("distance must be non-negative")
    if spec.threshold == THRESHOLD_DISABLED:
        return Decision.NORMAL
    return Decision.ATTACKED if distance >= spec.threshold else Decision.NORMAL
