"""Receiver-side channel estimation, first-path search, and two-way ranging math.

The channel impulse response is estimated by full cross-correlation against
the clean timestamp-sequence template.  A fixed window is cut so that the
global correlation peak always lands at index ``btw_samples``; the leading
edge is then the earliest back-search tap that clears both a
relative-to-peak and a peak-to-average power test.  Timestamps live on the
receive sample grid and feed the double-sided two-way ranging combination.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import ConfigError, NoSignalError
from .frames import FrameLayout, Waveform

SPEED_OF_LIGHT = 299_792_458.0  # m/s

DEFAULT_CIR_WINDOW = 700


class CirSource(enum.Enum):
    PREAMBLE = "preamble"
    STS = "sts"


@dataclass(frozen=True)
class EdgeParams:
    """Leading-edge search settings.

    btw_samples: how far before the global peak the search may reach;
    mpep: minimum tap height relative to the peak;
    papr: minimum tap power relative to the window-mean power.
    """

    btw_samples: int = 400
    mpep: float = 0.5
    papr: float = 2.0

    def __post_init__(self) -> None:
        if self.btw_samples < 0:
            raise ConfigError("btw_samples must be >= 0")
        if not (0.0 < self.mpep <= 1.0):
            raise ConfigError("mpep must be in (0, 1]")
        if self.papr <= 0:
            raise ConfigError("papr must be positive")


@dataclass
class CirEstimate:
    """Windowed, peak-normalized magnitude estimate of the channel response.

    ``window_start`` is the correlation lag of ``taps[0]`` relative to the
    transmitter's buffer origin, so lag ``window_start + i`` is the arrival
    time (in samples) of the path behind tap ``i``.
    """

    taps: np.ndarray  # float64, peak value exactly 1
    window_start: int
    source: CirSource = CirSource.STS

    def __post_init__(self) -> None:
        self.taps = np.asarray(self.taps, dtype=np.float64)
        if self.taps.ndim != 1:
            raise ValueError("taps must be one-dimensional")


def estimate_cir(received: Waveform, template: Waveform, window: int = DEFAULT_CIR_WINDOW,
                 btw_samples: int = 400, source: CirSource = CirSource.STS) -> CirEstimate:
    """Correlate against the template and cut a fixed window around the peak.

    The window starts ``btw_samples`` before the global magnitude peak and is
    zero-padded where it overruns the correlation support, so the peak sits at
    index ``btw_samples`` in every estimate and ``taps[btw_samples] == 1``.
    """
    if window <= btw_samples:
        raise ConfigError("window must exceed btw_samples")
    if len(received.samples) == 0 or len(template.samples) == 0:
        raise NoSignalError("empty waveform")
    if abs(received.sample_rate_hz - template.sample_rate_hz) > 1e-6 * template.sample_rate_hz:
        raise ConfigError("received and template sample rates differ")

    corr = fftconvolve(received.samples, np.conj(template.samples[::-1]), mode="full")
    mag = np.abs(corr)
    peak = int(np.argmax(mag))
    peak_val = mag[peak]
    if peak_val <= 0:
        raise NoSignalError("no correlation energy")

    start = peak - btw_samples
    taps = np.zeros(window, dtype=np.float64)
    lo = max(start, 0)
    hi = min(start + window, len(mag))
    taps[lo - start: hi - start] = mag[lo:hi] / peak_val
    # lag of full-correlation index i is i - (len(template) - 1)
    window_start = start - (len(template.samples) - 1)
    return CirEstimate(taps, window_start, source)


def leading_edge(c: CirEstimate, p: EdgeParams) -> int:
    """Index of the first path inside the estimate window.

    Scans ascending from ``btw_samples`` before the window peak; a tap
    qualifies when it is at least ``mpep`` of the peak and its power is at
    least ``papr`` times the window-mean tap power.  Both tests are ratios,
    so the result is invariant under uniform scaling of the taps.  Falls
    back to the peak index when nothing earlier qualifies (the peak itself
    always does vs mpep).
    """
    m = int(np.argmax(c.taps))
    mean_power = float(np.mean(c.taps ** 2))
    floor = p.papr * mean_power
    height = p.mpep * c.taps[m]
    for i in range(max(0, m - p.btw_samples), m + 1):
        if c.taps[i] >= height and c.taps[i] ** 2 >= floor:
            return i
    return m


def timestamp(received: Waveform, template: Waveform, layout: FrameLayout,
              p: EdgeParams, window: int = DEFAULT_CIR_WINDOW) -> float:
    """First-path arrival of the STS field, in seconds on the receive clock.

    The returned time is relative to the instant the transmitter's buffer
    origin would arrive over a zero-length channel, i.e. it equals propagation
    delay plus the in-frame STS offset removed.
    """
    est = estimate_cir(received, template, window, p.btw_samples)
    i = leading_edge(est, p)
    arrival_samples = est.window_start + i - layout.sts_start
    return arrival_samples / received.sample_rate_hz


def first_path_sample(received: Waveform, template: Waveform, layout: FrameLayout,
                      p: EdgeParams, window: int = DEFAULT_CIR_WINDOW
                      ) -> tuple[CirEstimate, int]:
    """One-pass variant of :func:`timestamp` that also returns the estimate.

    Returns the CIR estimate and the arrival expressed in integer samples
    (propagation delay on the grid, STS offset removed).
    """
    est = estimate_cir(received, template, window, p.btw_samples)
    i = leading_edge(est, p)
    return est, est.window_start + i - layout.sts_start


@dataclass(frozen=True)
class RoundTimes:
    """The four double-sided two-way ranging intervals, in seconds."""

    t_round1: float
    t_reply1: float
    t_round2: float
    t_reply2: float

    def __post_init__(self) -> None:
        for name in ("t_round1", "t_reply1", "t_round2", "t_reply2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


def ds_twr_distance(t: RoundTimes) -> float:
    """Distance from the double-sided combination of the four intervals.

    d = c * (t_round1*t_round2 - t_reply1*t_reply2)
          / (t_round1 + t_round2 + t_reply1 + t_reply2)

    The combination cancels first-order clock-offset errors; a non-positive
    denominator means the intervals cannot have come from a real round.
    """
    denom = t.t_round1 + t.t_round2 + t.t_reply1 + t.t_reply2
    if denom <= 0:
        raise ValueError("interval sum must be positive")
    tof = (t.t_round1 * t.t_round2 - t.t_reply1 * t.t_reply2) / denom
    return SPEED_OF_LIGHT * tof
