"""Indoor multipath channel: cluster/ray impulse responses, reciprocity, propagation.

The diffuse part follows the classic cluster/ray formulation for the indoor
LOS parameter set (cluster rate 0.047/ns, ray rate 1.54/ns, cluster decay
22.61 ns, ray decay 12.53 ns, lognormal Nakagami m-factor).  A deterministic
direct-path tap with a configurable share of the total energy sits at the
geometric delay, replacing any diffuse arrivals within the pulse resolution
(they are unresolvable from the direct path at the receiver bandwidth);
without it a faded first path can drop below the leading-edge threshold and
break noise-free ranging exactness.  A majority share makes the direct path
the strongest tap of every realization, which matters for reciprocity checks:
both link directions then anchor their estimation windows on the same tap, so
fingerprint distances stay small under benign noise.

Tap delays beyond the direct path are quantized to the sample grid at draw
time, so propagation is an integer-shift FIR plus white Gaussian noise of unit
reference power.  SNR is defined over the timestamp-sequence field only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .errors import ConfigError
from .frames import Waveform

NOISE_REF_POWER = 1.0  # per-sample complex noise power all budgets are scaled against


@dataclass(frozen=True)
class ChannelModelParams:
    """Cluster/ray model parameters plus the deterministic direct-path share."""

    cluster_rate_per_ns: float = 0.047
    ray_rate_per_ns: float = 1.54
    cluster_decay_ns: float = 22.61
    ray_decay_ns: float = 12.53
    mean_clusters: float = 3.0
    nakagami_m_mu_db: float = 0.67
    nakagami_m_sigma_db: float = 0.28
    los_energy_fraction: float = 0.55
    unresolvable_excess_ns: float = 2.0
    max_excess_delay_ns: float = 250.0
    grid_rate_hz: float = 2.0e9

    def __post_init__(self) -> None:
        if not (0.0 < self.los_energy_fraction < 1.0):
            raise ConfigError("los energy fraction must be in (0, 1)")
        if self.unresolvable_excess_ns < 0:
            raise ConfigError("unresolvable excess delay must be >= 0")
        if self.unresolvable_excess_ns >= self.max_excess_delay_ns:
            raise ConfigError("unresolvable excess delay must be below the maximum")
        if self.cluster_rate_per_ns <= 0 or self.ray_rate_per_ns <= 0:
            raise ConfigError("arrival rates must be positive")
        if self.cluster_decay_ns <= 0 or self.ray_decay_ns <= 0:
            raise ConfigError("decay constants must be positive")
        if self.mean_clusters < 1.0:
            raise ConfigError("mean cluster count must be >= 1")
        if self.max_excess_delay_ns <= 0:
            raise ConfigError("max excess delay must be positive")
        if self.grid_rate_hz <= 0:
            raise ConfigError("grid rate must be positive")


@dataclass
class ChannelRealization:
    """One drawn impulse response: delays in seconds, complex tap gains."""

    tap_delays_s: np.ndarray  # strictly increasing, first entry = los_delay_s
    tap_gains: np.ndarray  # complex128, total energy normalized to 1
    los_delay_s: float
    grid_rate_hz: float

    def __post_init__(self) -> None:
        self.tap_delays_s = np.asarray(self.tap_delays_s, dtype=np.float64)
        self.tap_gains = np.asarray(self.tap_gains, dtype=np.complex128)
        if self.tap_delays_s.shape != self.tap_gains.shape:
            raise ValueError("delay and gain arrays must match")
        if len(self.tap_delays_s) == 0:
            raise ValueError("realization needs at least one tap")
        if np.any(np.diff(self.tap_delays_s) <= 0):
            raise ValueError("tap delays must be strictly increasing")
        if abs(self.tap_delays_s[0] - self.los_delay_s) > 1e-15:
            raise ValueError("first tap must sit at the direct-path delay")


@dataclass(frozen=True)
class LinkBudget:
    """Receive-side signal budget; snr_db = +inf disables noise and scaling.

    sir_db is informational here (the injection path applies it); +inf means
    no attacker is present on the link.
    """

    snr_db: float = 10.0
    sir_db: float = math.inf


def draw_realization(params: ChannelModelParams, true_distance_m: float,
                     rng: np.random.Generator) -> ChannelRealization:
    """Draw one impulse response for a link of the given geometric length.

    Cluster count is 1 + Poisson(mean - 1); cluster gaps and ray arrivals are
    exponential at the configured rates; mean ray power decays doubly
    exponentially; ray amplitudes are Nakagami with a lognormally drawn
    m-factor and uniform phase.  Excess delays are quantized to the grid;
    same-bin rays merge coherently, and rays closer to the direct path than
    the unresolvable excess delay are replaced by its deterministic tap.
    Total tap energy is normalized to 1.
    """
    from .ranging import SPEED_OF_LIGHT

    if true_distance_m <= 0:
        raise ConfigError("true distance must be positive")
    los_delay_s = true_distance_m / SPEED_OF_LIGHT
    fs = params.grid_rate_hz

    n_clusters = 1 + rng.poisson(params.mean_clusters - 1.0)
    gaps = rng.exponential(1.0 / params.cluster_rate_per_ns, size=n_clusters - 1)
    cluster_times = np.concatenate([[0.0], np.cumsum(gaps)])
    cluster_times = cluster_times[cluster_times < params.max_excess_delay_ns]

    bins: dict[int, complex] = {}
    for t_cluster in cluster_times:
        span = params.max_excess_delay_ns - t_cluster
        n_rays = rng.poisson(params.ray_rate_per_ns * span)
        ray_times = np.concatenate([[0.0], np.sort(rng.uniform(0.0, span, size=n_rays))])
        mean_power = np.exp(-t_cluster / params.cluster_decay_ns
                            - ray_times / params.ray_decay_ns)
        m_db = rng.normal(params.nakagami_m_mu_db, params.nakagami_m_sigma_db,
                          size=len(ray_times))
        m = np.maximum(0.5, 10.0 ** (m_db / 10.0))
        power = rng.gamma(shape=m, scale=mean_power / m)
        phase = rng.uniform(0.0, 2.0 * np.pi, size=len(ray_times))
        gains = np.sqrt(power) * np.exp(1j * phase)
        excess_ns = t_cluster + ray_times
        idx = np.rint(excess_ns * 1e-9 * fs).astype(np.int64)
        for k, g in zip(idx, gains):
            bins[int(k)] = bins.get(int(k), 0.0 + 0.0j) + g

    # rays within the pulse resolution of the direct path cannot be separated
    # from it; the deterministic direct-path tap replaces them outright, so
    # its amplitude never fades and nothing inside the pulse skirt competes
    # with it for the correlation peak
    k_dead = int(round(params.unresolvable_excess_ns * 1e-9 * fs))
    diffuse_keys = np.array(sorted(k for k in bins if k > k_dead), dtype=np.int64)
    diffuse_gains = np.array([bins[k] for k in diffuse_keys], dtype=np.complex128)
    diffuse_energy = float(np.sum(np.abs(diffuse_gains) ** 2))
    f_los = params.los_energy_fraction
    if diffuse_energy > 0:
        diffuse_gains *= math.sqrt((1.0 - f_los) / diffuse_energy)
        los_gain = math.sqrt(f_los)
    else:
        los_gain = 1.0

    keys = np.concatenate([[0], diffuse_keys])
    gains = np.concatenate([[los_gain + 0.0j], diffuse_gains])

    gains = gains / math.sqrt(float(np.sum(np.abs(gains) ** 2)))
    delays = los_delay_s + keys / fs
    return ChannelRealization(delays, gains, los_delay_s, fs)


def reciprocal_pair(r: ChannelRealization) -> tuple[ChannelRealization, ChannelRealization]:
    """Forward and reverse views of one realization: equal taps, independent storage."""
    def clone() -> ChannelRealization:
        return ChannelRealization(r.tap_delays_s.copy(), r.tap_gains.copy(),
                                  r.los_delay_s, r.grid_rate_hz)
    return clone(), clone()


def propagate(w: Waveform, r: ChannelRealization, budget: LinkBudget,
              rng: np.random.Generator,
              sts_span: tuple[int, int] | None = None) -> Waveform:
    """Apply the tap response, set the STS-field SNR, add receiver noise.

    The direct-path delay is rounded to the sample grid; excess delays are
    grid-aligned already.  With a finite budget the faded signal is scaled so
    that its mean power over the (shifted) STS span equals
    10^(snr_db/10) * NOISE_REF_POWER, then unit-power circular Gaussian noise
    covers the whole buffer.  snr_db = +inf returns the faded signal untouched.

    Args:
        sts_span: (start, length) of the STS field in input-sample coordinates;
            None measures signal power over the full buffer instead.
    """
    fs = r.grid_rate_hz
    if abs(w.sample_rate_hz - fs) > 1e-6 * fs:
        raise ConfigError("waveform sample rate does not match channel grid")

    n0 = int(round(r.los_delay_s * fs))
    excess = np.rint((r.tap_delays_s - r.los_delay_s) * fs).astype(np.int64)
    h = np.zeros(int(excess[-1]) + 1, dtype=np.complex128)
    np.add.at(h, excess, r.tap_gains)

    faded = fftconvolve(w.samples, h, mode="full") if len(h) > 1 else w.samples * h[0]
    out = np.concatenate([np.zeros(n0, dtype=np.complex128), faded])

    if math.isinf(budget.snr_db):
        return Waveform(out, fs)

    if sts_span is None:
        region = out
    else:
        start, length = sts_span
        region = out[n0 + start: n0 + start + length]
    p_signal = float(np.mean(np.abs(region) ** 2))
    if p_signal <= 0:
        raise ValueError("cannot set SNR on an all-zero signal region")
    target = 10.0 ** (budget.snr_db / 10.0) * NOISE_REF_POWER
    out = out * math.sqrt(target / p_signal)

    noise = rng.standard_normal(len(out)) + 1j * rng.standard_normal(len(out))
    out = out + noise * math.sqrt(NOISE_REF_POWER / 2.0)
    return Waveform(out, fs)


def rms_delay_spread_s(r: ChannelRealization) -> float:
    """Energy-weighted RMS spread of the tap delays, in seconds."""
    p = np.abs(r.tap_gains) ** 2
    p = p / p.sum()
    mean = float(np.sum(p * r.tap_delays_s))
    second = float(np.sum(p * r.tap_delays_s ** 2))
    return math.sqrt(max(second - mean ** 2, 0.0))
