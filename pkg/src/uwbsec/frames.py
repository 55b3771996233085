"""Ranging-frame synthesis: preamble, SFD, scrambled timestamp sequence, pulse shaping.

A frame is a sequence of pulse slots (preamble | SFD | STS) shaped with a
root-raised-cosine prototype on a fixed sample grid.  The payload is never
modulated onto the waveform; it rides along as an opaque marker on the frame
layout and is delivered error-free by the simulation harness.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .errors import ConfigError

# pulses carried by one STS segment after collapsing the chip clock to the pulse grid
PULSES_PER_SEGMENT = 64

# root-raised-cosine prototype: roll-off and truncation span in pulse periods
RRC_ROLLOFF = 0.5
RRC_SPAN = 8

_CODE_STRINGS = {
    # length-31 ternary burst-position codes, indices 1..8 from the standard table
    1: "-0000+0-0+++0+-000+-+++00-+0-00",
    2: "0+0+-0+0+000-++0-+---00+00++000",
    3: "-+0++000-+-++00++0+00-0000-0+0-",
    4: "0000+-00-00-++++0+-+000+0-0++0-",
    5: "-0+-00+++-+000-+0+++0-0+0000-00",
    6: "++00+00---+-0++-000+0+0-+0+0000",
    7: "+0000+-0+0+00+000+0++---0-+00-+",
    8: "0+00-0-0++0000--+00-+0++-++0+00",
    # index 9: extended entry (time-reversed member of the same family)
    9: "00-0000+0-0+++0+-000+-+++00-+0-",
}


def _parse_code(s: str) -> np.ndarray:
    lut = {"-": -1, "0": 0, "+": 1}
    return np.array([lut[c] for c in s], dtype=np.int8)


PREAMBLE_CODES = {idx: _parse_code(s) for idx, s in _CODE_STRINGS.items()}

# short start-of-frame delimiter pattern (index 0); realism only, never timestamped
SFD_PATTERNS = {0: np.array([0, 1, 0, -1, 1, 0, 0, -1], dtype=np.int8)}


@dataclass(frozen=True)
class FrameConfig:
    """Static description of one ranging frame's physical layer."""

    preamble_code_index: int = 9
    preamble_spreading_factor: int = 4  # attacker profile uses 9
    preamble_duration: int = 64  # repetitions of the spread code
    sfd_index: int = 0
    sts_segment_length: int = 64  # segments; each maps to PULSES_PER_SEGMENT pulses
    samples_per_pulse: int = 4
    sample_rate_hz: float = 2.0e9
    sts_seed: bytes = bytes(16)  # 128-bit opaque key for the STS generator

    def __post_init__(self) -> None:
        if self.preamble_code_index not in PREAMBLE_CODES:
            raise ConfigError(
                f"unknown preamble code index {self.preamble_code_index}"
            )
        if self.sfd_index not in SFD_PATTERNS:
            raise ConfigError(f"unknown SFD index {self.sfd_index}")
        if self.preamble_spreading_factor < 1:
            raise ConfigError("preamble spreading factor must be >= 1")
        if self.preamble_duration < 1:
            raise ConfigError("preamble duration must be >= 1")
        if self.sts_segment_length < 1:
            raise ConfigError("sts segment length must be >= 1")
        if self.samples_per_pulse < 1:
            raise ConfigError("samples per pulse must be >= 1")
        if self.sample_rate_hz <= 0:
            raise ConfigError("sample rate must be positive")
        if len(self.sts_seed) != 16:
            raise ConfigError("sts seed must be exactly 16 bytes")

    @property
    def sts_pulses(self) -> int:
        return self.sts_segment_length * PULSES_PER_SEGMENT


def attacker_frame_config(base: FrameConfig | None = None, **overrides) -> FrameConfig:
    """Attacker transmit profile: same frame except the wider preamble spreading."""
    base = base or FrameConfig()
    kwargs = dict(
        preamble_code_index=base.preamble_code_index,
        preamble_spreading_factor=9,
        preamble_duration=base.preamble_duration,
        sfd_index=base.sfd_index,
        sts_segment_length=base.sts_segment_length,
        samples_per_pulse=base.samples_per_pulse,
        sample_rate_hz=base.sample_rate_hz,
        sts_seed=base.sts_seed,
    )
    kwargs.update(overrides)
    return FrameConfig(**kwargs)


@dataclass
class Waveform:
    """Complex baseband samples on a uniform grid."""

    samples: np.ndarray  # 1-D complex128
    sample_rate_hz: float

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.ndim != 1:
            raise ValueError("waveform samples must be 1-D")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("waveform contains non-finite samples")

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class FrameLayout:
    """Sample offsets of the frame sections plus the out-of-band payload marker."""

    preamble_start: int
    sts_start: int
    sts_length_samples: int
    payload_marker: bytes = b""


def rrc_pulse(samples_per_pulse: int, rolloff: float = RRC_ROLLOFF,
              span: int = RRC_SPAN) -> np.ndarray:
    """Unit-energy root-raised-cosine prototype, centered, odd length.

    Args:
        samples_per_pulse: samples per pulse period.
        rolloff: excess-bandwidth factor in (0, 1].
        span: truncation width in pulse periods (total, symmetric).

    Returns:
        Real array of length span * samples_per_pulse + 1.
    """
    beta = rolloff
    n = span * samples_per_pulse
    t = np.arange(-n // 2, n // 2 + 1, dtype=np.float64) / samples_per_pulse
    h = np.empty_like(t)
    # generic branch, with the two removable singularities patched explicitly
    eps = 1e-12
    at_zero = np.abs(t) < eps
    at_break = np.abs(np.abs(t) - 1.0 / (4.0 * beta)) < eps
    generic = ~(at_zero | at_break)
    tg = t[generic]
    h[generic] = (
        np.sin(np.pi * tg * (1 - beta)) + 4 * beta * tg * np.cos(np.pi * tg * (1 + beta))
    ) / (np.pi * tg * (1 - (4 * beta * tg) ** 2))
    h[at_zero] = 1.0 + beta * (4.0 / np.pi - 1.0)
    h[at_break] = (beta / np.sqrt(2.0)) * (
        (1 + 2.0 / np.pi) * np.sin(np.pi / (4 * beta))
        + (1 - 2.0 / np.pi) * np.cos(np.pi / (4 * beta))
    )
    return h / np.linalg.norm(h)


def gen_preamble(config: FrameConfig) -> np.ndarray:
    """Spread ternary synchronization sequence at pulse-slot granularity.

    The stored code is spread by the configured factor (each symbol followed
    by factor - 1 zero slots) and repeated preamble_duration times, so the
    output length is always 31 * factor * duration.
    """
    code = PREAMBLE_CODES[config.preamble_code_index]
    f = config.preamble_spreading_factor
    spread = np.zeros(len(code) * f, dtype=np.int8)
    spread[::f] = code
    return np.tile(spread, config.preamble_duration)


def gen_sfd(config: FrameConfig) -> np.ndarray:
    """Start-of-frame delimiter symbols, spread like the preamble."""
    pattern = SFD_PATTERNS[config.sfd_index]
    f = config.preamble_spreading_factor
    spread = np.zeros(len(pattern) * f, dtype=np.int8)
    spread[::f] = pattern
    return spread


def gen_sts(seed: bytes, length: int) -> np.ndarray:
    """Keyed pseudorandom +/-1 pulse sequence.

    Bits come from a keyed hash run in counter mode, so the sequence is
    deterministic in the seed and unpredictable without it.

    Args:
        seed: 16-byte key.
        length: number of +/-1 pulses, > 0.
    """
    if len(seed) != 16:
        raise ConfigError("sts seed must be exactly 16 bytes")
    if length <= 0:
        raise ValueError("sts length must be positive")
    blocks = []
    n_blocks = (length + 511) // 512  # 64-byte digest = 512 bits per counter step
    for counter in range(n_blocks):
        h = hashlib.blake2b(counter.to_bytes(8, "little"), key=seed, digest_size=64)
        blocks.append(np.frombuffer(h.digest(), dtype=np.uint8))
    bits = np.unpackbits(np.concatenate(blocks))[:length]
    return (bits.astype(np.int8) * 2 - 1)


def pulse_shape(symbols: np.ndarray, config: FrameConfig) -> Waveform:
    """Place one symbol per pulse slot and convolve with the RRC prototype.

    Output length is len(symbols) * samples_per_pulse plus the filter tail.
    The operation is linear in the symbol values.
    """
    symbols = np.asarray(symbols, dtype=np.float64)
    if symbols.ndim != 1:
        raise ValueError("symbol vector must be 1-D")
    spp = config.samples_per_pulse
    train = np.zeros(len(symbols) * spp, dtype=np.float64)
    train[::spp] = symbols
    proto = rrc_pulse(spp)
    if len(symbols) == 0:
        shaped = np.zeros(0)
    else:
        shaped = fftconvolve(train, proto, mode="full")
    return Waveform(shaped.astype(np.complex128), config.sample_rate_hz)


def build_frame(config: FrameConfig, payload_marker: bytes = b"") -> tuple[Waveform, FrameLayout]:
    """Assemble preamble | SFD | STS into one shaped waveform plus its layout.

    Layout offsets index the nominal (unshifted) slot grid: section k's first
    pulse peaks at offset + filter group delay, which cancels in matched
    filtering and is therefore not folded into the offsets.
    """
    preamble = gen_preamble(config)
    sfd = gen_sfd(config)
    sts = gen_sts(config.sts_seed, config.sts_pulses)
    slots = np.concatenate([preamble, sfd, sts])
    wave = pulse_shape(slots, config)
    spp = config.samples_per_pulse
    layout = FrameLayout(
        preamble_start=0,
        sts_start=(len(preamble) + len(sfd)) * spp,
        sts_length_samples=config.sts_pulses * spp,
        payload_marker=payload_marker,
    )
    return wave, layout


def sts_template(config: FrameConfig) -> Waveform:
    """Shaped replica of the configured STS, for matched filtering."""
    return pulse_shape(gen_sts(config.sts_seed, config.sts_pulses), config)
