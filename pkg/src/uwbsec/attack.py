"""Distance-reduction attacker: overpowered random STS injected early.

The attacker cannot predict the keyed timestamp sequence, so it transmits its
own independent ±1 pulse train, time-advanced relative to the legitimate STS
and scaled to a configured signal-to-interference ratio at the victim.  The
attack succeeds when a cross-correlation ghost tap in the back-search window
passes the leading-edge tests before the true first path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .frames import FrameConfig, Waveform, pulse_shape


@dataclass(frozen=True)
class AttackConfig:
    """Injection settings; disabled by default.

    sir_db is legitimate STS power over attacker power at the victim, so
    negative values mean the attacker is the stronger signal.  advance_range
    is the inclusive integer span (samples) the time advance is drawn from.
    """

    enabled: bool = False
    target_message: str = "response"
    sir_db: float = -10.0
    advance_range: tuple[int, int] = (20, 380)
    attacker_seed_policy: str = "random_independent"

    def __post_init__(self) -> None:
        if self.target_message not in ("response", "final"):
            raise ConfigError("target_message must be 'response' or 'final'")
        lo, hi = self.advance_range
        if not (0 <= lo <= hi):
            raise ConfigError("advance_range must satisfy 0 <= lo <= hi")
        if self.attacker_seed_policy != "random_independent":
            raise ConfigError("unknown attacker seed policy")


@dataclass
class AttackTrace:
    """What the injector actually did during one message."""

    injected: bool
    advance_used: int | None = None
    attacker_power_db: float | None = None


def forge_sts_waveform(cfg: AttackConfig, frame: FrameConfig, legit_sts_power: float,
                       rng: np.random.Generator) -> Waveform:
    """Shape an independent random ±1 pulse train at the configured SIR.

    legit_sts_power is the mean per-sample power of the legitimate STS field
    at the victim; the forged waveform is scaled so its own core-field power
    is legit_sts_power * 10^(-sir_db / 10).
    """
    if legit_sts_power <= 0:
        raise ValueError("legitimate STS power must be positive")
    n_pulses = frame.sts_pulses
    chips = rng.integers(0, 2, size=n_pulses).astype(np.int8) * 2 - 1
    shaped = pulse_shape(chips, frame)
    core = shaped.samples[: n_pulses * frame.samples_per_pulse]
    p_own = float(np.mean(np.abs(core) ** 2))
    target = legit_sts_power * 10.0 ** (-cfg.sir_db / 10.0)
    scaled = shaped.samples * math.sqrt(target / p_own)
    return Waveform(scaled, frame.sample_rate_hz)


def inject(victim_rx: Waveform, attack_wave: Waveform, legit_sts_start: int,
           cfg: AttackConfig, rng: np.random.Generator) -> tuple[Waveform, AttackTrace]:
    """Add the forged STS into the victim's receive buffer, time-advanced.

    The advance is drawn uniformly from cfg.advance_range (inclusive).  If it
    would place the forgery before sample 0 the start clamps to 0 and the
    effectively used advance is recorded.  Buffer length never changes; the
    forgery tail is clipped if it overruns.  Disabled configs return a
    bit-identical copy and a trace with injected=False.
    """
    if not cfg.enabled:
        return Waveform(victim_rx.samples.copy(), victim_rx.sample_rate_hz), AttackTrace(False)
    if legit_sts_start < 0:
        raise ValueError("legit_sts_start must be >= 0")

    lo, hi = cfg.advance_range
    advance = int(rng.integers(lo, hi + 1))
    start = legit_sts_start - advance
    if start < 0:
        start = 0
        advance = legit_sts_start

    out = victim_rx.samples.copy()
    n = min(len(attack_wave.samples), len(out) - start)
    if n > 0:
        out[start: start + n] += attack_wave.samples[:n]
    trace = AttackTrace(True, advance_used=advance, attacker_power_db=-cfg.sir_db)
    return Waveform(out, victim_rx.sample_rate_hz), trace
