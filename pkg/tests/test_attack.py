"""Forged-sequence injection: power budget, unpredictability, buffer discipline."""

import math

import numpy as np
import pytest

from uwbsec.attack import AttackConfig, AttackTrace, forge_sts_waveform, inject
from uwbsec.errors import ConfigError
from uwbsec.frames import FrameConfig, Waveform, gen_sts, pulse_shape

FRAME = FrameConfig(sts_segment_length=16)  # 1024 pulses keeps the tests quick


def enabled_cfg(**kw):
    return AttackConfig(**{"enabled": True, "sir_db": -10.0,
                           "advance_range": (20, 380), **kw})


class TestForge:
    def test_power_ratio_follows_the_configured_sir(self):
        cfg = enabled_cfg(sir_db=-10.0)
        legit_power = 3.7
        ratios = []
        for seed in range(20):
            forged = forge_sts_waveform(cfg, FRAME, legit_power,
                                        np.random.default_rng(seed))
            core = forged.samples[: FRAME.sts_pulses * FRAME.samples_per_pulse]
            ratios.append(float(np.mean(np.abs(core) ** 2)) / legit_power)
        measured_db = 10.0 * math.log10(float(np.mean(ratios)))
        assert abs(measured_db - 10.0) < 0.5

    def test_forged_sequence_uncorrelated_with_legitimate(self):
        from scipy.signal import fftconvolve

        full = FrameConfig()  # 4096-pulse sequence
        legit = pulse_shape(gen_sts(bytes(16), full.sts_pulses), full)
        forged = forge_sts_waveform(enabled_cfg(), full, 1.0,
                                    np.random.default_rng(123))
        a, b = legit.samples, forged.samples
        corr = np.abs(fftconvolve(a, np.conj(b[::-1]), mode="full"))
        rho = corr / (np.linalg.norm(a) * np.linalg.norm(b))
        assert float(rho.max()) < 0.1

    def test_nonpositive_reference_power_rejected(self):
        with pytest.raises(ValueError):
            forge_sts_waveform(enabled_cfg(), FRAME, 0.0, np.random.default_rng(0))


class TestInject:
    def victim(self, n=4000):
        return Waveform(np.zeros(n, dtype=complex), FRAME.sample_rate_hz)

    def test_disabled_config_is_identity(self):
        rng = np.random.default_rng(0)
        rx = Waveform(rng.standard_normal(500) + 0j, FRAME.sample_rate_hz)
        out, trace = inject(rx, self.victim(100), 50, AttackConfig(), rng)
        assert np.array_equal(out.samples, rx.samples)
        assert trace == AttackTrace(False)

    def test_fixed_advance_places_energy_exactly(self):
        cfg = enabled_cfg(advance_range=(40, 40))
        attack = Waveform(np.ones(100, dtype=complex), FRAME.sample_rate_hz)
        sts_start = 500
        out, trace = inject(self.victim(), attack, sts_start, cfg,
                            np.random.default_rng(0))
        assert trace.advance_used == 40
        start = sts_start - 40
        assert not out.samples[:start].any()
        assert np.all(out.samples[start: start + 100] == 1.0)
        assert not out.samples[start + 100:].any()

    def test_advance_clamps_at_buffer_origin(self):
        cfg = enabled_cfg(advance_range=(50, 50))
        attack = Waveform(np.ones(10, dtype=complex), FRAME.sample_rate_hz)
        out, trace = inject(self.victim(), attack, 30, cfg, np.random.default_rng(0))
        assert trace.advance_used == 30
        assert out.samples[0] == 1.0

    def test_buffer_length_and_prefix_preserved(self):
        rng = np.random.default_rng(9)
        rx = Waveform(rng.standard_normal(2000) + 0j, FRAME.sample_rate_hz)
        cfg = enabled_cfg(advance_range=(20, 380))
        attack = Waveform(np.ones(5000, dtype=complex), FRAME.sample_rate_hz)
        out, trace = inject(rx, attack, 1500, cfg, np.random.default_rng(1))
        start = 1500 - trace.advance_used
        assert len(out.samples) == len(rx.samples)
        assert np.array_equal(out.samples[:start], rx.samples[:start])

    def test_advance_stays_inside_the_configured_range(self):
        cfg = enabled_cfg(advance_range=(20, 380))
        seen = set()
        for seed in range(50):
            _, trace = inject(self.victim(), self.victim(10), 1000, cfg,
                              np.random.default_rng(seed))
            seen.add(trace.advance_used)
        assert all(20 <= a <= 380 for a in seen)
        assert len(seen) > 10

    def test_bad_advance_range_rejected(self):
        with pytest.raises(ConfigError):
            AttackConfig(enabled=True, advance_range=(30, 10))
        with pytest.raises(ConfigError):
            AttackConfig(enabled=True, advance_range=(-5, 10))

    def test_unknown_target_rejected(self):
        with pytest.raises(ConfigError):
            AttackConfig(enabled=True, target_message="poll")
