"""Frame synthesis: preamble spreading, keyed sequence generation, pulse shaping."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uwbsec.errors import ConfigError
from uwbsec.frames import (FrameConfig, PREAMBLE_CODES, attacker_frame_config,
                           build_frame, gen_preamble, gen_sts, pulse_shape,
                           rrc_pulse, sts_template)


class TestPreamble:
    def test_spreading_places_code_symbols_on_factor_grid(self):
        cfg = FrameConfig(preamble_spreading_factor=4, preamble_duration=1)
        out = gen_preamble(cfg)
        code = PREAMBLE_CODES[cfg.preamble_code_index]
        assert len(out) == 124
        assert np.array_equal(out[::4], code)
        mask = np.ones(len(out), dtype=bool)
        mask[::4] = False
        assert not out[mask].any()

    def test_default_duration_total_length(self):
        out = gen_preamble(FrameConfig())
        assert len(out) == 31 * 4 * 64 == 7936

    def test_attacker_profile_spreads_wider_but_keeps_the_code(self):
        legit = gen_preamble(FrameConfig(preamble_duration=1))
        atk = gen_preamble(attacker_frame_config(FrameConfig(preamble_duration=1)))
        assert len(atk) == 31 * 9 > len(legit)
        assert np.array_equal(atk[atk != 0], legit[legit != 0])

    def test_unknown_code_index_rejected(self):
        with pytest.raises(ConfigError):
            FrameConfig(preamble_code_index=42)

    @given(st.integers(1, 16), st.integers(1, 80))
    def test_length_is_code_times_factor_times_duration(self, factor, duration):
        cfg = FrameConfig(preamble_spreading_factor=factor,
                          preamble_duration=duration)
        assert len(gen_preamble(cfg)) == 31 * factor * duration


class TestSts:
    def test_same_seed_same_sequence(self):
        seed = bytes(range(16))
        a = gen_sts(seed, 64)
        b = gen_sts(seed, 64)
        assert np.array_equal(a, b)
        assert set(np.unique(a)) <= {-1, 1}

    def test_different_seeds_nearly_orthogonal(self):
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(100):
            s1, s2 = rng.bytes(16), rng.bytes(16)
            if s1 == s2:
                continue
            a = gen_sts(s1, 4096).astype(np.float64)
            b = gen_sts(s2, 4096).astype(np.float64)
            worst = max(worst, abs(float(a @ b)) / 4096.0)
        assert worst < 0.1

    def test_zero_length_rejected(self):
        with pytest.raises(ValueError):
            gen_sts(bytes(16), 0)

    def test_long_sequence_is_balanced(self):
        seq = gen_sts(b"0123456789abcdef", 4096)
        assert abs(float(np.mean(seq))) < 0.05

    def test_wrong_seed_size_rejected(self):
        with pytest.raises(ConfigError):
            gen_sts(b"short", 64)


class TestPulseShape:
    def test_zero_symbols_give_zero_waveform(self):
        out = pulse_shape(np.zeros(50), FrameConfig())
        assert np.allclose(out.samples, 0.0)

    def test_single_symbol_reproduces_the_prototype(self):
        cfg = FrameConfig()
        out = pulse_shape(np.array([1.0]), cfg)
        proto = rrc_pulse(cfg.samples_per_pulse)
        assert np.allclose(out.samples.real[:len(proto)], proto, atol=1e-12)
        assert np.allclose(out.samples.real[len(proto):], 0.0, atol=1e-12)
        assert np.allclose(out.samples.imag, 0.0)

    def test_sign_flip_preserves_energy(self):
        cfg = FrameConfig()
        sym = np.ones(40)
        e_pos = np.sum(np.abs(pulse_shape(sym, cfg).samples) ** 2)
        e_neg = np.sum(np.abs(pulse_shape(-sym, cfg).samples) ** 2)
        assert e_pos == pytest.approx(e_neg, rel=1e-12)

    def test_prototype_has_unit_energy(self):
        assert np.sum(rrc_pulse(4) ** 2) == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=60)
    @given(st.lists(st.floats(-2, 2, allow_nan=False), min_size=1, max_size=64),
           st.lists(st.floats(-2, 2, allow_nan=False), min_size=1, max_size=64))
    def test_shaping_is_linear(self, a, b):
        n = max(len(a), len(b))
        a = np.pad(np.array(a), (0, n - len(a)))
        b = np.pad(np.array(b), (0, n - len(b)))
        cfg = FrameConfig()
        lhs = pulse_shape(a + b, cfg).samples
        rhs = pulse_shape(a, cfg).samples + pulse_shape(b, cfg).samples
        scale = max(float(np.max(np.abs(rhs))), 1.0)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale


class TestBuildFrame:
    def test_layout_sections_are_ordered_and_in_bounds(self):
        wave, layout = build_frame(FrameConfig())
        assert 0 <= layout.preamble_start < layout.sts_start
        assert layout.sts_start + layout.sts_length_samples <= len(wave)

    def test_default_frame_arithmetic(self):
        cfg = FrameConfig()
        wave, layout = build_frame(cfg)
        assert cfg.sts_pulses == 64 * 64 == 4096
        assert layout.sts_length_samples == 4096 * 4
        # preamble 7936 slots + sfd 8*4 slots, then 4 samples per slot
        assert layout.sts_start == (7936 + 32) * 4

    def test_empty_payload_marker_is_valid(self):
        _, layout = build_frame(FrameConfig(), payload_marker=b"")
        assert layout.payload_marker == b""

    def test_attacker_config_has_longer_preamble_section(self):
        _, legit = build_frame(FrameConfig())
        _, atk = build_frame(attacker_frame_config())
        assert atk.sts_start > legit.sts_start

    def test_identical_inputs_give_identical_waveforms(self):
        a, _ = build_frame(FrameConfig())
        b, _ = build_frame(FrameConfig())
        assert np.array_equal(a.samples, b.samples)

    def test_template_matches_frame_sts_field(self):
        cfg = FrameConfig(preamble_duration=4, sts_segment_length=2)
        wave, layout = build_frame(cfg)
        tmpl = sts_template(cfg)
        # the frame's STS section equals the standalone template away from the
        # seam where neighbouring-section filter tails overlap
        tail = 8 * cfg.samples_per_pulse
        lhs = wave.samples[layout.sts_start + tail:
                           layout.sts_start + layout.sts_length_samples - tail]
        rhs = tmpl.samples[tail: layout.sts_length_samples - tail]
        assert np.allclose(lhs, rhs, atol=1e-9)
