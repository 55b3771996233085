"""Shared randomized-property definitions, fuzz-budget applied by the callers.

Each property is a plain @given function; test modules publish them with a
chosen max_examples, and the acceptance suite reruns them at full budget.
"""

import numpy as np
from hypothesis import given, strategies as st

from uwbsec.channel import ChannelModelParams, draw_realization, reciprocal_pair
from uwbsec.detector import (SUPPORTED_BITS, QuantizedFeature, gray_decode,
                             gray_encode, hamming)
from uwbsec.frames import FrameConfig, Waveform, pulse_shape
from uwbsec.ranging import CirEstimate, EdgeParams, estimate_cir, leading_edge

_q_and_dims = st.tuples(st.sampled_from(SUPPORTED_BITS), st.integers(1, 48))


@st.composite
def _three_bit_strings(draw):
    q, dims = draw(_q_and_dims)
    n = q * dims
    bits = st.lists(st.integers(0, 1), min_size=n, max_size=n)
    return q, [np.array(draw(bits), dtype=np.uint8) for _ in range(3)]


@given(_three_bit_strings())
def hamming_satisfies_metric_laws(qs):
    q, (a, b, c) = qs
    fa, fb, fc = (QuantizedFeature(v, q) for v in (a, b, c))
    n = len(a)
    dab = hamming(fa, fb)
    assert hamming(fa, fa) == 0
    assert dab == hamming(fb, fa)
    assert 0 <= dab <= n
    assert (dab == 0) == bool(np.array_equal(a, b))
    assert hamming(fa, fc) <= dab + hamming(fb, fc)


@given(st.sampled_from(SUPPORTED_BITS), st.integers(0, 254))
def gray_neighbours_differ_in_one_bit(q, level):
    n_levels = 1 << q
    level %= n_levels
    assert gray_decode(gray_encode(level)) == level
    if level + 1 < n_levels:
        diff = gray_encode(level) ^ gray_encode(level + 1)
        assert bin(diff).count("1") == 1


@st.composite
def _taps_params_and_scale(draw):
    n = draw(st.integers(8, 200))
    taps = draw(st.lists(st.floats(0.0, 1e6, allow_nan=False), min_size=n, max_size=n))
    taps = np.array(taps, dtype=np.float64)
    if taps.max() <= 0:
        taps[draw(st.integers(0, n - 1))] = 1.0
    p = EdgeParams(btw_samples=draw(st.integers(0, n)),
                   mpep=draw(st.floats(0.01, 1.0)),
                   papr=draw(st.floats(0.1, 10.0)))
    # power-of-two factors keep every ratio comparison bit-exact under scaling
    scale = 2.0 ** draw(st.integers(-30, 30))
    return taps, p, scale


@given(_taps_params_and_scale())
def leading_edge_ignores_uniform_scaling(case):
    taps, p, scale = case
    before = leading_edge(CirEstimate(taps, 0), p)
    after = leading_edge(CirEstimate(taps * scale, 0), p)
    assert after == before
    assert after <= int(np.argmax(taps))


@given(st.integers(0, 2**63 - 1), st.floats(0.5, 60.0))
def reciprocal_directions_share_identical_taps(seed, distance_m):
    r = draw_realization(ChannelModelParams(), distance_m,
                         np.random.default_rng(seed))
    fwd, rev = reciprocal_pair(r)
    assert np.array_equal(fwd.tap_gains, rev.tap_gains)
    assert np.array_equal(fwd.tap_delays_s, rev.tap_delays_s)
    fwd.tap_gains[0] += 1.0
    assert not np.array_equal(fwd.tap_gains, rev.tap_gains)
    assert np.array_equal(rev.tap_gains, r.tap_gains)


@st.composite
def _delayed_template_case(draw):
    spp = draw(st.integers(1, 4))
    n_chips = draw(st.integers(16, 64))
    chips = np.array(draw(st.lists(st.sampled_from([-1, 1]),
                                   min_size=n_chips, max_size=n_chips)))
    delay = draw(st.integers(0, 300))
    btw = draw(st.integers(0, 64))
    window = draw(st.integers(btw + 1, btw + 600))
    return spp, chips, delay, btw, window


@given(_delayed_template_case())
def estimate_window_meets_length_contract(case):
    spp, chips, delay, btw, window = case
    cfg = FrameConfig(samples_per_pulse=spp)
    template = pulse_shape(chips, cfg)
    rx = Waveform(np.concatenate([np.zeros(delay), template.samples]),
                  cfg.sample_rate_hz)
    est = estimate_cir(rx, template, window, btw)
    assert len(est.taps) == window
    assert np.all(np.isfinite(est.taps)) and np.all(est.taps >= 0)
    # the global peak is pinned btw samples into the window and normalized
    if btw < window:
        assert est.taps[btw] == 1.0
    assert est.taps.max() <= 1.0
