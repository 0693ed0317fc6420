import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from physiofuse.errors import BandOutOfRange, ConstantChannel, EmptyInput, NonPositiveRate, TooShort
from physiofuse.ingest import Channel, ChannelMeta, Modality, SignalRecord
from physiofuse.preprocess import (
    FilterSpec,
    bandpass_filter,
    preprocess_record,
    resample,
    zscore,
)

RATE = 512.0
finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def _rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


def _sine(freq, seconds=20.0, rate=RATE):
    t = np.arange(int(seconds * rate)) / rate
    return np.sin(2 * np.pi * freq * t)


class TestResample:
    def test_identity(self, rng):
        x = rng.standard_normal(100)
        assert np.array_equal(resample(x, 512, 512), x)

    def test_upsample_with_terminal_hold(self):
        assert resample([0.0, 1.0], 1, 2).tolist() == [0.0, 0.5, 1.0, 1.0]

    def test_ramp_round_trip(self):
        ramp = np.arange(1000, dtype=float) * 0.37 - 12.0
        back = resample(resample(ramp, 100, 400), 400, 100)
        assert np.max(np.abs(back - ramp)) < 1e-9

    def test_bad_rate(self):
        with pytest.raises(NonPositiveRate):
            resample([1.0, 2.0], 0, 10)


class TestBandpass:
    def test_passband_sine(self):
        x = _sine(10.0)
        ratio = _rms(bandpass_filter(x, RATE)) / _rms(x)
        assert 0.95 <= ratio <= 1.05

    def test_line_noise_attenuated(self):
        x = _sine(60.0)
        assert _rms(bandpass_filter(x, RATE)) <= _rms(x) * 10 ** (-15 / 20)

    def test_constant_is_removed(self):
        y = bandpass_filter(np.full(10240, 5.0), RATE)
        assert np.max(np.abs(y)) < 1e-6

    def test_same_length(self, rng):
        x = rng.standard_normal(777)
        assert bandpass_filter(x, RATE).shape == x.shape

    def test_band_out_of_range(self):
        with pytest.raises(BandOutOfRange):
            bandpass_filter(np.zeros(1000), 80.0)
        with pytest.raises(BandOutOfRange):
            FilterSpec(low_cut=10.0, high_cut=5.0)

    def test_too_short(self):
        with pytest.raises(TooShort):
            bandpass_filter(np.zeros(12), RATE)

    @settings(max_examples=25, deadline=None)
    @given(a=st.floats(-10, 10), b=st.floats(-10, 10), seed=st.integers(0, 2**31))
    def test_linearity(self, a, b, seed):
        rng = np.random.default_rng(seed)
        x, y = rng.standard_normal((2, 2048))
        lhs = bandpass_filter(a * x + b * y, RATE)
        rhs = a * bandpass_filter(x, RATE) + b * bandpass_filter(y, RATE)
        assert np.max(np.abs(lhs - rhs)) < 1e-9

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**31), n=st.integers(64, 4096))
    def test_time_reversal_symmetry(self, seed, n):
        x = np.random.default_rng(seed).standard_normal(n)
        fwd = bandpass_filter(x[::-1], RATE)
        rev = bandpass_filter(x, RATE)[::-1]
        assert np.max(np.abs(fwd - rev)) < 1e-9

    def test_causal_mode_runs(self):
        spec = FilterSpec(zero_phase=False)
        x = _sine(10.0)
        assert bandpass_filter(x, RATE, spec).shape == x.shape


class TestZscore:
    def test_example(self):
        z = zscore([1.0, 2.0, 3.0])
        h = math.sqrt(1.5)
        assert np.allclose(z, [-h, 0.0, h], atol=1e-15, rtol=0)

    def test_constant(self):
        with pytest.warns(ConstantChannel):
            z = zscore([7.0, 7.0, 7.0])
        assert z.tolist() == [0.0, 0.0, 0.0]

    def test_empty(self):
        with pytest.raises(EmptyInput):
            zscore([1.0])

    @settings(max_examples=60, deadline=None)
    @given(x=arrays(np.float64, st.integers(2, 300), elements=finite),
           a=st.floats(0.01, 100), b=finite)
    def test_moments_affine_and_idempotent(self, x, a, b):
        if np.ptp(x) < 1e-3:
            return
        z = zscore(x)
        assert abs(z.mean()) < 1e-9
        assert abs(z.std() - 1.0) < 1e-6
        assert np.max(np.abs(zscore(a * x + b) - z)) < 1e-9
        assert np.max(np.abs(zscore(z) - z)) < 1e-9


def test_preprocess_record_resamples_and_flags_constant(rng):
    chans = (Channel(ChannelMeta("C3", Modality.EEG, "C3", 512.0), rng.standard_normal(5120)),
             Channel(ChannelMeta("EMG", Modality.EMG, "", 256.0), np.full(2560, 3.0)))
    rec = SignalRecord(chans, "s", ((0.0, 4),))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        out = preprocess_record(rec)
    assert out.constant_channels == ("EMG",)
    assert {c.meta.sampling_rate for c in out.record.channels} == {512.0}
    assert [len(c.samples) for c in out.record.channels] == [5120, 5120]
    assert np.all(out.record.channels[1].samples == 0.0)
