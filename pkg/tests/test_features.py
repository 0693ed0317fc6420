import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import NINE, make_record
from oracles import naive_covariance, naive_max_cross_corr, naive_pearson
from physiofuse.errors import (
    DegeneratePair,
    EmptyInput,
    InfeasibleCombination,
    LagTooLarge,
    LengthMismatch,
    MissingChannel,
    TooShort,
)
from physiofuse.features import (
    ALL_MODALITIES,
    Kind,
    ModalityCombination,
    covariance,
    enumerate_modality_combinations,
    extract_features,
    lag_samples,
    max_cross_corr,
    parse_feature_name,
    pearson,
    segment_descriptors,
)
from physiofuse.ingest import Modality
from physiofuse.segmentation import segment_record


def _series(seed, n):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(n) * rng.uniform(0.1, 10) + rng.uniform(-5, 5)


class TestPearson:
    def test_example(self):
        assert pearson([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)

    def test_self_and_flip(self, rng):
        x = rng.standard_normal(500)
        assert abs(pearson(x, x) - 1.0) < 1e-12
        assert abs(pearson(x, -x) + 1.0) < 1e-12

    def test_constant_flags_degenerate(self):
        with pytest.warns(DegeneratePair):
            assert pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0]) == 0.0

    def test_errors(self):
        with pytest.raises(LengthMismatch):
            pearson([1, 2, 3], [1, 2])
        with pytest.raises(TooShort):
            pearson([1.0], [2.0])
        with pytest.raises(EmptyInput):
            covariance([], [])

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**31), a=st.floats(0.1, 10), b=st.floats(-10, 10),
           c=st.floats(0.1, 10), d=st.floats(-10, 10))
    def test_symmetry_and_scale_invariance(self, seed, a, b, c, d):
        x, y = _series(seed, 200), _series(seed + 1, 200)
        assert pearson(x, y) == pytest.approx(pearson(y, x), abs=1e-12)
        assert pearson(a * x + b, c * y + d) == pytest.approx(pearson(x, y), abs=1e-9)


class TestCovariance:
    def test_example(self):
        assert covariance([1, 2, 3], [1, 2, 3]) == pytest.approx(2 / 3, abs=1e-15)

    def test_constant_and_variance(self, rng):
        x = rng.standard_normal(100)
        assert covariance(np.full(100, 4.2), x) == pytest.approx(0.0, abs=1e-12)
        assert covariance(x, x) == pytest.approx(np.var(x), rel=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 2**31), a=st.floats(-10, 10))
    def test_symmetry_and_bilinearity(self, seed, a):
        x, y = _series(seed, 150), _series(seed + 7, 150)
        assert covariance(x, y) == pytest.approx(covariance(y, x), abs=1e-12)
        assert covariance(a * x, y) == pytest.approx(a * covariance(x, y), abs=1e-9)


class TestCrossCorr:
    def test_default_lag(self):
        assert lag_samples(512, 500) == 256

    def test_self(self, rng):
        x = rng.standard_normal(2048)
        v, lag = max_cross_corr(x, x, 512)
        assert lag == 0 and abs(v - 1.0) < 1e-9

    def test_delayed_sine(self):
        t = np.arange(10240) / 512
        x = np.sin(2 * np.pi * 5 * t)
        y = np.concatenate([np.zeros(50), x[:-50]])
        v, lag = max_cross_corr(x, y, 512, 500)
        assert lag == 50 and v >= 0.99
        v2, lag2 = max_cross_corr(y, x, 512, 500)
        assert lag2 == -50 and v2 == pytest.approx(v, abs=1e-12)
        ref_v, ref_lag, _ = naive_max_cross_corr(x, y, 256)
        assert (ref_lag, ref_v) == (lag, pytest.approx(v, abs=1e-10))

    def test_lag_too_large(self):
        with pytest.raises(LagTooLarge):
            max_cross_corr(np.arange(100.0), np.arange(100.0)[::-1], 512, 500)

    def test_tie_prefers_zero_then_negative(self):
        # constant-overlap product profile: every lag scores 1 for a period-1 pattern
        x = np.array([1.0, -1.0] * 8)
        v, lag = max_cross_corr(x, x, 1000, 2)
        assert lag == 0
        v, lag = max_cross_corr(x, -x, 1000, 1)
        assert lag == -1

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**31), n=st.integers(16, 600), lag_ms=st.integers(1, 15))
    def test_symmetry_negates_lag(self, seed, n, lag_ms):
        x, y = _series(seed, n), _series(seed + 3, n)
        v1, l1 = max_cross_corr(x, y, 1000, lag_ms)
        v2, l2 = max_cross_corr(y, x, 1000, lag_ms)
        assert v1 == pytest.approx(v2, abs=1e-12)
        _, ref_lag, prof = naive_max_cross_corr(x, y, lag_samples(1000, lag_ms))
        top = np.sort(prof)[-2:] if prof.size > 1 else prof
        if prof.size == 1 or top[1] - top[0] > 1e-9:
            assert l1 == -l2 == ref_lag


def test_oracle_equivalence_on_random_pairs():
    """1,000 random pairs with lengths 64..10,240 against naive double loops."""
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(64, 10241))
        x = rng.standard_normal(n) * rng.uniform(0.1, 50) + rng.uniform(-100, 100)
        y = 0.5 * x + rng.standard_normal(n) * rng.uniform(0.1, 50)
        rate = 512.0
        L = int(rng.integers(0, min(256, n - 1) + 1))
        lag_ms = L * 1000.0 / rate
        assert lag_samples(rate, lag_ms) == L
        v, lag = max_cross_corr(x, y, rate, lag_ms)
        ref_v, ref_lag, prof = naive_max_cross_corr(x, y, L)
        err = max(abs(pearson(x, y) - naive_pearson(x, y)),
                  abs(covariance(x, y) - naive_covariance(x, y)), abs(v - ref_v))
        worst = max(worst, err)
        assert err < 1e-10
        assert prof[lag + L] == pytest.approx(ref_v, abs=1e-10)
    assert worst < 1e-10


class TestCombinations:
    def test_fifteen(self):
        combos = enumerate_modality_combinations(set(Modality))
        assert len(combos) == 15
        assert combos[0].name == "ECG" and combos[-1].name == "ECG|EOG|EMG|EEG"
        assert [c.name for c in combos if not c.feasible] == ["ECG", "EMG"]

    def test_single_modalities(self):
        (eeg,) = enumerate_modality_combinations({Modality.EEG})
        assert eeg.feasible
        (ecg,) = enumerate_modality_combinations({Modality.ECG})
        assert not ecg.feasible

    def test_canonical_order(self):
        combos = enumerate_modality_combinations(set(Modality))
        sizes = [len(c.modalities) for c in combos]
        assert sizes == sorted(sizes)
        assert ModalityCombination.parse("eeg|emg").name == "EMG|EEG"


class TestExtract:
    @pytest.fixture(scope="class")
    @classmethod
    def segment(cls):
        return segment_record(make_record(seconds=20.0, seed=3)).segments[0]

    def test_counts(self, segment):
        fv = extract_features(segment, ModalityCombination.parse("EMG|EEG"))
        assert len(fv.values) == 45
        assert len(extract_features(segment, ALL_MODALITIES).values) == 108
        assert len(extract_features(segment, ModalityCombination.parse("EEG")).values) == 30

    def test_names_round_trip(self, segment):
        fv = extract_features(segment, ALL_MODALITIES)
        assert len(set(fv.names)) == 108
        assert fv.names[0] == "ECG_H-EOG_Corr"
        for name in fv.names:
            parse_feature_name(name)
        kinds = [parse_feature_name(n)[2] for n in fv.names]
        assert kinds == [Kind.CORR] * 36 + [Kind.CROSS_CORR] * 36 + [Kind.COV] * 36

    def test_values_match_scalar_functions(self, segment):
        fv = extract_features(segment, ModalityCombination.parse("EMG|EEG"))
        chans = {c.meta.label: c.samples for c in segment.channels}
        i = fv.names.index("EMG_C3-EEG_Corr")
        assert fv.values[i] == pytest.approx(pearson(chans["EMG"], chans["C3"]), abs=1e-12)
        i = fv.names.index("C3-EEG_Pz-EEG_Cov")
        assert fv.values[i] == pytest.approx(covariance(chans["C3"], chans["Pz"]), abs=1e-12)
        i = fv.names.index("C4-EEG_Fz-EEG_CrossCorr")
        v, lag = max_cross_corr(chans["C4"], chans["Fz"], 512)
        assert fv.values[i] == pytest.approx(v, abs=1e-12)
        assert fv.lags["C4-EEG_Fz-EEG_CrossCorr"] == lag

    def test_infeasible_and_missing(self, segment):
        with pytest.raises(InfeasibleCombination):
            extract_features(segment, ModalityCombination((Modality.ECG,), feasible=False))
        eeg_only = segment_record(make_record(layout=NINE[4:])).segments[0]
        with pytest.raises(MissingChannel):
            extract_features(eeg_only, ModalityCombination.parse("EMG|EEG"))

    def test_degenerate_pair_is_zero(self):
        rec = make_record(layout=NINE[4:6])
        rec = rec.with_channels([rec.channels[0].__class__(rec.channels[0].meta, np.zeros(10240)),
                                 rec.channels[1]])
        seg = segment_record(rec).segments[0]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            desc = segment_descriptors(seg)
        assert desc.degenerate.tolist() == [True]
        assert desc.corr.tolist() == [0.0] and desc.cross_corr.tolist() == [0.0]
