"""Unit tests for preamble synthesis, the channel and correlation estimates."""

import numpy as np
import pytest

from src.cfo_crt.core.base import UndefinedPhaseError, ValidationError
from src.cfo_crt.core.crt_engine import build_moduli_set
from src.cfo_crt.core.signal_model import (
    ChannelParams,
    IQBuffer,
    WaveformSpec,
    apply_channel,
    build_preamble,
    correlate,
    doppler_shift,
    doppler_to_cfo,
    estimate_single_interval,
    preamble_layout,
    read_iq_file,
    wrap_to_symmetric,
    write_iq_file,
    zc_sequence,
)

N = 64


def receive(spec, eps, snr_db=float("inf"), phase=0.0, seed=0):
    wave = build_preamble(spec)
    return apply_channel(wave, ChannelParams(eps, snr_db, phase), spec, seed)


class TestZadoffChu:

    @pytest.mark.parametrize("length, root", [(35, 1), (21, 2), (64, 3), (15, 7)])
    def test_unit_modulus(self, length, root):
        z = zc_sequence(length, root)
        assert z.shape == (length,)
        assert np.allclose(np.abs(z) ** 2, 1.0, atol=1e-12)

    def test_length_one(self):
        z = zc_sequence(1)
        assert z.shape == (1,)
        assert abs(z[0]) == pytest.approx(1.0)

    @pytest.mark.parametrize("length", [7, 13, 31])
    def test_ideal_cyclic_autocorrelation(self, length):
        z = zc_sequence(length, 3)
        for lag in range(1, length):
            assert abs(np.vdot(z, np.roll(z, -lag))) < length * 1e-9

    def test_rejects_shared_factor(self):
        with pytest.raises(ValidationError, match="not coprime"):
            zc_sequence(15, 5)


class TestPreamble:

    def test_reference_layout(self, ref_spec):
        wave = build_preamble(ref_spec)
        assert [seg.size for seg in wave.segments] == [70, 42, 30]
        assert wave.layout.total == 142
        assert wave.layout.offsets == (0, 70, 112)
        assert wave.samples.size == 142

    def test_segments_repeat_exactly(self, ref_spec):
        wave = build_preamble(ref_spec)
        for seg, interval in zip(wave.segments, wave.layout.intervals):
            assert np.array_equal(seg[:interval], seg[interval:])

    def test_two_range_toy(self):
        spec = WaveformSpec(n_fft=8, sample_period=1e-6, mset=build_moduli_set([2, 3], 2))
        wave = build_preamble(spec)
        assert [seg.size for seg in wave.segments] == [6, 4]

    def test_segment_lookup(self, ref_spec):
        layout = preamble_layout(ref_spec)
        assert layout.segment(1) == slice(70, 112)
        with pytest.raises(ValidationError, match="out of range"):
            layout.segment(3)

    def test_spec_rejects_long_interval(self, ref_mset):
        with pytest.raises(ValidationError, match="below n_fft"):
            WaveformSpec(n_fft=35, sample_period=1e-6, mset=ref_mset)

    def test_spec_rejects_root_sharing_factor(self, ref_mset):
        with pytest.raises(ValidationError, match="ZC root 3"):
            WaveformSpec(n_fft=N, sample_period=1e-6, mset=ref_mset, zc_root=3)

    def test_subcarrier_spacing(self, ref_spec):
        assert ref_spec.subcarrier_spacing == pytest.approx(15e3)


class TestChannel:

    def test_noiseless_identity(self, ref_spec):
        buf = receive(ref_spec, 0.0)
        assert np.array_equal(buf.samples, build_preamble(ref_spec).samples)

    def test_quarter_band_rotation(self, ref_spec):
        buf = receive(ref_spec, N / 4)
        clean = build_preamble(ref_spec).samples
        step = np.diff(np.unwrap(np.angle(buf.samples * np.conj(clean))))
        assert np.allclose(step, np.pi / 2, atol=1e-9)

    def test_rejects_cfo_outside_band(self, ref_spec):
        with pytest.raises(ValidationError, match="outside"):
            receive(ref_spec, 32.5)

    def test_channel_params_validation(self):
        assert ChannelParams(0.1, 10.0).snr_linear == pytest.approx(10.0)
        assert ChannelParams(0.1, float("inf")).noiseless
        with pytest.raises(ValidationError):
            ChannelParams(0.1, float("nan"))
        with pytest.raises(ValidationError):
            ChannelParams(float("inf"), 10.0)

    def test_noise_variance(self):
        mset = build_moduli_set([2, 3, 5, 7, 11, 13], 2)
        spec = WaveformSpec(n_fft=32768, sample_period=1e-6, mset=mset)
        wave = build_preamble(spec)
        snr_db = 3.0
        eta = 10 ** (snr_db / 10)

        noise = np.concatenate([
            apply_channel(wave, ChannelParams(0.0, snr_db), spec, seed).samples - wave.samples
            for seed in range(13)
        ])
        assert noise.size > 1_000_000
        assert np.mean(np.abs(noise) ** 2) == pytest.approx(1 / eta, rel=0.01)
        assert np.var(noise.real) == pytest.approx(0.5 / eta, rel=0.01)
        assert np.var(noise.imag) == pytest.approx(0.5 / eta, rel=0.01)

    def test_noise_is_seeded(self, ref_spec):
        a = receive(ref_spec, 0.3, snr_db=5.0, seed=42)
        b = receive(ref_spec, 0.3, snr_db=5.0, seed=42)
        c = receive(ref_spec, 0.3, snr_db=5.0, seed=43)
        assert np.array_equal(a.samples, b.samples)
        assert not np.array_equal(a.samples, c.samples)

    def test_buffer_length_must_match_layout(self, ref_spec):
        with pytest.raises(ValidationError, match="layout expects 142") as exc_info:
            IQBuffer(samples=np.ones(140, dtype=complex), layout=preamble_layout(ref_spec))
        assert exc_info.value.details == {"expected": 142, "actual": 140}


class TestCorrelation:

    def test_zero_cfo_gives_interval_length(self, ref_spec):
        buf = receive(ref_spec, 0.0)
        for index, interval in enumerate((35, 21, 15)):
            assert correlate(buf, index, ref_spec) == pytest.approx(complex(interval, 0), abs=1e-9)

    @pytest.mark.parametrize("eps", [0.1, -3.7, 10.1, 31.9])
    def test_magnitude_and_angle(self, ref_spec, eps):
        buf = receive(ref_spec, eps)
        for index, interval in enumerate((35, 21, 15)):
            p = correlate(buf, index, ref_spec)
            assert abs(p) == pytest.approx(interval, rel=1e-12)
            expected = np.exp(2j * np.pi * interval * eps / N)
            assert p / abs(p) == pytest.approx(expected, abs=1e-9)

    def test_channel_phase_cancels(self, ref_spec):
        reference = [correlate(receive(ref_spec, 7.3), i, ref_spec) for i in range(3)]
        for phase in (1.0, 2.0):
            buf = receive(ref_spec, 7.3, phase=phase)
            for index in range(3):
                assert correlate(buf, index, ref_spec) == pytest.approx(reference[index], abs=1e-9)

    def test_zc_root_does_not_change_correlation(self, ref_spec, ref_mset):
        other = WaveformSpec(n_fft=N, sample_period=ref_spec.sample_period, mset=ref_mset, zc_root=2)
        for index in range(3):
            assert correlate(receive(other, -12.4), index, other) == pytest.approx(
                correlate(receive(ref_spec, -12.4), index, ref_spec), abs=1e-9
            )


class TestSingleInterval:

    def test_real_positive_is_zero(self):
        assert estimate_single_interval(35 + 0j, 210, 35) == 0.0

    def test_quarter_turn(self):
        assert estimate_single_interval(35j, 210, 35) == pytest.approx(0.75)

    def test_angle_just_below_full_turn(self):
        estimate = estimate_single_interval(np.exp(-1e-9j), 210, 35)
        assert 6.0 - 1e-6 < estimate < 6.0

    def test_zero_correlation(self):
        with pytest.raises(UndefinedPhaseError):
            estimate_single_interval(0j, 210, 35)

    @pytest.mark.parametrize("eps", [0.0, 0.3, -0.6, 0.9])
    def test_noiseless_within_range(self, ref_spec, eps):
        p = correlate(receive(ref_spec, eps), 0, ref_spec)
        got = wrap_to_symmetric(estimate_single_interval(p, N, 35), N / 35)
        assert got == pytest.approx(eps, abs=1e-9)

    def test_aliasing_outside_range(self, ref_spec):
        p = correlate(receive(ref_spec, 1.1), 0, ref_spec)
        got = wrap_to_symmetric(estimate_single_interval(p, N, 35), N / 35)
        assert got == pytest.approx(1.1 - N / 35, abs=1e-9)

    def test_variance_matches_model_at_high_snr(self, ref_spec):
        snr_db, eps, interval = 15.0, 0.1, 35
        eta = 10 ** (snr_db / 10)
        wave = build_preamble(ref_spec)
        estimates = np.array([
            wrap_to_symmetric(
                estimate_single_interval(
                    correlate(apply_channel(wave, ChannelParams(eps, snr_db), ref_spec, seed), 0, ref_spec),
                    N, interval,
                ),
                N / interval,
            )
            for seed in range(5000)
        ])
        model = N ** 2 / (4 * np.pi ** 2 * interval ** 3 * eta)
        ratio = np.mean((estimates - eps) ** 2) / model
        assert 1 / 1.2 <= ratio <= 1.2


class TestWrap:

    @pytest.mark.parametrize("value, width, expected", [
        (0.3, 64, 0.3),
        (63.0, 64, -1.0),
        (32.0, 64, -32.0),
        (-32.0, 64, -32.0),
    ])
    def test_examples(self, value, width, expected):
        assert wrap_to_symmetric(value, width) == pytest.approx(expected)

    def test_array_input(self):
        got = wrap_to_symmetric(np.array([0.5, 1.5, -1.5]), 2.0)
        assert np.allclose(got, [0.5, -0.5, 0.5])

    def test_rejects_bad_width(self):
        with pytest.raises(ValidationError):
            wrap_to_symmetric(1.0, 0.0)


class TestDoppler:

    def test_shift(self):
        assert doppler_shift(100.0, 2e9) == pytest.approx(667.12819, rel=1e-6)

    def test_normalized_cfo(self):
        assert doppler_to_cfo(100.0, 2e9, 15e3) == pytest.approx(667.12819 / 15e3, rel=1e-6)

    def test_rejects_bad_spacing(self):
        with pytest.raises(ValidationError):
            doppler_to_cfo(100.0, 2e9, 0.0)


class TestIQFiles:

    def test_round_trip(self, ref_spec, temp_dir):
        buf = receive(ref_spec, 4.2, snr_db=8.0, seed=3)
        path = write_iq_file(temp_dir / "capture.iq", buf)
        assert path.stat().st_size == 142 * 16

        loaded = read_iq_file(path, buf.layout)
        assert np.array_equal(loaded.samples, buf.samples)

    def test_odd_value_count(self, ref_spec, temp_dir):
        path = temp_dir / "odd.iq"
        np.zeros(3, dtype="<f8").tofile(path)
        with pytest.raises(ValidationError, match="odd number"):
            read_iq_file(path, preamble_layout(ref_spec))

    def test_truncated_file(self, ref_spec, temp_dir):
        path = temp_dir / "short.iq"
        np.zeros(2 * 100, dtype="<f8").tofile(path)
        with pytest.raises(ValidationError, match="holds 100 samples"):
            read_iq_file(path, preamble_layout(ref_spec))
