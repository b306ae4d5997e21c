import numpy as np
import pytest
import scipy.signal

from dancesearch import audio
from dancesearch.data import click_track
from dancesearch.errors import InputError

SR = audio.SAMPLE_RATE
N12 = int(12.0 * SR)
FRAME_RATE = SR / audio.HOP


def sine_clip(freq, n=N12, amp=0.5):
    t = np.arange(n) / SR
    return audio.AudioClip(amp * np.sin(2.0 * np.pi * freq * t))


def silence(n=N12):
    return audio.AudioClip(np.zeros(n))


# ---------------------------------------------------------------------------
# stft


def test_stft_zero_signal_zero_magnitudes():
    spec = audio.stft(silence(3000))
    assert np.abs(spec).max() == 0.0


def test_stft_frame_count_12s_is_517():
    spec = audio.stft(silence())
    assert spec.shape == (517, 513)
    assert audio.stft_frame_count(N12) == 517


def test_stft_frame_count_matches_scipy_centered():
    # independent DSP oracle for the centered-frame length convention
    for n in (N12, 5000, 70000):
        _, _, z = scipy.signal.stft(
            np.zeros(n), fs=SR, window="hann", nperseg=audio.WINDOW,
            noverlap=audio.WINDOW - audio.HOP, boundary="even", padded=False,
        )
        assert audio.stft_frame_count(n) == z.shape[-1]


def test_stft_too_short_clip_rejected():
    with pytest.raises(InputError):
        audio.stft(silence(500))


def test_stft_parseval_per_frame():
    rng = np.random.default_rng(1)
    x = rng.uniform(-1.0, 1.0, 4096)
    spec = audio.stft(audio.AudioClip(x))
    padded = np.pad(x, audio.WINDOW // 2, mode="reflect")
    win = audio.hann_window(audio.WINDOW)
    for frame in (1, 3, 5):
        seg = padded[frame * audio.HOP:frame * audio.HOP + audio.WINDOW] * win
        # full-spectrum energy from the one-sided rfft bins
        row = spec[frame]
        lhs = (np.abs(row[0]) ** 2 + 2.0 * np.sum(np.abs(row[1:-1]) ** 2) + np.abs(row[-1]) ** 2) / audio.WINDOW
        rhs = np.sum(seg ** 2)
        assert abs(lhs - rhs) / rhs < 1e-6


# ---------------------------------------------------------------------------
# mel cepstra


def test_silence_has_zero_cepstral_deltas():
    deltas = audio.mfcc_delta(audio.stft(silence()))
    assert deltas.shape == (517, audio.N_MFCC)
    assert np.abs(deltas).max() == 0.0


def test_delta_of_linear_ramp_is_constant_slope():
    ramp = 0.5 * np.arange(30.0)[:, None]
    d = audio.delta(ramp)
    w = audio.DELTA_HALF_WIDTH
    np.testing.assert_allclose(d[w:-w], 0.5, atol=1e-12)


def test_noise_and_tone_have_distinguishable_delta_distributions():
    rng = np.random.default_rng(0)
    noise = audio.AudioClip(rng.uniform(-0.5, 0.5, N12))
    dn = audio.mfcc_delta(audio.stft(noise))[:, 1]
    dt = audio.mfcc_delta(audio.stft(sine_clip(440.0)))[:, 1]
    # log compression of near-empty mel bands makes the tone's coefficient
    # track far noisier than broadband noise's
    assert dt.std() > 3.0 * dn.std()


# ---------------------------------------------------------------------------
# chroma


def test_chroma_440_sine_is_pitch_class_A():
    c = audio.chroma(audio.stft(sine_clip(440.0)))
    interior = c[5:-5]
    assert (interior.argmax(axis=1) == 9).mean() >= 0.95


def test_chroma_middle_c_sine_is_pitch_class_C():
    c = audio.chroma(audio.stft(sine_clip(261.63)))
    interior = c[5:-5]
    assert (interior.argmax(axis=1) == 0).mean() >= 0.95


def test_chroma_silence_is_uniform():
    c = audio.chroma(audio.stft(silence()))
    np.testing.assert_allclose(c, 1.0 / 12.0, atol=1e-12)


def test_chroma_rows_normalized_and_nonnegative():
    rng = np.random.default_rng(3)
    clip = audio.AudioClip(rng.uniform(-0.8, 0.8, N12))
    c = audio.chroma(audio.stft(clip))
    assert np.all(c >= 0.0)
    np.testing.assert_allclose(c.sum(axis=1), 1.0, atol=1e-6)


# ---------------------------------------------------------------------------
# onsets, tempo, beats


def test_silence_has_zero_envelope_no_peaks_no_beats():
    spec = audio.stft(silence())
    triplet = audio.onset_triplet(spec, FRAME_RATE)
    assert np.abs(triplet).max() == 0.0


def test_envelope_max_normalized_for_nonsilent_clip():
    env = audio.onset_envelope(audio.stft(sine_clip(330.0)))
    assert env.max() == 1.0


def test_metronome_120bpm_tempo_and_beat_alignment():
    clip = audio.AudioClip(click_track(120.0))
    spec = audio.stft(clip)
    env = audio.onset_envelope(spec)
    tempo = audio.estimate_tempo(env, FRAME_RATE)
    assert abs(tempo - 120.0) <= 2.0
    beats = np.nonzero(audio.onset_triplet(spec, FRAME_RATE)[:, 1])[0]
    clicks = np.round(np.arange(0.0, N12, 0.5 * SR) / audio.HOP).astype(int)
    distance = np.abs(beats[:, None] - clicks[None, :]).min(axis=1)
    assert distance.max() <= 1


def test_tempo_sweep_within_two_bpm():
    hits = 0
    cases = 0
    for bpm in np.linspace(80.0, 170.0, 10):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            clip = audio.AudioClip(click_track(float(bpm), rng=rng, noise=0.01))
            env = audio.onset_envelope(audio.stft(clip))
            est = audio.estimate_tempo(env, FRAME_RATE)
            hits += abs(est - bpm) <= 2.0
            cases += 1
    assert hits / cases >= 0.90


def test_beat_and_peak_columns_are_one_hot():
    clip = audio.AudioClip(click_track(132.0))
    triplet = audio.onset_triplet(audio.stft(clip), FRAME_RATE)
    for col in (1, 2):
        assert set(np.unique(triplet[:, col])) <= {0.0, 1.0}


# ---------------------------------------------------------------------------
# full extraction


def test_feature_width_is_35():
    feats = audio.extract_music_features(sine_clip(220.0))
    assert feats.frames.shape == (517, 35)


def test_silence_feature_composition():
    feats = audio.extract_music_features(silence()).frames
    assert np.abs(feats[:, :20]).max() == 0.0
    np.testing.assert_allclose(feats[:, 20:32], 1.0 / 12.0, atol=1e-12)
    assert np.abs(feats[:, 32:]).max() == 0.0


def test_extraction_is_bit_exact_deterministic():
    clip = audio.AudioClip(click_track(97.0))
    a = audio.extract_music_features(clip).frames
    b = audio.extract_music_features(clip).frames
    np.testing.assert_array_equal(a, b)


def test_wrong_duration_rejected():
    with pytest.raises(InputError):
        audio.extract_music_features(sine_clip(440.0, n=SR * 5))


def test_standardization_applied_when_stats_supplied():
    clip = audio.AudioClip(click_track(110.0))
    raw = audio.extract_music_features(clip).frames
    stats = audio.compute_feature_stats([raw])
    standardized = audio.extract_music_features(clip, stats=stats).frames
    np.testing.assert_allclose(standardized.mean(axis=0), 0.0, atol=1e-9)
    expected = (raw - stats.mean) / np.maximum(stats.std, 1e-8)
    np.testing.assert_array_equal(standardized, expected)


def test_feature_stats_json_round_trip_and_hash():
    rng = np.random.default_rng(9)
    stats = audio.compute_feature_stats([rng.standard_normal((50, 35))])
    clone = audio.FeatureStats.from_json(stats.to_json())
    np.testing.assert_array_equal(stats.mean, clone.mean)
    np.testing.assert_array_equal(stats.std, clone.std)
    assert stats.sha256() == clone.sha256()


def test_wav_round_trip(tmp_path):
    rng = np.random.default_rng(4)
    clip = audio.AudioClip(rng.uniform(-0.9, 0.9, 2000))
    path = tmp_path / "x.wav"
    audio.save_wav(path, clip)
    loaded = audio.load_wav(path)
    assert loaded.sample_rate == SR
    np.testing.assert_allclose(loaded.samples, clip.samples, atol=1.0 / 32767.0)
