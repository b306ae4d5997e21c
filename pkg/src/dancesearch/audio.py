"""Acoustic feature extraction: 35-dimensional per-frame features.

The pipeline converts a 12-second mono clip into frame-aligned features laid
out as [mel-cepstral deltas x20 | chroma x12 | onset envelope | beat one-hot
| peak one-hot]:

* STFT with a periodic Hann window of 1024 samples, hop 512, frames centered
  by reflection padding, so a clip of N samples yields 1 + N // hop frames.
* Mel-cepstral coefficients from a 40-band triangular mel filterbank
  (0..sr/2, HTK mel scale), log compression and an orthonormal type-II DCT
  keeping 20 coefficients; the feature block is their first-order delta via
  a centered 9-point regression.
* Chroma: power spectrum energy folded onto 12 pitch classes (A440
  reference, C = index 0), L1-normalized per frame; all-zero frames map to
  the uniform 1/12 row.
* Onset descriptors: half-wave-rectified log-mel spectral flux
  (max-normalized per clip), a beat one-hot from an autocorrelation tempo
  estimate over 60-180 BPM with phase search, and a local-peak one-hot
  (maxima above mean + 1 std of the envelope).

Everything here is a pure function of the samples; extraction is bit-exact
reproducible and safe to run per-clip in parallel.
"""

import hashlib
import json
import wave
from dataclasses import dataclass

import numpy as np
from scipy.fft import dct

from .errors import InputError

SAMPLE_RATE = 22050
WINDOW = 1024
HOP = 512
N_MELS = 40
N_MFCC = 20
N_CHROMA = 12
FEATURE_DIM = N_MFCC + N_CHROMA + 3
CLIP_SECONDS = 12.0
DELTA_HALF_WIDTH = 4
TEMPO_MIN_BPM = 60.0
TEMPO_MAX_BPM = 180.0
_LOG_FLOOR = 1e-10


@dataclass
class AudioClip:
    """Mono audio samples in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise InputError(f"AudioClip needs mono 1-D samples, got shape {self.samples.shape}")

    @property
    def duration(self):
        return len(self.samples) / self.sample_rate


@dataclass
class MusicFeatures:
    """Frame-aligned feature matrix [T x 35] plus the hop in seconds."""

    frames: np.ndarray
    hop: float


@dataclass
class FeatureStats:
    """Per-column standardization statistics, tied to the split they came from."""

    mean: np.ndarray
    std: np.ndarray
    split: str
    n_clips: int

    def to_json(self):
        return json.dumps(
            {
                "split": self.split,
                "n_clips": self.n_clips,
                "mean": [float(v) for v in self.mean],
                "std": [float(v) for v in self.std],
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        return cls(
            mean=np.asarray(obj["mean"], dtype=np.float64),
            std=np.asarray(obj["std"], dtype=np.float64),
            split=obj["split"],
            n_clips=int(obj["n_clips"]),
        )

    def sha256(self):
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()


def load_wav(path):
    with wave.open(str(path), "rb") as fh:
        if fh.getnchannels() != 1 or fh.getsampwidth() != 2:
            raise InputError(f"{path}: expected mono 16-bit PCM")
        sr = fh.getframerate()
        raw = fh.readframes(fh.getnframes())
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32767.0
    return AudioClip(samples, sr)


def save_wav(path, clip):
    pcm = np.clip(np.round(clip.samples * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(clip.sample_rate)
        fh.writeframes(pcm.tobytes())


def hann_window(n):
    # periodic Hann
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def stft(clip, window=WINDOW, hop=HOP):
    """Complex spectrogram [T x window//2 + 1]; frames centered via reflection padding."""
    x = clip.samples
    if len(x) < window:
        raise InputError(f"clip of {len(x)} samples is shorter than one {window}-sample window")
    half = window // 2
    padded = np.pad(x, half, mode="reflect")
    n_frames = 1 + (len(padded) - window) // hop
    frames = np.lib.stride_tricks.sliding_window_view(padded, window)[::hop][:n_frames]
    return np.fft.rfft(frames * hann_window(window), axis=1)


def stft_frame_count(n_samples, window=WINDOW, hop=HOP):
    return 1 + (n_samples + 2 * (window // 2) - window) // hop


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(sr=SAMPLE_RATE, n_fft=WINDOW, n_mels=N_MELS):
    """Triangular filters [n_mels x n_fft//2 + 1] spanning 0..sr/2."""
    n_bins = n_fft // 2 + 1
    bin_hz = np.arange(n_bins) * sr / n_fft
    edges = _mel_to_hz(np.linspace(0.0, _hz_to_mel(sr / 2.0), n_mels + 2))
    fb = np.zeros((n_mels, n_bins))
    for i in range(n_mels):
        lo, center, hi = edges[i], edges[i + 1], edges[i + 2]
        rising = (bin_hz - lo) / max(center - lo, 1e-12)
        falling = (hi - bin_hz) / max(hi - center, 1e-12)
        fb[i] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fb


_MEL_FB = None


def _mel_fb():
    global _MEL_FB
    if _MEL_FB is None:
        _MEL_FB = mel_filterbank()
    return _MEL_FB


def log_mel_spectrogram(spec):
    power = np.abs(spec) ** 2
    return np.log(power @ _mel_fb().T + _LOG_FLOOR)


def delta(track, half_width=DELTA_HALF_WIDTH):
    """First-order delta of a [T x d] track via centered regression.

    Edges are replicated, so a constant track has zero delta everywhere and
    a linear ramp maps to its constant slope (away from the edges).
    """
    if track.shape[0] == 0:
        return track.copy()
    w = half_width
    padded = np.pad(track, ((w, w), (0, 0)), mode="edge")
    num = np.zeros_like(track)
    for n in range(1, w + 1):
        num += n * (padded[w + n:w + n + track.shape[0]] - padded[w - n:w - n + track.shape[0]])
    return num / (2.0 * sum(n * n for n in range(1, w + 1)))


def mfcc_delta(spec):
    """[T x 20] delta of the leading mel-cepstral coefficients."""
    cepstra = dct(log_mel_spectrogram(spec), type=2, norm="ortho", axis=1)[:, :N_MFCC]
    return delta(cepstra)


_CHROMA_FOLD = None


def _chroma_fold(sr=SAMPLE_RATE, n_fft=WINDOW):
    """Fold matrix [n_bins x 12] mapping FFT bins onto pitch classes, C = 0."""
    global _CHROMA_FOLD
    if _CHROMA_FOLD is None:
        n_bins = n_fft // 2 + 1
        fold = np.zeros((n_bins, N_CHROMA))
        for k in range(1, n_bins):
            f = k * sr / n_fft
            midi = 69.0 + 12.0 * np.log2(f / 440.0)
            fold[k, int(round(midi)) % N_CHROMA] = 1.0
        _CHROMA_FOLD = fold
    return _CHROMA_FOLD


def chroma(spec):
    """[T x 12] per-frame pitch-class energy, L1-normalized.

    All-zero frames (silence) map to the uniform 1/12 row by convention.
    """
    energy = (np.abs(spec) ** 2) @ _chroma_fold()
    totals = energy.sum(axis=1, keepdims=True)
    uniform = np.full(N_CHROMA, 1.0 / N_CHROMA)
    out = np.where(totals > 0.0, energy / np.where(totals > 0.0, totals, 1.0), uniform)
    return out


def onset_envelope(spec):
    """Half-wave-rectified log-mel flux, max-normalized; first frame is 0."""
    logmel = log_mel_spectrogram(spec)
    flux = np.zeros(spec.shape[0])
    if spec.shape[0] > 1:
        diffs = np.maximum(logmel[1:] - logmel[:-1], 0.0)
        flux[1:] = diffs.mean(axis=1)
    peak = flux.max()
    return flux / peak if peak > 0.0 else flux


def estimate_tempo(envelope, frame_rate):
    """Autocorrelation tempo estimate in BPM over 60-180, or None for silence.

    The envelope is lightly smoothed (so near-half-integer beat periods
    still align at the true lag) and mean-centered (so the triangular
    background of raw correlations does not bias the peak). Correlation
    peaks only occur at multiples of the true period, so octave errors are
    avoided by taking the smallest in-range lag that reaches half the
    maximum, hill-climbing to its local peak, and refining parabolically.
    """
    if envelope.max() <= 0.0:
        return None
    env = np.convolve(envelope, [0.25, 0.5, 0.25], mode="same")
    env -= env.mean()
    n = len(env)
    lag_min = int(np.ceil(frame_rate * 60.0 / TEMPO_MAX_BPM))
    lag_max = min(int(np.floor(frame_rate * 60.0 / TEMPO_MIN_BPM)), n - 2)
    if lag_max < lag_min:
        return None
    ac = np.correlate(env, env, mode="full")[n - 1:]
    window = ac[lag_min:lag_max + 1]
    peak = window.max()
    if peak <= 0.0:
        return None
    qualifying = np.nonzero(window >= 0.5 * peak)[0]
    lag = lag_min + int(qualifying[0])
    while lag < lag_max and ac[lag + 1] > ac[lag]:
        lag += 1
    a, b, c = ac[lag - 1], ac[lag], ac[lag + 1]
    denom = a - 2.0 * b + c
    shift = 0.0 if denom == 0.0 else float(np.clip(0.5 * (a - c) / denom, -0.5, 0.5))
    return 60.0 * frame_rate / (lag + shift)


def beat_frames(envelope, frame_rate, tempo_bpm):
    """Best-phase beat positions for a given tempo."""
    period = 60.0 * frame_rate / tempo_bpm
    n = len(envelope)
    candidates = []
    for phase in range(int(np.ceil(period))):
        positions = np.round(np.arange(phase, n - 0.5, period)).astype(np.int64)
        positions = positions[positions < n]
        candidates.append((envelope[positions].sum(), phase))
    best_phase = max(candidates)[1]
    positions = np.round(np.arange(best_phase, n - 0.5, period)).astype(np.int64)
    return positions[positions < n]


def onset_triplet(spec, frame_rate):
    """[T x 3] block: onset envelope, beat one-hot, local-peak one-hot."""
    env = onset_envelope(spec)
    t = len(env)
    beats = np.zeros(t)
    peaks = np.zeros(t)
    tempo = estimate_tempo(env, frame_rate)
    if tempo is not None:
        beats[beat_frames(env, frame_rate, tempo)] = 1.0
        threshold = env.mean() + env.std()
        for i in range(1, t - 1):
            if env[i] > env[i - 1] and env[i] >= env[i + 1] and env[i] > threshold:
                peaks[i] = 1.0
    return np.column_stack([env, beats, peaks])


def extract_music_features(clip, stats=None):
    """Full 35-dimensional feature matrix for a standard 12-second clip.

    When ``stats`` is given, columns are standardized with the supplied
    training-split mean/std (std floored at 1e-8).
    """
    expected = int(round(CLIP_SECONDS * clip.sample_rate))
    if abs(len(clip.samples) - expected) > 1:
        raise InputError(
            f"expected a {CLIP_SECONDS:.0f}s clip ({expected} samples at {clip.sample_rate} Hz), "
            f"got {len(clip.samples)} samples"
        )
    spec = stft(clip)
    frame_rate = clip.sample_rate / HOP
    frames = np.column_stack([mfcc_delta(spec), chroma(spec), onset_triplet(spec, frame_rate)])
    if stats is not None:
        frames = apply_stats(frames, stats)
    return MusicFeatures(frames=frames, hop=HOP / clip.sample_rate)


def apply_stats(frames, stats):
    return (frames - stats.mean) / np.maximum(stats.std, 1e-8)


def compute_feature_stats(feature_matrices, split="train"):
    """Column mean/std over the concatenated frames of the given clips."""
    if not feature_matrices:
        raise InputError("cannot compute feature stats from an empty set")
    stacked = np.concatenate(feature_matrices, axis=0)
    return FeatureStats(
        mean=stacked.mean(axis=0),
        std=stacked.std(axis=0),
        split=split,
        n_clips=len(feature_matrices),
    )
