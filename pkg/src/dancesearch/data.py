"""Corpus plumbing: segmentation, manifests, splits, and the synthetic corpus.

The synthetic generator produces fully self-contained (motion, audio,
caption) triads whose attributes are physically realized: tempo drives both
the click track and the joint oscillation frequency, the emphasized joint
group carries the large amplitudes, intensity scales amplitude, and each
genre owns a pitched tone the chroma features can see. Captions are
templated from the attribute tags, so retrieval quality on this corpus is
bounded by how many clips share an identical tag tuple.
"""

import dataclasses
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, SplitConstraintError
from . import tdt
from .audio import SAMPLE_RATE, AudioClip, save_wav

FPS = 30
CLIP_SECONDS = 12.0
CLIP_FRAMES = int(CLIP_SECONDS * FPS)  # 360
JOINTS = 52
POSE_DIM = JOINTS * 3 + 3  # per-joint axis-angle plus root translation

TAG_KEYS = ("genre", "tempo_band", "body_emphasis", "intensity")
BODY_GROUPS = {
    "arms": tuple(range(0, 18)),
    "legs": tuple(range(18, 36)),
    "torso": tuple(range(36, 52)),
}
INTENSITY_LEVELS = ("subtle", "moderate", "explosive")
_INTENSITY_AMPLITUDE = {"subtle": 0.25, "moderate": 0.5, "explosive": 0.9}
_OFF_EMPHASIS_FACTOR = 0.15

GENRE_NAMES = (
    "ballet", "hiphop", "krump", "jazz", "waltz", "salsa", "tango", "swing",
    "popping", "locking", "house", "breaking", "contemporary", "flamenco",
    "samba", "disco", "funk", "vogue", "shuffle", "charleston", "bolero",
    "mambo", "polka", "reggaeton", "bachata", "foxtrot", "quickstep", "jive",
    "pasodoble", "rumba", "twist", "boogie",
)


def tempo_band(bpm):
    if bpm < 105:
        return "slow"
    if bpm < 140:
        return "medium"
    return "fast"


def caption_from_tags(tags):
    return (
        f"a {tags['intensity']} {tags['genre']} phrase emphasizing "
        f"{tags['body_emphasis']} at a {tags['tempo_band']} tempo"
    )


@dataclass
class ClipManifestEntry:
    clip_id: str
    motion_path: str
    audio_path: str
    caption: str
    tags: dict
    performer: str
    split: str = ""
    features_path: str = ""
    bpm: float = 0.0  # generator ground truth; 0 when unknown

    def to_json(self):
        return json.dumps(dataclasses.asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line):
        obj = json.loads(line)
        return cls(**obj)


def write_manifest(path, entries):
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(entry.to_json() + "\n")


def read_manifest(path, check_paths=True):
    """Load a JSON-lines manifest; relative paths resolve against its directory."""
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                entry = ClipManifestEntry.from_json(line)
            except (json.JSONDecodeError, TypeError) as exc:
                raise InputError(f"{path}:{lineno}: bad manifest line: {exc}") from exc
            if entry.clip_id in seen:
                raise InputError(f"{path}:{lineno}: duplicate clip_id {entry.clip_id!r}")
            seen.add(entry.clip_id)
            for attr in ("motion_path", "audio_path", "features_path"):
                p = getattr(entry, attr)
                if p and not os.path.isabs(p):
                    setattr(entry, attr, os.path.join(base, p))
            entries.append(entry)
    if check_paths:
        missing = [
            (e.clip_id, p)
            for e in entries
            for p in (e.motion_path, e.audio_path)
            if p and not os.path.exists(p)
        ]
        if missing:
            listing = "; ".join(f"{cid}: {p}" for cid, p in missing[:10])
            raise InputError(f"{len(missing)} unresolvable manifest paths: {listing}")
    return entries


def segment(frames, fps=FPS):
    """Split a long pose sequence into consecutive 12-second clips.

    Non-overlapping 360-frame windows; any trailing remainder shorter than
    a full clip is discarded.
    """
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2:
        raise InputError(f"segment expects [T x p] frames, got shape {frames.shape}")
    if frames.shape[0] < CLIP_FRAMES:
        raise InputError(
            f"sequence of {frames.shape[0]} frames is shorter than one "
            f"{CLIP_FRAMES}-frame clip"
        )
    n_clips = frames.shape[0] // CLIP_FRAMES
    return [frames[i * CLIP_FRAMES:(i + 1) * CLIP_FRAMES].copy() for i in range(n_clips)]


# ---------------------------------------------------------------------------
# split protocol

_MAX_SPLIT_ATTEMPTS = 25


def make_splits(entries, ratios=(0.8, 0.1, 0.1), seed=0):
    """Assign train/val/test at the clip level, stratified by (genre, performer).

    Within each genre, clips are interleaved across performers before the
    test/val slices are cut, which spreads performers over splits. The
    result must satisfy: every genre with >= 5 clips appears in the test
    split, and no single performer contributes more than 40% of test clips.
    Deterministic reshuffles are attempted before giving up with a report.
    """
    if abs(sum(ratios) - 1.0) > 1e-9 or len(ratios) != 3:
        raise InputError(f"ratios must be three values summing to 1, got {ratios}")
    by_genre = {}
    for e in entries:
        by_genre.setdefault(e.tags["genre"], []).append(e)

    violations = []
    for attempt in range(_MAX_SPLIT_ATTEMPTS):
        rng = np.random.default_rng([seed, attempt])
        assignment = {}
        for genre in sorted(by_genre):
            clips = by_genre[genre]
            queues = {}
            for e in sorted(clips, key=lambda e: e.clip_id):
                queues.setdefault(e.performer, []).append(e)
            order = sorted(queues)
            rng.shuffle(order)
            for p in order:
                rng.shuffle(queues[p])
            interleaved = []
            while any(queues[p] for p in order):
                for p in order:
                    if queues[p]:
                        interleaved.append(queues[p].pop())
            n = len(interleaved)
            n_test = int(round(n * ratios[2]))
            n_val = int(round(n * ratios[1]))
            if n >= 5 and n_test == 0:
                n_test = 1
            for e in interleaved[:n_test]:
                assignment[e.clip_id] = "test"
            for e in interleaved[n_test:n_test + n_val]:
                assignment[e.clip_id] = "val"
            for e in interleaved[n_test + n_val:]:
                assignment[e.clip_id] = "train"

        problems = _split_problems(entries, assignment)
        if not problems:
            return [dataclasses.replace(e, split=assignment[e.clip_id]) for e in entries]
        violations = problems

    raise SplitConstraintError(
        "split constraints unsatisfiable after "
        f"{_MAX_SPLIT_ATTEMPTS} attempts: " + "; ".join(violations)
    )


def _split_problems(entries, assignment):
    # a corpus too small to shed test clips (every genre under 5) may leave
    # the test split empty; the constraints below then hold vacuously
    problems = []
    if not any(assignment[e.clip_id] == "train" for e in entries):
        problems.append("empty train split")
    by_genre = {}
    for e in entries:
        by_genre.setdefault(e.tags["genre"], []).append(e)
    for genre, clips in sorted(by_genre.items()):
        if len(clips) >= 5 and not any(assignment[e.clip_id] == "test" for e in clips):
            problems.append(f"genre {genre!r} ({len(clips)} clips) missing from test")
    test_entries = [e for e in entries if assignment[e.clip_id] == "test"]
    if test_entries:
        counts = {}
        for e in test_entries:
            counts[e.performer] = counts.get(e.performer, 0) + 1
        worst = max(counts, key=lambda p: (counts[p], p))
        share = counts[worst] / len(test_entries)
        if share > 0.40:
            problems.append(
                f"performer {worst!r} holds {share:.0%} of {len(test_entries)} test clips (> 40%)"
            )
    return problems


# ---------------------------------------------------------------------------
# synthetic corpus

@dataclass
class SynthConfig:
    n_genres: int = 8
    clips_per_genre: int = 12
    performers: int = 6
    rho: float = 1.0  # caption fidelity: 1 = captions describe true tags
    seed: int = 0
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        if not (0.0 <= self.rho <= 1.0):
            raise InputError(f"rho must be in [0, 1], got {self.rho}")
        if self.n_genres < 1 or self.clips_per_genre < 1 or self.performers < 1:
            raise InputError("n_genres, clips_per_genre and performers must be positive")


def genre_name(index):
    if index < len(GENRE_NAMES):
        return GENRE_NAMES[index]
    return f"style{index:02d}"


def pitch_class_frequency(pc):
    # 440 Hz is pitch class 9 (A); C = 0
    return 440.0 * 2.0 ** ((pc - 9) / 12.0)


def click_track(bpm, seconds=CLIP_SECONDS, sample_rate=SAMPLE_RATE, rng=None, noise=0.0):
    """Decaying 1.5 kHz bursts on every beat, optional floor noise."""
    n = int(round(seconds * sample_rate))
    out = np.zeros(n)
    period = 60.0 / bpm * sample_rate
    click_len = int(0.03 * sample_rate)
    t = np.arange(click_len) / sample_rate
    burst = np.exp(-t / 0.008) * np.sin(2.0 * np.pi * 1500.0 * t)
    pos = 0.0
    while int(round(pos)) < n:
        start = int(round(pos))
        stop = min(start + click_len, n)
        out[start:stop] += burst[:stop - start]
        pos += period
    if rng is not None and noise > 0.0:
        out += noise * rng.standard_normal(n)
    return np.clip(out, -1.0, 1.0)


def genre_tone(pc, bpm, seconds=CLIP_SECONDS, sample_rate=SAMPLE_RATE):
    """Genre-pitched tone with amplitude pulsing on the beat."""
    n = int(round(seconds * sample_rate))
    t = np.arange(n) / sample_rate
    beat_hz = bpm / 60.0
    pulse = 0.55 + 0.45 * np.cos(2.0 * np.pi * beat_hz * t)
    return pulse * np.sin(2.0 * np.pi * pitch_class_frequency(pc) * t)


@dataclass
class _GenreSignature:
    name: str
    base_bpm: int
    emphasis: str
    amplitude_class: int
    pitch_class: int
    joint_phases: np.ndarray


def _draw_signatures(cfg, rng):
    signatures = []
    groups = sorted(BODY_GROUPS)
    span = 170 - 80
    for g in range(cfg.n_genres):
        base = 80 + int(round(g * span / max(cfg.n_genres - 1, 1)))
        base = int(np.clip(base + rng.integers(-3, 4), 80, 170))
        signatures.append(
            _GenreSignature(
                name=genre_name(g),
                base_bpm=base,
                emphasis=groups[int(rng.integers(len(groups)))],
                amplitude_class=int(rng.integers(3)),
                pitch_class=g % 12,
                joint_phases=rng.uniform(0.0, 2.0 * np.pi, size=POSE_DIM),
            )
        )
    return signatures


def _clip_tags(sig, rng):
    bpm = int(np.clip(sig.base_bpm + rng.integers(-6, 7), 80, 170))
    groups = sorted(BODY_GROUPS)
    if rng.random() < 0.5:
        emphasis = sig.emphasis
    else:
        others = [g for g in groups if g != sig.emphasis]
        emphasis = others[int(rng.integers(len(others)))]
    step = int(rng.choice([-1, 0, 1], p=[0.25, 0.5, 0.25]))
    intensity = INTENSITY_LEVELS[int(np.clip(sig.amplitude_class + step, 0, 2))]
    tags = {
        "genre": sig.name,
        "tempo_band": tempo_band(bpm),
        "body_emphasis": emphasis,
        "intensity": intensity,
    }
    return bpm, tags


def _random_tags(rng, signatures):
    return {
        "genre": signatures[int(rng.integers(len(signatures)))].name,
        "tempo_band": tempo_band(int(rng.integers(80, 171))),
        "body_emphasis": sorted(BODY_GROUPS)[int(rng.integers(3))],
        "intensity": INTENSITY_LEVELS[int(rng.integers(3))],
    }


def synth_motion(sig, bpm, tags, performer_phase, rng):
    """Per-joint sinusoids at the beat frequency; emphasized group swings wide."""
    amp = _INTENSITY_AMPLITUDE[tags["intensity"]]
    emphasized = set(BODY_GROUPS[tags["body_emphasis"]])
    beat_hz = bpm / 60.0
    t = np.arange(CLIP_FRAMES) / FPS
    motion = np.zeros((CLIP_FRAMES, POSE_DIM))
    phase = 2.0 * np.pi * beat_hz * t
    for j in range(JOINTS):
        joint_amp = amp if j in emphasized else amp * _OFF_EMPHASIS_FACTOR
        for c in range(3):
            d = 3 * j + c
            motion[:, d] = joint_amp * np.sin(phase + sig.joint_phases[d] + performer_phase)
    for c in range(3):  # root sway
        d = 3 * JOINTS + c
        motion[:, d] = 0.1 * np.sin(phase + sig.joint_phases[d] + performer_phase)
    motion += rng.normal(0.0, 0.02, size=motion.shape)
    return motion


def synth_audio(sig, bpm, rng, sample_rate=SAMPLE_RATE):
    clicks = click_track(bpm, CLIP_SECONDS, sample_rate)
    tone = genre_tone(sig.pitch_class, bpm, CLIP_SECONDS, sample_rate)
    mix = 0.6 * clicks + 0.25 * tone + 0.002 * rng.standard_normal(len(clicks))
    return AudioClip(np.clip(mix, -1.0, 1.0), sample_rate)


def synth_generate(cfg, out_dir, split_ratios=(0.8, 0.1, 0.1)):
    """Generate a corpus tree (motion TDT1, audio WAV, manifest) under out_dir.

    Same config (including seed) reproduces the tree bit for bit. Returns
    the manifest entries with splits assigned.
    """
    rng = np.random.default_rng(cfg.seed)
    signatures = _draw_signatures(cfg, rng)
    performer_phases = rng.uniform(0.0, 2.0 * np.pi, size=cfg.performers)

    motion_dir = os.path.join(out_dir, "motion")
    audio_dir = os.path.join(out_dir, "audio")
    os.makedirs(motion_dir, exist_ok=True)
    os.makedirs(audio_dir, exist_ok=True)

    entries = []
    for sig in signatures:
        for i in range(cfg.clips_per_genre):
            performer = (len(entries)) % cfg.performers
            bpm, tags = _clip_tags(sig, rng)
            caption_tags = tags if rng.random() < cfg.rho else _random_tags(rng, signatures)
            caption = caption_from_tags(caption_tags)
            clip_id = f"{sig.name}_{i:03d}"
            motion = synth_motion(sig, bpm, tags, performer_phases[performer], rng)
            clip = synth_audio(sig, bpm, rng)
            tdt.write_tensor(os.path.join(motion_dir, clip_id + ".tdt"), motion)
            save_wav(os.path.join(audio_dir, clip_id + ".wav"), clip)
            entries.append(
                ClipManifestEntry(
                    clip_id=clip_id,
                    motion_path=os.path.join("motion", clip_id + ".tdt"),
                    audio_path=os.path.join("audio", clip_id + ".wav"),
                    caption=caption,
                    tags=tags,
                    performer=f"p{performer:02d}",
                    split="",
                    bpm=float(bpm),
                )
            )

    entries = make_splits(entries, ratios=split_ratios, seed=cfg.seed)
    write_manifest(os.path.join(out_dir, "manifest.jsonl"), entries)
    return read_manifest(os.path.join(out_dir, "manifest.jsonl"))
