import filecmp
import os

import numpy as np
import pytest

from dancesearch import audio, data
from dancesearch.errors import InputError, SplitConstraintError


def make_entries(n_genres, performers, clips_per_genre):
    entries = []
    for g in range(n_genres):
        genre = data.genre_name(g)
        for i in range(clips_per_genre):
            entries.append(
                data.ClipManifestEntry(
                    clip_id=f"{genre}_{i:03d}",
                    motion_path="",
                    audio_path="",
                    caption="x",
                    tags={"genre": genre, "tempo_band": "slow",
                          "body_emphasis": "arms", "intensity": "subtle"},
                    performer=f"p{(g * clips_per_genre + i) % performers:02d}",
                )
            )
    return entries


# ---------------------------------------------------------------------------
# segmentation


def test_segment_3600_frames_gives_10_clips():
    clips = data.segment(np.zeros((3600, 4)))
    assert len(clips) == 10
    assert all(c.shape == (360, 4) for c in clips)


def test_segment_drops_trailing_remainder():
    clips = data.segment(np.zeros((1000, 2)))
    assert len(clips) == 2


def test_segment_too_short_rejected():
    with pytest.raises(InputError):
        data.segment(np.zeros((359, 3)))


def test_segment_inverts_concatenation():
    rng = np.random.default_rng(8)
    originals = [rng.standard_normal((360, 5)) for _ in range(4)]
    recovered = data.segment(np.concatenate(originals, axis=0))
    for a, b in zip(originals, recovered):
        np.testing.assert_array_equal(a, b)


def test_fourteen_point_six_hours_is_4380_clips():
    # 14.6 h at 30 FPS; consistent with a corpus of "about 4,000" clips
    total_frames = int(14.6 * 3600 * data.FPS)
    clips = data.segment(np.zeros((total_frames, 1)))
    assert len(clips) == 4380


# ---------------------------------------------------------------------------
# split protocol


def test_splits_cover_every_genre_with_ample_data():
    entries = make_entries(8, 6, 10)
    split_entries = data.make_splits(entries, (0.8, 0.1, 0.1), seed=0)
    for split in ("train", "val", "test"):
        genres = {e.tags["genre"] for e in split_entries if e.split == split}
        assert len(genres) == 8, f"{split} missing genres"


def test_splits_respect_performer_cap():
    entries = make_entries(8, 6, 10)
    split_entries = data.make_splits(entries, (0.8, 0.1, 0.1), seed=1)
    test_clips = [e for e in split_entries if e.split == "test"]
    counts = {}
    for e in test_clips:
        counts[e.performer] = counts.get(e.performer, 0) + 1
    assert max(counts.values()) / len(test_clips) <= 0.40


def test_single_performer_corpus_rejected_with_report():
    entries = make_entries(4, 1, 10)
    with pytest.raises(SplitConstraintError, match="performer"):
        data.make_splits(entries, (0.8, 0.1, 0.1), seed=0)


def test_same_seed_same_assignment():
    entries = make_entries(6, 4, 9)
    a = data.make_splits(entries, (0.8, 0.1, 0.1), seed=7)
    b = data.make_splits(entries, (0.8, 0.1, 0.1), seed=7)
    assert [(e.clip_id, e.split) for e in a] == [(e.clip_id, e.split) for e in b]


def test_bad_ratios_rejected():
    with pytest.raises(InputError):
        data.make_splits(make_entries(2, 2, 6), (0.5, 0.2, 0.2), seed=0)


def test_split_assigned_exactly_once():
    split_entries = data.make_splits(make_entries(5, 3, 8), seed=3)
    assert all(e.split in ("train", "val", "test") for e in split_entries)


# ---------------------------------------------------------------------------
# synthetic corpus


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    cfg = data.SynthConfig(n_genres=6, clips_per_genre=5, performers=4, rho=1.0, seed=11)
    entries = data.synth_generate(cfg, out)
    return out, entries


def test_corpus_rho_one_captions_match_tags(small_corpus):
    _, entries = small_corpus
    for e in entries:
        assert e.caption == data.caption_from_tags(e.tags)


def test_corpus_rho_zero_captions_mostly_diverge(tmp_path):
    cfg = data.SynthConfig(n_genres=6, clips_per_genre=5, performers=4, rho=0.0, seed=11)
    entries = data.synth_generate(cfg, tmp_path / "c0")
    mismatched = sum(e.caption != data.caption_from_tags(e.tags) for e in entries)
    assert mismatched > len(entries) / 2


def test_corpus_manifest_round_trip(small_corpus):
    out, entries = small_corpus
    reread = data.read_manifest(os.path.join(out, "manifest.jsonl"))
    assert [e.to_json() for e in reread] == [e.to_json() for e in entries]


def test_corpus_paths_resolvable_and_shapes(small_corpus):
    _, entries = small_corpus
    from dancesearch import tdt
    e = entries[0]
    motion = tdt.read_tensor(e.motion_path)
    assert motion.shape == (360, 159)
    assert np.abs(motion).max() < 2.0 * np.pi
    clip = audio.load_wav(e.audio_path)
    assert abs(clip.duration - 12.0) < 1e-3


def test_corpus_same_seed_bit_identical(tmp_path):
    cfg = data.SynthConfig(n_genres=3, clips_per_genre=4, performers=3, seed=5)
    a_dir, b_dir = tmp_path / "a", tmp_path / "b"
    ea = data.synth_generate(cfg, a_dir)
    eb = data.synth_generate(cfg, b_dir)
    assert [e.clip_id for e in ea] == [e.clip_id for e in eb]
    for e_a, e_b in zip(ea, eb):
        for attr in ("motion_path", "audio_path"):
            assert filecmp.cmp(getattr(e_a, attr), getattr(e_b, attr), shallow=False)
    manifest_a = open(os.path.join(a_dir, "manifest.jsonl"), "rb").read()
    manifest_b = open(os.path.join(b_dir, "manifest.jsonl"), "rb").read()
    assert manifest_a == manifest_b


def test_corpus_tempo_recoverable_from_audio(small_corpus):
    _, entries = small_corpus
    hits = 0
    for e in entries:
        clip = audio.load_wav(e.audio_path)
        env = audio.onset_envelope(audio.stft(clip))
        est = audio.estimate_tempo(env, clip.sample_rate / audio.HOP)
        hits += est is not None and abs(est - e.bpm) <= 2.0
    assert hits / len(entries) >= 0.90


def test_corpus_motion_emphasizes_tagged_group(small_corpus):
    _, entries = small_corpus
    from dancesearch import tdt
    for e in entries[:10]:
        motion = tdt.read_tensor(e.motion_path)
        group_power = {}
        for name, joints in data.BODY_GROUPS.items():
            dims = [3 * j + c for j in joints for c in range(3)]
            group_power[name] = motion[:, dims].std()
        assert max(group_power, key=group_power.get) == e.tags["body_emphasis"]


def test_duplicate_clip_id_rejected(tmp_path):
    entry = data.ClipManifestEntry(
        clip_id="x", motion_path="", audio_path="", caption="c",
        tags={"genre": "g"}, performer="p")
    path = tmp_path / "m.jsonl"
    with open(path, "w") as fh:
        fh.write(entry.to_json() + "\n")
        fh.write(entry.to_json() + "\n")
    with pytest.raises(InputError, match="duplicate"):
        data.read_manifest(path, check_paths=False)


def test_missing_paths_reported(tmp_path):
    entry = data.ClipManifestEntry(
        clip_id="x", motion_path="nope.tdt", audio_path="nope.wav",
        caption="c", tags={"genre": "g"}, performer="p")
    path = tmp_path / "m.jsonl"
    with open(path, "w") as fh:
        fh.write(entry.to_json() + "\n")
    with pytest.raises(InputError, match="unresolvable"):
        data.read_manifest(path)
