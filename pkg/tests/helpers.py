"""Builders for randomized aligned-transcript fixtures.

All times live on a dyadic grid (multiples of 1/1024 s) so that global
time shifts and span arithmetic are exact in floating point; the shift
invariance checks can then demand bitwise equality.
"""

from __future__ import annotations

import numpy as np

from multipa.phones import INVENTORY
from multipa.transcripts import AlignedTranscript, TimedPhone, TimedWord

GRID = 1.0 / 1024.0
WORD_POOL = ("we", "call", "it", "bear", "sun", "tree", "dog", "a", "runs", "hill")


def random_posterior(rng: np.random.Generator) -> np.ndarray:
    v = rng.random(len(INVENTORY)) + 1e-3
    return v / v.sum()


def build_transcript(
    utterance_id: str,
    words: list[str],
    rng: np.random.Generator,
    source: str = "target",
    base_units: int = 0,
    min_phone_units: int = 1,
) -> AlignedTranscript:
    """Random grid-aligned spans: words never overlap, phones tile each word."""
    cursor = base_units + int(rng.integers(0, 33))
    timed_words = []
    for word in words:
        cursor += int(rng.integers(0, 33))  # inter-word gap in grid units
        n_phones = int(rng.integers(1, 5))
        phones = []
        for p in range(n_phones):
            dur = int(rng.integers(min_phone_units, 17))
            label = INVENTORY[int(rng.integers(1, len(INVENTORY)))]
            phones.append(
                TimedPhone(label, cursor * GRID, (cursor + dur) * GRID, random_posterior(rng))
            )
            cursor += dur
        timed_words.append(TimedWord(word, phones[0].start, phones[-1].end, phones))
    return AlignedTranscript(utterance_id, timed_words, source)


def random_pair(rng: np.random.Generator, max_words: int = 6):
    """Independently timed target/perceived transcripts over one utterance."""
    n_t = int(rng.integers(1, max_words + 1))
    n_p = int(rng.integers(1, max_words + 1))
    target = build_transcript(
        "utt", [str(rng.choice(WORD_POOL)) for _ in range(n_t)], rng, "target"
    )
    perceived = build_transcript(
        "utt", [str(rng.choice(WORD_POOL)) for _ in range(n_p)], rng, "asrp"
    )
    return target, perceived


def identical_pair(rng: np.random.Generator, max_words: int = 6):
    """Perceived is a same-timing copy of the target (identity law input)."""
    n = int(rng.integers(1, max_words + 1))
    target = build_transcript(
        "utt", [str(rng.choice(WORD_POOL)) for _ in range(n)], rng, "target"
    )
    perceived = AlignedTranscript(
        "utt",
        [
            TimedWord(
                w.text,
                w.start,
                w.end,
                [TimedPhone(p.label, p.start, p.end, p.posterior) for p in w.phones],
            )
            for w in target.words
        ],
        "asrp",
    )
    return target, perceived


def random_embeddings(rng: np.random.Generator, n: int, dim: int = 8) -> np.ndarray:
    return rng.standard_normal((n, dim))


# ---------------------------------------------------------------------------
# Brute-force pooling oracle: plain Python loops, element-by-element sums in
# the same dtypes the implementation uses (float64 static, float32 frames).
# ---------------------------------------------------------------------------

def oracle_pool_levels(bundle, frames_f32: np.ndarray, frame_hop: float, normalizer=None) -> np.ndarray:
    word_feats = bundle.word_features
    phone_feats = bundle.phone_features
    if normalizer is not None:
        word_feats = normalizer.word(word_feats)
        phone_feats = normalizer.phone(phone_feats)
    n_frames = frames_f32.shape[0]
    rows = []
    for i in range(bundle.n_words):
        row: list[float] = []
        row.extend(float(v) for v in word_feats[i])
        row.extend(float(v) for v in bundle.phone_vectors[i])
        row.extend(float(v) for v in bundle.word_embed_pairs[i])
        owners = [k for k, w in enumerate(bundle.phone_to_word) if int(w) == i]
        for col in range(phone_feats.shape[1]):
            if owners:
                s = 0.0
                for k in owners:
                    s = s + float(phone_feats[k][col])
                row.append(s / len(owners))
            else:
                row.append(0.0)
        for col in range(bundle.phone_posteriors.shape[1]):
            if owners:
                s = 0.0
                for k in owners:
                    s = s + float(bundle.phone_posteriors[k][col])
                row.append(s / len(owners))
            else:
                row.append(0.0)
        static_f32 = [np.float32(v) for v in row]

        start, end = bundle.word_spans[i]
        a = max(0, int(np.floor(start / frame_hop)))
        b = min(n_frames, int(np.ceil(end / frame_hop)))
        if a >= b:
            center = (start + end) / 2.0
            nearest = int(np.clip(round(center / frame_hop), 0, n_frames - 1))
            a, b = nearest, nearest + 1
        acoustic = []
        for col in range(frames_f32.shape[1]):
            s = np.float32(0.0)
            for f in range(a, b):
                s = np.float32(s + frames_f32[f, col])
            acoustic.append(np.float32(s / np.float32(b - a)))
        rows.append(np.array(static_f32 + acoustic, dtype=np.float32))
    return np.stack(rows)
