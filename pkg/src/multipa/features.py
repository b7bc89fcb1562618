"""Hand-crafted alignment features from a pair of aligned transcripts.

All operations are pure functions of their inputs.  The target transcript
drives the feature geometry: one word-feature row per target word, one
phone-feature row per target phone.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MultipaError
from .phones import INVENTORY, PHONE_INDEX
from .transcripts import AlignedTranscript, TimedWord

BUNDLE_SCHEMA = "multipa.feature_bundle.v1"

WORD_FEATURE_NAMES = (
    "duration",
    "interval",
    "time_diff_start",
    "time_diff_end",
    "distance",
    "aligned_word_count",
    "phone_distance",
    "phone_ratio",
)
PHONE_FEATURE_NAMES = (
    "duration",
    "interval",
    "time_diff",
    "aligned_phone_count",
    "phone_prob_target",
    "phone_prob_perceived",
)


# ---------------------------------------------------------------------------
# Levenshtein distance
# ---------------------------------------------------------------------------

def _lev_two_row(a: np.ndarray, b: np.ndarray) -> int:
    """Unit-cost edit distance over integer code arrays, two rolling rows."""
    la, lb = len(a), len(b)
    prev = np.arange(lb + 1, dtype=np.int64)
    cur = np.empty(lb + 1, dtype=np.int64)
    for i in range(1, la + 1):
        cur[0] = i
        ai = a[i - 1]
        for j in range(1, lb + 1):
            best = prev[j - 1] + (0 if ai == b[j - 1] else 1)
            if prev[j] + 1 < best:
                best = prev[j] + 1
            if cur[j - 1] + 1 < best:
                best = cur[j - 1] + 1
            cur[j] = best
        prev, cur = cur, prev
    return int(prev[lb])


try:  # the jitted kernel makes corpus-scale feature extraction cheap
    from numba import njit

    _lev_kernel = njit(cache=True)(_lev_two_row)
except ImportError:  # pragma: no cover - numba is a declared dependency
    _lev_kernel = _lev_two_row


def _encode(seq, vocab: dict) -> np.ndarray:
    codes = np.empty(len(seq), dtype=np.int32)
    for i, tok in enumerate(seq):
        codes[i] = vocab.setdefault(tok, len(vocab))
    return codes


def levenshtein(a, b) -> int:
    """Edit distance between two token sequences.

    Strings count per character; any other sequence counts per element.
    Symmetric, zero iff the sequences are equal.
    """
    vocab: dict = {}
    return int(_lev_kernel(_encode(a, vocab), _encode(b, vocab)))


# ---------------------------------------------------------------------------
# Cross-transcript alignment by time overlap
# ---------------------------------------------------------------------------

def spans_overlap(a_start: float, a_end: float, b_start: float, b_end: float) -> bool:
    """Strictly positive temporal overlap."""
    return min(a_end, b_end) - max(a_start, b_start) > 0.0


@dataclass
class WordPairAlignment:
    """For each target word, the time-ordered perceived word indices it overlaps."""

    pairs: list[list[int]]


def align_words_by_time(target: AlignedTranscript, perceived: AlignedTranscript) -> WordPairAlignment:
    pairs = []
    for tw in target.words:
        hits = [
            j
            for j, pw in enumerate(perceived.words)
            if spans_overlap(tw.start, tw.end, pw.start, pw.end)
        ]
        pairs.append(hits)
    return WordPairAlignment(pairs)


def _canonical_origin(target: AlignedTranscript, perceived: AlignedTranscript) -> float:
    """Shift-invariant time origin: the earliest word onset in either transcript.

    Leading-gap intervals are measured from here, so a global shift of both
    transcripts leaves every feature untouched.
    """
    return min(target.words[0].start, perceived.words[0].start)


# ---------------------------------------------------------------------------
# Word-level features
# ---------------------------------------------------------------------------

@dataclass
class WordFeatureVector:
    duration: float
    interval: float
    time_diff_start: float
    time_diff_end: float
    distance: float
    aligned_word_count: float
    phone_distance: float
    phone_ratio: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.duration,
                self.interval,
                self.time_diff_start,
                self.time_diff_end,
                self.distance,
                self.aligned_word_count,
                self.phone_distance,
                self.phone_ratio,
            ],
            dtype=np.float64,
        )


def _phone_labels(word: TimedWord) -> list[str]:
    return [p.label for p in word.phones]


def compute_word_features(
    target: AlignedTranscript,
    perceived: AlignedTranscript,
    wpa: WordPairAlignment,
) -> list[WordFeatureVector]:
    if len(wpa.pairs) != len(target.words):
        raise ValueError("alignment does not match the target transcript")
    origin = _canonical_origin(target, perceived)
    out = []
    for i, tw in enumerate(target.words):
        duration = tw.end - tw.start
        interval = tw.start - (target.words[i - 1].end if i > 0 else origin)
        aligned = wpa.pairs[i]
        if aligned:
            merged_start = min(perceived.words[j].start for j in aligned)
            merged_end = max(perceived.words[j].end for j in aligned)
            concat = "".join(perceived.words[j].text for j in aligned)
            perc_phones = [lab for j in aligned for lab in _phone_labels(perceived.words[j])]
            n_perc = len(perc_phones)
            vec = WordFeatureVector(
                duration=duration,
                interval=interval,
                time_diff_start=tw.start - merged_start,
                time_diff_end=tw.end - merged_end,
                distance=float(levenshtein(tw.text, concat)),
                aligned_word_count=float(len(aligned)),
                phone_distance=float(levenshtein(_phone_labels(tw), perc_phones)),
                phone_ratio=len(tw.phones) / n_perc if n_perc else 0.0,
            )
        else:
            # unaligned sentinels: the limit of the aligned case as overlap -> 0
            vec = WordFeatureVector(
                duration=duration,
                interval=interval,
                time_diff_start=duration,
                time_diff_end=duration,
                distance=float(len(tw.text)),
                aligned_word_count=0.0,
                phone_distance=float(len(tw.phones)),
                phone_ratio=0.0,
            )
        out.append(vec)
    return out


# ---------------------------------------------------------------------------
# Phone-level features
# ---------------------------------------------------------------------------

@dataclass
class PhoneFeatureVector:
    duration: float
    interval: float
    time_diff: float
    aligned_phone_count: float
    phone_prob_target: float
    phone_prob_perceived: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.duration,
                self.interval,
                self.time_diff,
                self.aligned_phone_count,
                self.phone_prob_target,
                self.phone_prob_perceived,
            ],
            dtype=np.float64,
        )


def compute_phone_features(
    target: AlignedTranscript, perceived: AlignedTranscript
) -> list[PhoneFeatureVector]:
    origin = _canonical_origin(target, perceived)
    t_phones = target.phones()
    p_phones = perceived.phones()
    out = []
    for k, tp in enumerate(t_phones):
        duration = tp.end - tp.start
        interval = tp.start - (t_phones[k - 1].end if k > 0 else origin)
        hits = [q for q in p_phones if spans_overlap(tp.start, tp.end, q.start, q.end)]
        if hits:
            merged_start = min(q.start for q in hits)
            time_diff = tp.start - merged_start
            prob_perceived = float(np.mean([q.self_probability() for q in hits]))
            count = float(len(hits))
        else:
            time_diff = duration
            prob_perceived = 0.0
            count = 0.0
        out.append(
            PhoneFeatureVector(
                duration=duration,
                interval=interval,
                time_diff=time_diff,
                aligned_phone_count=count,
                phone_prob_target=tp.self_probability(),
                phone_prob_perceived=prob_perceived,
            )
        )
    return out


# ---------------------------------------------------------------------------
# The assembled per-utterance bundle
# ---------------------------------------------------------------------------

@dataclass
class FeatureBundle:
    utterance_id: str
    word_features: np.ndarray  # [W, 8]
    phone_features: np.ndarray  # [P, 6]
    phone_vectors: np.ndarray  # [W, inventory] phone counts per word
    word_embed_pairs: np.ndarray  # [W, 2 * embed_dim]
    phone_posteriors: np.ndarray  # [P, inventory]
    phone_to_word: np.ndarray  # [P] owning word index
    word_spans: np.ndarray  # [W, 2] start/end seconds, for acoustic pooling
    word_texts: tuple[str, ...]

    @property
    def n_words(self) -> int:
        return int(self.word_features.shape[0])

    @property
    def n_phones(self) -> int:
        return int(self.phone_features.shape[0])

    def validate(self) -> "FeatureBundle":
        if self.word_features.shape != (self.n_words, len(WORD_FEATURE_NAMES)):
            raise ValueError("word_features shape mismatch")
        if self.phone_features.shape != (self.n_phones, len(PHONE_FEATURE_NAMES)):
            raise ValueError("phone_features shape mismatch")
        if len(self.phone_to_word) != self.n_phones:
            raise ValueError("phone_to_word does not cover every target phone")
        if self.phone_vectors.shape != (self.n_words, len(INVENTORY)):
            raise ValueError("phone_vectors shape mismatch")
        if len(self.word_texts) != self.n_words:
            raise ValueError("word_texts length mismatch")
        return self

    def arrays(self) -> dict[str, np.ndarray]:
        return {
            "word_features": self.word_features,
            "phone_features": self.phone_features,
            "phone_vectors": self.phone_vectors,
            "word_embed_pairs": self.word_embed_pairs,
            "phone_posteriors": self.phone_posteriors,
            "phone_to_word": self.phone_to_word,
            "word_spans": self.word_spans,
        }

    def content_digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.utterance_id.encode())
        h.update("\x00".join(self.word_texts).encode())
        for name in sorted(self.arrays()):
            h.update(name.encode())
            h.update(np.ascontiguousarray(self.arrays()[name]).tobytes())
        return h.hexdigest()

    def to_json_dict(self) -> dict:
        return {
            "schema": BUNDLE_SCHEMA,
            "utterance_id": self.utterance_id,
            "word_texts": list(self.word_texts),
            "word_feature_names": list(WORD_FEATURE_NAMES),
            "phone_feature_names": list(PHONE_FEATURE_NAMES),
            **{k: v.tolist() for k, v in self.arrays().items()},
        }


def build_feature_bundle(
    target: AlignedTranscript,
    perceived: AlignedTranscript,
    embeddings_target,
    embeddings_perceived,
) -> FeatureBundle:
    """Assemble every feature stream the assessment model consumes."""
    emb_t = np.asarray(embeddings_target.vectors if hasattr(embeddings_target, "vectors") else embeddings_target, dtype=np.float64)
    emb_p = np.asarray(embeddings_perceived.vectors if hasattr(embeddings_perceived, "vectors") else embeddings_perceived, dtype=np.float64)
    if emb_t.shape[0] != len(target.words):
        raise ValueError("target embedding count != target word count")
    if emb_p.shape[0] != len(perceived.words):
        raise ValueError("perceived embedding count != perceived word count")

    wpa = align_words_by_time(target, perceived)
    word_feats = np.stack([v.as_array() for v in compute_word_features(target, perceived, wpa)])
    phone_feats_list = compute_phone_features(target, perceived)
    phone_feats = (
        np.stack([v.as_array() for v in phone_feats_list])
        if phone_feats_list
        else np.zeros((0, len(PHONE_FEATURE_NAMES)))
    )

    phone_vectors = np.zeros((len(target.words), len(INVENTORY)), dtype=np.float64)
    for i, tw in enumerate(target.words):
        for p in tw.phones:
            phone_vectors[i, PHONE_INDEX.get(p.label, 0)] += 1.0

    dim = emb_t.shape[1]
    pairs = np.zeros((len(target.words), 2 * dim), dtype=np.float64)
    for i, hits in enumerate(wpa.pairs):
        pairs[i, :dim] = emb_t[i]
        if hits:
            # several perceived words may share one target word: average them
            pairs[i, dim:] = emb_p[hits].mean(axis=0)

    return FeatureBundle(
        utterance_id=target.utterance_id,
        word_features=word_feats,
        phone_features=phone_feats,
        phone_vectors=phone_vectors,
        word_embed_pairs=pairs,
        phone_posteriors=target.posterior_matrix(),
        phone_to_word=np.asarray(target.phone_to_word(), dtype=np.int64),
        word_spans=np.array([[w.start, w.end] for w in target.words], dtype=np.float64),
        word_texts=tuple(w.text for w in target.words),
    ).validate()


def save_bundle(bundle: FeatureBundle, path: str | Path) -> None:
    meta = {
        "schema": BUNDLE_SCHEMA,
        "utterance_id": bundle.utterance_id,
        "word_texts": list(bundle.word_texts),
    }
    np.savez(
        path,
        __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
        **bundle.arrays(),
    )


def load_bundle(path: str | Path) -> FeatureBundle:
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(bytes(z["__meta__"]).decode())
        if meta.get("schema") != BUNDLE_SCHEMA:
            raise MultipaError(f"unknown feature bundle schema {meta.get('schema')!r}")
        return FeatureBundle(
            utterance_id=meta["utterance_id"],
            word_texts=tuple(meta["word_texts"]),
            word_features=z["word_features"],
            phone_features=z["phone_features"],
            phone_vectors=z["phone_vectors"],
            word_embed_pairs=z["word_embed_pairs"],
            phone_posteriors=z["phone_posteriors"],
            phone_to_word=z["phone_to_word"],
            word_spans=z["word_spans"],
        ).validate()


# ---------------------------------------------------------------------------
# Feature scaling (statistics live with the trained model)
# ---------------------------------------------------------------------------

@dataclass
class FeatureNormalizer:
    """Z-scores the scalar feature blocks; fit on the training split only."""

    word_mean: np.ndarray
    word_std: np.ndarray
    phone_mean: np.ndarray
    phone_std: np.ndarray

    @classmethod
    def fit(cls, bundles: list[FeatureBundle]) -> "FeatureNormalizer":
        words = np.concatenate([b.word_features for b in bundles], axis=0)
        phones = np.concatenate(
            [b.phone_features for b in bundles if b.n_phones], axis=0
        )
        def _std(x):
            s = x.std(axis=0)
            s[s == 0.0] = 1.0
            return s
        return cls(words.mean(axis=0), _std(words), phones.mean(axis=0), _std(phones))

    def word(self, x: np.ndarray) -> np.ndarray:
        return (x - self.word_mean) / self.word_std

    def phone(self, x: np.ndarray) -> np.ndarray:
        return (x - self.phone_mean) / self.phone_std

    def state_dict(self) -> dict:
        return {
            "word_mean": self.word_mean.tolist(),
            "word_std": self.word_std.tolist(),
            "phone_mean": self.phone_mean.tolist(),
            "phone_std": self.phone_std.tolist(),
        }

    @classmethod
    def from_state_dict(cls, d: dict) -> "FeatureNormalizer":
        return cls(
            np.asarray(d["word_mean"]),
            np.asarray(d["word_std"]),
            np.asarray(d["phone_mean"]),
            np.asarray(d["phone_std"]),
        )
