"""Transcript types: raw word sequences and time-aligned word/phone tiers."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .phones import INVENTORY, PHONE_INDEX

SOURCE_TARGET = "target"
SOURCE_ASRP = "asrp"
SOURCE_ASRT = "asrt"
SOURCES = (SOURCE_TARGET, SOURCE_ASRP, SOURCE_ASRT)

_PUNCT = re.compile(r"[^a-z' ]+")


def normalize_text(text: str) -> list[str]:
    """Lowercase, strip punctuation (word-internal apostrophes survive),
    collapse whitespace; returns the token list."""
    lowered = _PUNCT.sub(" ", text.lower())
    return [t.strip("'") for t in lowered.split() if t.strip("'")]


@dataclass(frozen=True)
class RawTranscript:
    words: tuple[str, ...]
    source: str

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown transcript source {self.source!r}")
        if any(not w for w in self.words):
            raise ValueError("empty token in transcript")

    @classmethod
    def from_text(cls, text: str, source: str) -> "RawTranscript":
        return cls(tuple(normalize_text(text)), source)

    @property
    def text(self) -> str:
        return " ".join(self.words)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(self.text.encode())
        h.update(self.source.encode())
        return h.hexdigest()[:16]


@dataclass
class TimedPhone:
    label: str
    start: float
    end: float
    posterior: np.ndarray | None = None  # probability over the full inventory

    @property
    def duration(self) -> float:
        return self.end - self.start

    def validate(self) -> "TimedPhone":
        if not (0.0 <= self.start <= self.end):
            raise ValueError(f"phone {self.label}: bad span [{self.start}, {self.end}]")
        if self.posterior is not None:
            p = np.asarray(self.posterior)
            if p.shape != (len(INVENTORY),):
                raise ValueError(f"phone {self.label}: posterior shape {p.shape}")
            if p.min() < -1e-9 or p.max() > 1.0 + 1e-9 or abs(p.sum() - 1.0) > 1e-4:
                raise ValueError(f"phone {self.label}: posterior not a distribution")
        return self

    def self_probability(self) -> float:
        if self.posterior is None:
            return 0.0
        return float(self.posterior[PHONE_INDEX.get(self.label, 0)])


@dataclass
class TimedWord:
    text: str
    start: float
    end: float
    phones: list[TimedPhone] = field(default_factory=list)

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass
class AlignedTranscript:
    utterance_id: str
    words: list[TimedWord]
    source: str

    def __post_init__(self):
        if not self.words:
            raise ValueError("aligned transcript must contain at least one word")

    def phones(self) -> list[TimedPhone]:
        return [p for w in self.words for p in w.phones]

    def phone_to_word(self) -> list[int]:
        """Index of the owning word for each phone, in phone order."""
        return [i for i, w in enumerate(self.words) for _ in w.phones]

    def shifted(self, delta: float) -> "AlignedTranscript":
        words = [
            TimedWord(
                w.text,
                w.start + delta,
                w.end + delta,
                [TimedPhone(p.label, p.start + delta, p.end + delta, p.posterior) for p in w.phones],
            )
            for w in self.words
        ]
        return AlignedTranscript(self.utterance_id, words, self.source)

    def to_json_dict(self) -> dict:
        return {
            "utterance_id": self.utterance_id,
            "source": self.source,
            "words": [
                {
                    "text": w.text,
                    "start": w.start,
                    "end": w.end,
                    "phones": [{"label": p.label, "start": p.start, "end": p.end} for p in w.phones],
                }
                for w in self.words
            ],
        }

    @classmethod
    def from_json_dict(cls, d: dict, posteriors: np.ndarray | None = None) -> "AlignedTranscript":
        words = []
        k = 0
        for wd in d["words"]:
            phones = []
            for pd in wd["phones"]:
                post = posteriors[k] if posteriors is not None else None
                phones.append(TimedPhone(pd["label"], pd["start"], pd["end"], post))
                k += 1
            words.append(TimedWord(wd["text"], wd["start"], wd["end"], phones))
        return cls(d["utterance_id"], words, d["source"])

    def posterior_matrix(self) -> np.ndarray:
        rows = []
        for p in self.phones():
            if p.posterior is None:
                rows.append(np.zeros(len(INVENTORY)))
            else:
                rows.append(np.asarray(p.posterior, dtype=np.float64))
        return np.stack(rows) if rows else np.zeros((0, len(INVENTORY)))


def save_alignment(aligned: AlignedTranscript, json_path: str | Path, sidecar_path: str | Path) -> None:
    """Write alignment JSON plus the posterior sidecar matrix."""
    Path(json_path).write_text(json.dumps(aligned.to_json_dict(), indent=2))
    np.savez_compressed(sidecar_path, **{aligned.utterance_id: aligned.posterior_matrix()})


def load_alignment(json_path: str | Path, sidecar_path: str | Path | None = None) -> AlignedTranscript:
    d = json.loads(Path(json_path).read_text())
    posteriors = None
    if sidecar_path is not None and Path(sidecar_path).exists():
        with np.load(sidecar_path) as z:
            if d["utterance_id"] in z:
                posteriors = z[d["utterance_id"]]
    return AlignedTranscript.from_json_dict(d, posteriors)
