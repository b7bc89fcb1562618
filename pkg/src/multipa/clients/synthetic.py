"""Offline client backends driven by the tone-speech codec.

These stand in for the pretrained ASR / aligner / embedder / acoustic
models during tests, fixtures and desk-scale runs.  They honor the same
contracts (determinism, error signaling, shapes) as the real adapters.
"""

from __future__ import annotations

import hashlib

import numpy as np
import torch
from torch import nn

from .. import tonespeech
from ..audio import AudioClip
from ..errors import AlignmentFailure, EmptyTranscript
from ..phones import INVENTORY, word_to_phones
from ..transcripts import AlignedTranscript, RawTranscript, TimedPhone, TimedWord
from .base import AcousticFrameSeq, WordEmbeddingSeq, trailing_dim


class ToneAsr:
    """Recognizer for tone-coded audio; deterministic by construction."""

    def __init__(self, model_id: str):
        self.model_id = model_id

    def transcribe(self, audio: AudioClip, source: str) -> RawTranscript:
        decoded = tonespeech.recognize_words(audio.samples)
        words = tuple(w for w, _ in decoded)
        if not words:
            raise EmptyTranscript(f"{audio.id}: no speech recognized")
        return RawTranscript(words, source)


class ToneAligner:
    """Forced aligner for tone-coded audio.

    Words present in the signal keep their acoustic spans; words the signal
    does not support collapse to near-zero spans, which is exactly the
    behavior the completeness metric relies on.
    """

    def __init__(self, model_id: str):
        self.model_id = model_id

    def align(self, transcript: RawTranscript, audio: AudioClip) -> AlignedTranscript:
        if not transcript.words:
            raise AlignmentFailure(f"{audio.id}: empty transcript")
        expected: list[str] = []
        owners: list[int] = []
        for w, word in enumerate(transcript.words):
            phones = word_to_phones(word) or ["ah"]  # never leave a word phone-less
            expected.extend(phones)
            owners.extend([w] * len(phones))
        spans = tonespeech.align_phones(expected, audio.samples)
        if not any(s.matched for s in spans):
            raise AlignmentFailure(f"{audio.id}: no phone could be placed on the signal")
        words: list[TimedWord] = []
        for w, word in enumerate(transcript.words):
            phones = [
                TimedPhone(s.label, s.start, s.end, s.posterior).validate()
                for s, owner in zip(spans, owners)
                if owner == w
            ]
            words.append(TimedWord(word, phones[0].start, max(p.end for p in phones), phones))
        return AlignedTranscript(audio.id, words, transcript.source)


class HashEmbedder:
    """Deterministic word embeddings seeded from the word's hash."""

    def __init__(self, model_id: str):
        self.model_id = model_id
        self.dim = trailing_dim(model_id, 16)

    def embed(self, transcript: RawTranscript) -> WordEmbeddingSeq:
        if not transcript.words:
            raise ValueError("cannot embed an empty transcript")
        vecs = np.stack([self._word_vector(w) for w in transcript.words])
        return WordEmbeddingSeq(vecs)

    def _word_vector(self, word: str) -> np.ndarray:
        seed = int.from_bytes(hashlib.sha256(word.encode()).digest()[:8], "little")
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(self.dim)
        return (v / np.linalg.norm(v)).astype(np.float64)


class ToneBackbone(nn.Module):
    """Trainable acoustic frame encoder for tone-coded audio.

    A fixed sine/cosine filterbank (the frozen feature extractor) measures
    band magnitudes every 20 ms; a trainable linear projection on top is
    the part that fine-tunes.  Gradients flow from the assessment loss all
    the way into this module.
    """

    FRAME_HOP = 0.02  # seconds
    _HOP = 320
    _WIN = 400
    _N_BANDS = 24

    def __init__(self, model_id: str):
        super().__init__()
        self.model_id = model_id
        self.out_dim = trailing_dim(model_id, 32)
        t = torch.arange(self._WIN, dtype=torch.float32) / 16000.0
        freqs = torch.linspace(250.0, 2500.0, self._N_BANDS)
        window = torch.hann_window(self._WIN)
        self.register_buffer("sin_bank", torch.sin(2 * torch.pi * freqs[:, None] * t[None, :]) * window)
        self.register_buffer("cos_bank", torch.cos(2 * torch.pi * freqs[:, None] * t[None, :]) * window)
        self.projection = nn.Linear(self._N_BANDS, self.out_dim)
        with torch.no_grad():  # deterministic init regardless of ambient RNG state
            gen = torch.Generator().manual_seed(0x5EED)
            self.projection.weight.copy_(
                torch.randn(self.out_dim, self._N_BANDS, generator=gen) / self._N_BANDS**0.5
            )
            self.projection.bias.zero_()

    def forward(self, samples: torch.Tensor) -> torch.Tensor:
        if samples.numel() < self._WIN:
            raise ValueError("audio shorter than one analysis window")
        frames = samples.unfold(0, self._WIN, self._HOP)  # [n_frames, win]
        s = frames @ self.sin_bank.T
        c = frames @ self.cos_bank.T
        magnitude = torch.sqrt(s**2 + c**2 + 1e-8)
        return self.projection(torch.log1p(magnitude))

    def encode(self, audio: AudioClip) -> AcousticFrameSeq:
        samples = torch.as_tensor(audio.samples, dtype=torch.float32)
        return AcousticFrameSeq(self.forward(samples), self.FRAME_HOP)


def posterior_inventory_size() -> int:
    return len(INVENTORY)
