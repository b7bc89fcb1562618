"""Uniform clients over the four external model families.

`ModelClients` hides loading, caching and failure signaling: callers get
transcribe / force_align / word_embeddings / acoustic_frames and a stable
set of exceptions.  Loaded backends are shared read-only across threads;
loading itself is serialized.
"""

from __future__ import annotations

import threading

import numpy as np

from ..audio import AudioClip
from ..errors import EmptyTranscript
from ..transcripts import AlignedTranscript, RawTranscript
from .base import (
    TIER_ASRP,
    TIER_ASRT,
    AcousticFrameSeq,
    ClientConfig,
    WordEmbeddingSeq,
    is_synthetic,
)
from .cache import DiskCache

__all__ = [
    "ClientConfig",
    "ModelClients",
    "AcousticFrameSeq",
    "WordEmbeddingSeq",
    "TIER_ASRP",
    "TIER_ASRT",
]


def _make_asr(model_id: str):
    if is_synthetic(model_id):
        from .synthetic import ToneAsr

        return ToneAsr(model_id)
    from .pretrained import WhisperAsr

    return WhisperAsr(model_id)


def _make_aligner(model_id: str):
    if is_synthetic(model_id):
        from .synthetic import ToneAligner

        return ToneAligner(model_id)
    from .pretrained import CharsiuAligner

    return CharsiuAligner(model_id)


def _make_embedder(model_id: str, hidden_layer: int):
    if is_synthetic(model_id):
        from .synthetic import HashEmbedder

        return HashEmbedder(model_id)
    from .pretrained import RobertaEmbedder

    return RobertaEmbedder(model_id, hidden_layer)


def _make_backbone(model_id: str, hidden_layer: int):
    if is_synthetic(model_id):
        from .synthetic import ToneBackbone

        return ToneBackbone(model_id)
    from .pretrained import HubertBackbone

    return HubertBackbone(model_id, hidden_layer)


class ModelClients:
    def __init__(self, cfg: ClientConfig):
        self.cfg = cfg
        self.cache = DiskCache(cfg.cache_dir) if cfg.cache_dir else None
        self._backends: dict[str, object] = {}
        self._load_lock = threading.Lock()

    def _backend(self, kind: str):
        key = f"{kind}:{self.cfg.model_ids()[kind]}"
        backend = self._backends.get(key)
        if backend is not None:
            return backend
        with self._load_lock:
            backend = self._backends.get(key)
            if backend is None:
                mid = self.cfg.model_ids()[kind]
                if kind in (TIER_ASRP, TIER_ASRT):
                    backend = _make_asr(mid)
                elif kind == "aligner":
                    backend = _make_aligner(mid)
                elif kind == "embedder":
                    backend = _make_embedder(mid, self.cfg.hidden_layer)
                elif kind == "backbone":
                    backend = _make_backbone(mid, self.cfg.hidden_layer)
                else:
                    raise KeyError(kind)
                self._backends[key] = backend
        return backend

    # ---- operations ----

    def transcribe(self, audio: AudioClip, tier: str) -> RawTranscript:
        """Recognize speech with the configured ASR tier (deterministic, greedy)."""
        audio.validate()
        if tier not in (TIER_ASRP, TIER_ASRT):
            raise ValueError(f"unknown ASR tier {tier!r}")
        model_id = self.cfg.model_ids()[tier]
        if self.cache is not None:
            hit = self.cache.get("transcribe", model_id, audio.content_hash())
            if hit is not None:
                words = tuple(hit["__json__"]["words"])
                if not words:
                    raise EmptyTranscript(f"{audio.id}: no speech recognized (cached)")
                return RawTranscript(words, tier)
        try:
            transcript = self._backend(tier).transcribe(audio, tier)
        except EmptyTranscript:
            if self.cache is not None:
                self.cache.put("transcribe", model_id, audio.content_hash(), meta={"words": []})
            raise
        if self.cache is not None:
            self.cache.put(
                "transcribe", model_id, audio.content_hash(), meta={"words": list(transcript.words)}
            )
        return transcript

    def force_align(self, transcript: RawTranscript, audio: AudioClip) -> AlignedTranscript:
        """Time-stamp every transcript word and phone against the audio."""
        audio.validate()
        model_id = self.cfg.aligner_model_id
        if self.cache is not None:
            hit = self.cache.get("align", model_id, audio.content_hash(), transcript.content_hash())
            if hit is not None:
                return AlignedTranscript.from_json_dict(hit["__json__"], hit.get("posteriors"))
        aligned = self._backend("aligner").align(transcript, audio)
        if self.cache is not None:
            self.cache.put(
                "align",
                model_id,
                audio.content_hash(),
                transcript.content_hash(),
                arrays={"posteriors": aligned.posterior_matrix()},
                meta=aligned.to_json_dict(),
            )
        return aligned

    def word_embeddings(self, transcript: RawTranscript) -> WordEmbeddingSeq:
        """One embedding per transcript word (sub-tokens mean-pooled)."""
        model_id = self.cfg.embedder_model_id
        if self.cache is not None:
            hit = self.cache.get("embed", model_id, transcript.content_hash())
            if hit is not None:
                return WordEmbeddingSeq(hit["vectors"])
        seq = self._backend("embedder").embed(transcript)
        if self.cache is not None:
            self.cache.put("embed", model_id, transcript.content_hash(), arrays={"vectors": seq.vectors})
        return seq

    def acoustic_frames(self, audio: AudioClip) -> AcousticFrameSeq:
        """Backbone frame sequence; differentiable so the backbone can fine-tune.

        Never disk-cached: outputs change as the backbone trains.
        """
        audio.validate()
        return self._backend("backbone").encode(audio)

    def backbone_module(self):
        """The torch module behind acoustic_frames, for optimizer registration."""
        backend = self._backend("backbone")
        if hasattr(backend, "torch_module"):
            return backend.torch_module()
        return backend

    def frame_hop(self) -> float:
        return float(self._backend("backbone").FRAME_HOP)

    def embedding_dim(self) -> int:
        probe = RawTranscript(("a",), TIER_ASRP)
        return self.word_embeddings(probe).dim

    def backbone_dim(self) -> int:
        dummy = AudioClip(np.zeros(1600, dtype=np.float32) + 1e-6, 16000, "probe")
        return self.acoustic_frames(dummy).dim
