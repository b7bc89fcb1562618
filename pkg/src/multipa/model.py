"""The multi-task assessment network.

Word-level fused representations go through transformer encoder layers;
linear heads read sentence scores off the sequence average and Conv1d
heads emit per-word scores.  The acoustic backbone that feeds pool_levels
is fine-tuned jointly, so everything here stays differentiable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .features import FeatureBundle, FeatureNormalizer

SENTENCE_TASKS = ("accuracy", "fluency", "prosody", "total")
WORD_TASKS = ("accuracy", "stress", "total")


@dataclass
class ModelConfig:
    d: int = 768  # fusion width
    k: int = 3  # word-head kernel size
    h: int = 8  # attention heads
    n_fusion_layers: int = 2
    dropout: float = 0.1
    max_words: int = 256

    def __post_init__(self):
        if self.d <= 0 or self.k <= 0 or self.h <= 0 or self.n_fusion_layers <= 0:
            raise ValueError("model dimensions must be positive")
        if self.d % self.h != 0:
            raise ValueError("fusion width must be divisible by the head count")
        if self.k % 2 == 0:
            raise ValueError("word-head kernel size must be odd for same-length output")

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "k": self.k,
            "h": self.h,
            "n_fusion_layers": self.n_fusion_layers,
            "dropout": self.dropout,
            "max_words": self.max_words,
        }


@dataclass
class ScoreOutput:
    sentence: dict[str, float]
    word: list[dict[str, float]]
    completeness: float | None = None  # attached by the completeness metric, never the network

    def to_json_dict(self) -> dict:
        return {
            "sentence": self.sentence,
            "word": self.word,
            "completeness": self.completeness,
        }


# ---------------------------------------------------------------------------
# Level-alignment pooling
# ---------------------------------------------------------------------------
#
# Means are accumulated element by element in input order (not with
# vectorized reductions) so results are reproducible bit for bit against a
# plain-loop reference regardless of backend reduction order.

def _pool_rows_f64(rows: np.ndarray, indices: list[int]) -> np.ndarray:
    acc = np.zeros(rows.shape[1], dtype=np.float64)
    for i in indices:
        acc = acc + rows[i]
    return acc / len(indices)


def pool_static_features(bundle: FeatureBundle, normalizer: FeatureNormalizer | None = None) -> np.ndarray:
    """Frame-independent half of the fused input: one float64 row per word.

    Layout: word features (8) | phone vector | embedding pair |
    mean-pooled phone features (6) | mean-pooled phone posteriors.
    """
    word_feats = bundle.word_features
    phone_feats = bundle.phone_features
    if normalizer is not None:
        word_feats = normalizer.word(word_feats)
        phone_feats = normalizer.phone(phone_feats)

    n_words = bundle.n_words
    pooled_pf = np.zeros((n_words, phone_feats.shape[1]), dtype=np.float64)
    pooled_post = np.zeros((n_words, bundle.phone_posteriors.shape[1]), dtype=np.float64)
    owners: list[list[int]] = [[] for _ in range(n_words)]
    for k, w in enumerate(bundle.phone_to_word):
        owners[int(w)].append(k)
    for i, idx in enumerate(owners):
        if idx:
            pooled_pf[i] = _pool_rows_f64(phone_feats, idx)
            pooled_post[i] = _pool_rows_f64(bundle.phone_posteriors, idx)
    return np.concatenate(
        [word_feats, bundle.phone_vectors, bundle.word_embed_pairs, pooled_pf, pooled_post],
        axis=1,
    )


def word_frame_ranges(word_spans: np.ndarray, n_frames: int, frame_hop: float) -> list[tuple[int, int]]:
    """Frame index range [a, b) covering each word span.

    A word whose span contains no full frame borrows its single nearest
    frame, so zero-length words still produce an acoustic representation.
    """
    ranges = []
    for start, end in word_spans:
        a = max(0, int(np.floor(start / frame_hop)))
        b = min(n_frames, int(np.ceil(end / frame_hop)))
        if a >= b:
            center = (start + end) / 2.0
            nearest = int(np.clip(round(center / frame_hop), 0, n_frames - 1))
            a, b = nearest, nearest + 1
        ranges.append((a, b))
    return ranges


def pool_frames(word_spans: np.ndarray, frames: torch.Tensor, frame_hop: float) -> torch.Tensor:
    """Average acoustic frames over each word span (differentiable)."""
    pooled = []
    for a, b in word_frame_ranges(word_spans, frames.shape[0], frame_hop):
        acc = torch.zeros(frames.shape[1], dtype=frames.dtype)
        for f in range(a, b):
            acc = acc + frames[f]
        pooled.append(acc / (b - a))
    return torch.stack(pooled)


def pool_levels(
    bundle: FeatureBundle,
    frames,
    normalizer: FeatureNormalizer | None = None,
) -> torch.Tensor:
    """One fused vector per target word: all feature levels aligned to words."""
    static = torch.from_numpy(pool_static_features(bundle, normalizer).astype(np.float32))
    frame_tensor = frames.frames if hasattr(frames, "frames") else frames
    hop = frames.frame_hop if hasattr(frames, "frame_hop") else 0.02
    acoustic = pool_frames(bundle.word_spans, frame_tensor, hop)
    return torch.cat([static, acoustic], dim=1)


def fused_input_dim(inventory_size: int, embed_dim: int, backbone_dim: int) -> int:
    return 8 + inventory_size + 2 * embed_dim + 6 + inventory_size + backbone_dim


# ---------------------------------------------------------------------------
# Network
# ---------------------------------------------------------------------------

class MultiTaskScorer(nn.Module):
    """Fusion encoder with linear sentence heads and convolutional word heads.

    Operates in normalized score space ([0, 1] labels); de-normalization
    and clamping to the dataset's label ranges happen at emission time.
    """

    def __init__(self, cfg: ModelConfig, input_dim: int):
        super().__init__()
        self.cfg = cfg
        self.input_dim = input_dim
        self.input_proj = nn.Linear(input_dim, cfg.d)
        self.positions = nn.Embedding(cfg.max_words, cfg.d)
        layer = nn.TransformerEncoderLayer(
            d_model=cfg.d,
            nhead=cfg.h,
            dim_feedforward=2 * cfg.d,
            dropout=cfg.dropout,
            batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, cfg.n_fusion_layers, enable_nested_tensor=False)
        self.dropout = nn.Dropout(cfg.dropout)
        self.sentence_heads = nn.ModuleDict({t: nn.Linear(cfg.d, 1) for t in SENTENCE_TASKS})
        self.word_heads = nn.ModuleDict(
            {t: nn.Conv1d(cfg.d, 1, cfg.k, padding=cfg.k // 2) for t in WORD_TASKS}
        )

    def forward(
        self, fused: torch.Tensor, pad_mask: torch.Tensor | None = None
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """fused: [B, W, input_dim]; pad_mask: [B, W] True where padded.

        Returns sentence scores [B, len(SENTENCE_TASKS)] and word scores
        [B, W, len(WORD_TASKS)] in normalized space.
        """
        b, w, _ = fused.shape
        if w > self.cfg.max_words:
            raise ValueError(f"{w} words exceeds max_words={self.cfg.max_words}")
        x = self.input_proj(fused) + self.positions(torch.arange(w, device=fused.device))[None]
        x = self.dropout(x)
        x = self.encoder(x, src_key_padding_mask=pad_mask)

        if pad_mask is None:
            pooled = x.mean(dim=1)
        else:
            # padded positions must look like the zero padding the conv heads
            # assume, or batch width would bleed into edge-word scores
            x = x.masked_fill(pad_mask[..., None], 0.0)
            keep = (~pad_mask).float()[..., None]
            pooled = x.sum(dim=1) / keep.sum(dim=1).clamp(min=1.0)
        sentence = torch.cat([self.sentence_heads[t](pooled) for t in SENTENCE_TASKS], dim=1)

        xt = x.transpose(1, 2)  # [B, d, W]
        word = torch.cat([self.word_heads[t](xt) for t in WORD_TASKS], dim=1)  # [B, 3, W]
        return sentence, word.transpose(1, 2)


# ---------------------------------------------------------------------------
# Score range handling
# ---------------------------------------------------------------------------

@dataclass
class ScoreRanges:
    sentence: dict[str, tuple[float, float]] = field(
        default_factory=lambda: {
            d: (0.0, 10.0) for d in ("accuracy", "completeness", "fluency", "prosody", "total")
        }
    )
    word: dict[str, tuple[float, float]] = field(
        default_factory=lambda: {d: (0.0, 10.0) for d in WORD_TASKS}
    )

    def normalize_sentence(self, dim: str, value: float) -> float:
        lo, hi = self.sentence[dim]
        return (value - lo) / (hi - lo)

    def normalize_word(self, dim: str, value: float) -> float:
        lo, hi = self.word[dim]
        return (value - lo) / (hi - lo)

    def emit_sentence(self, dim: str, normalized: float) -> float:
        lo, hi = self.sentence[dim]
        return float(np.clip(lo + normalized * (hi - lo), lo, hi))

    def emit_word(self, dim: str, normalized: float) -> float:
        lo, hi = self.word[dim]
        return float(np.clip(lo + normalized * (hi - lo), lo, hi))

    def completeness_value(self, fraction: float) -> float:
        lo, hi = self.sentence["completeness"]
        return float(np.clip(lo + fraction * (hi - lo), lo, hi))

    def to_dict(self) -> dict:
        return {
            "sentence": {k: list(v) for k, v in self.sentence.items()},
            "word": {k: list(v) for k, v in self.word.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScoreRanges":
        return cls(
            sentence={k: tuple(v) for k, v in d["sentence"].items()},
            word={k: tuple(v) for k, v in d["word"].items()},
        )


def emit_scores(
    sentence_raw: torch.Tensor,
    word_raw: torch.Tensor,
    ranges: ScoreRanges,
    completeness: float | None = None,
) -> ScoreOutput:
    """De-normalize network outputs into a clamped ScoreOutput."""
    sentence = {
        t: ranges.emit_sentence(t, float(sentence_raw[i])) for i, t in enumerate(SENTENCE_TASKS)
    }
    words = [
        {t: ranges.emit_word(t, float(word_raw[w, i])) for i, t in enumerate(WORD_TASKS)}
        for w in range(word_raw.shape[0])
    ]
    return ScoreOutput(sentence=sentence, word=words, completeness=completeness)
