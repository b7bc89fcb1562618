"""Client configuration and the shared output containers."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

TIER_ASRP = "asrp"
TIER_ASRT = "asrt"

SYNTHETIC_PREFIX = "synthetic"


@dataclass
class ClientConfig:
    """Which pretrained (or synthetic) model backs each client."""

    asrp_model_id: str = "base.en"
    asrt_model_id: str = "medium.en"
    aligner_model_id: str = "charsiu/en_w2v2_fc_10ms"
    embedder_model_id: str = "roberta-base"
    backbone_model_id: str = "facebook/hubert-base-ls960"
    cache_dir: str | None = None
    # diversity between the two ASR tiers matters; identical tiers must be opted into
    allow_same_asr: bool = False
    # which hidden layer of the embedder/backbone to consume; -1 = final
    hidden_layer: int = -1

    def __post_init__(self):
        if self.asrp_model_id == self.asrt_model_id and not self.allow_same_asr:
            raise ValueError(
                "asrp and asrt resolve to the same model; set allow_same_asr=True "
                "if that is intended"
            )

    @classmethod
    def synthetic(cls, cache_dir: str | Path | None = None, **overrides) -> "ClientConfig":
        """A fully offline configuration backed by the tone-speech codec."""
        kwargs = dict(
            asrp_model_id="synthetic-asr-base",
            asrt_model_id="synthetic-asr-large",
            aligner_model_id="synthetic-aligner",
            embedder_model_id="synthetic-embedder-16",
            backbone_model_id="synthetic-backbone-32",
            cache_dir=str(cache_dir) if cache_dir is not None else None,
        )
        kwargs.update(overrides)
        return cls(**kwargs)

    def model_ids(self) -> dict[str, str]:
        return {
            "asrp": self.asrp_model_id,
            "asrt": self.asrt_model_id,
            "aligner": self.aligner_model_id,
            "embedder": self.embedder_model_id,
            "backbone": self.backbone_model_id,
        }


@dataclass
class WordEmbeddingSeq:
    vectors: np.ndarray  # [n_words, dim]

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return int(self.vectors.shape[0])


@dataclass
class AcousticFrameSeq:
    frames: "object"  # torch.Tensor [n_frames, dim]; kept lazy to avoid import cycles
    frame_hop: float

    def __len__(self) -> int:
        return int(self.frames.shape[0])

    @property
    def dim(self) -> int:
        return int(self.frames.shape[1])

    def numpy(self) -> np.ndarray:
        return self.frames.detach().cpu().numpy()


def is_synthetic(model_id: str) -> bool:
    return model_id.startswith(SYNTHETIC_PREFIX)


def trailing_dim(model_id: str, default: int) -> int:
    """Parse a trailing -<int> dimension suffix from a synthetic model id."""
    tail = model_id.rsplit("-", 1)[-1]
    return int(tail) if tail.isdigit() else default
