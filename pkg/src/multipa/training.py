"""Training loop: SGD, early stopping on validation loss, checkpointing."""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .errors import CheckpointSchemaMismatch, NonFiniteLoss
from .features import FeatureNormalizer
from .model import (
    SENTENCE_TASKS,
    WORD_TASKS,
    ModelConfig,
    MultiTaskScorer,
    ScoreRanges,
    pool_frames,
)

CHECKPOINT_SCHEMA = "multipa.checkpoint.v1"


@dataclass
class TrainingConfig:
    batch_size: int = 2
    learning_rate: float = 5e-5
    momentum: float = 0.7
    early_stop_patience: int = 2
    validation_fraction: float = 0.10
    seed: int = 0
    max_epochs: int = 50
    freeze_backbone: bool = False  # skip backbone fine-tuning; frames precomputed once

    def to_dict(self) -> dict:
        return {
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "momentum": self.momentum,
            "early_stop_patience": self.early_stop_patience,
            "validation_fraction": self.validation_fraction,
            "seed": self.seed,
            "max_epochs": self.max_epochs,
            "freeze_backbone": self.freeze_backbone,
        }


@dataclass
class TrainExample:
    """Everything one utterance contributes to a training step.

    static: [W, F_static] float32 (frame-independent fused features)
    samples: raw audio for the backbone (ignored when frames is set)
    word_spans: [W, 2] seconds
    sentence_labels: [4] normalized, NaN where missing
    word_labels: [W, 3] normalized, NaN where missing
    """

    utterance_id: str
    static: torch.Tensor
    samples: torch.Tensor
    word_spans: np.ndarray
    sentence_labels: torch.Tensor
    word_labels: torch.Tensor
    speaker: str = ""
    frames: torch.Tensor | None = None  # precomputed when the backbone is frozen


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float


@dataclass
class TrainingLog:
    epochs: list[EpochStats] = field(default_factory=list)
    best_epoch: int = -1
    stopped_early: bool = False

    def to_json_dict(self) -> dict:
        return {
            "epochs": [vars(e) for e in self.epochs],
            "best_epoch": self.best_epoch,
            "stopped_early": self.stopped_early,
        }


def split_validation(
    examples: list[TrainExample], fraction: float, seed: int
) -> tuple[list[TrainExample], list[TrainExample]]:
    """Hold out ~fraction of examples, stratified by speaker."""
    rng = np.random.default_rng(seed)
    by_speaker: dict[str, list[int]] = {}
    for i, ex in enumerate(examples):
        by_speaker.setdefault(ex.speaker or ex.utterance_id, []).append(i)
    val_idx: set[int] = set()
    # round-robin over speakers chooses a proportional share from each
    for idx in by_speaker.values():
        idx = list(idx)
        rng.shuffle(idx)
        take = int(round(len(idx) * fraction))
        val_idx.update(idx[:take])
    want = max(1, int(round(len(examples) * fraction))) if len(examples) > 1 else 0
    remaining = [i for i in range(len(examples)) if i not in val_idx]
    rng.shuffle(remaining)
    while len(val_idx) < want and remaining:
        val_idx.add(remaining.pop())
    train = [ex for i, ex in enumerate(examples) if i not in val_idx]
    val = [ex for i, ex in enumerate(examples) if i in val_idx]
    if not train:  # degenerate tiny datasets: never empty the training side
        train, val = val, []
    return train, val


def _example_frames(ex: TrainExample, backbone: nn.Module) -> torch.Tensor:
    if ex.frames is not None:
        return ex.frames
    return backbone(ex.samples)


def _batch_forward(
    model: MultiTaskScorer,
    backbone: nn.Module,
    batch: list[TrainExample],
    frame_hop: float,
) -> torch.Tensor:
    """Masked multi-task MSE over one batch."""
    widths = [ex.static.shape[0] for ex in batch]
    w_max = max(widths)
    fused = torch.zeros(len(batch), w_max, model.input_dim)
    pad = torch.ones(len(batch), w_max, dtype=torch.bool)
    for i, ex in enumerate(batch):
        frames = _example_frames(ex, backbone)
        acoustic = pool_frames(ex.word_spans, frames, frame_hop)
        fused[i, : widths[i]] = torch.cat([ex.static, acoustic], dim=1)
        pad[i, : widths[i]] = False
    sentence, word = model(fused, pad)

    loss = torch.zeros(())
    for t, task in enumerate(SENTENCE_TASKS):
        labels = torch.stack([ex.sentence_labels[t] for ex in batch])
        mask = ~torch.isnan(labels)
        if mask.any():
            loss = loss + ((sentence[:, t][mask] - labels[mask]) ** 2).mean()
    for t, _task in enumerate(WORD_TASKS):
        preds, labels = [], []
        for i, ex in enumerate(batch):
            preds.append(word[i, : widths[i], t])
            labels.append(ex.word_labels[:, t])
        preds = torch.cat(preds)
        labels = torch.cat(labels)
        mask = ~torch.isnan(labels)
        if mask.any():
            loss = loss + ((preds[mask] - labels[mask]) ** 2).mean()
    return loss


def train(
    examples: list[TrainExample],
    model: MultiTaskScorer,
    backbone: nn.Module,
    tcfg: TrainingConfig,
    frame_hop: float,
) -> TrainingLog:
    """Fit in place; the model/backbone end at their best-validation state."""
    torch.manual_seed(tcfg.seed)
    train_set, val_set = split_validation(examples, tcfg.validation_fraction, tcfg.seed)
    if not val_set:
        val_set = train_set  # tiny smoke datasets: validate on train

    if tcfg.freeze_backbone:
        for p in backbone.parameters():
            p.requires_grad_(False)
        with torch.no_grad():
            for ex in examples:
                if ex.frames is None:
                    ex.frames = backbone(ex.samples)
        params = list(model.parameters())
    else:
        params = list(model.parameters()) + [p for p in backbone.parameters() if p.requires_grad]
    optimizer = torch.optim.SGD(params, lr=tcfg.learning_rate, momentum=tcfg.momentum)

    shuffler = np.random.default_rng(tcfg.seed + 1)
    log = TrainingLog()
    best_val = math.inf
    best_state: dict | None = None
    bad_epochs = 0

    for epoch in range(1, tcfg.max_epochs + 1):
        model.train()
        backbone.train()
        order = np.arange(len(train_set))
        shuffler.shuffle(order)
        total, steps = 0.0, 0
        for s in range(0, len(order), tcfg.batch_size):
            batch = [train_set[i] for i in order[s : s + tcfg.batch_size]]
            optimizer.zero_grad()
            loss = _batch_forward(model, backbone, batch, frame_hop)
            if not torch.isfinite(loss):
                raise NonFiniteLoss(f"epoch {epoch}, step {steps}: loss={loss.item()}")
            loss.backward()
            optimizer.step()
            total += loss.item()
            steps += 1
        train_loss = total / max(steps, 1)

        model.eval()
        backbone.eval()
        with torch.no_grad():
            val_total = 0.0
            for s in range(0, len(val_set), tcfg.batch_size):
                batch = val_set[s : s + tcfg.batch_size]
                val_total += float(_batch_forward(model, backbone, batch, frame_hop))
            val_loss = val_total / max(1, math.ceil(len(val_set) / tcfg.batch_size))
        log.epochs.append(EpochStats(epoch, train_loss, val_loss))

        if val_loss < best_val:
            best_val = val_loss
            best_state = {
                "model": copy.deepcopy(model.state_dict()),
                "backbone": copy.deepcopy(backbone.state_dict()),
            }
            log.best_epoch = epoch
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= tcfg.early_stop_patience:
                log.stopped_early = True
                break

    if best_state is not None:
        model.load_state_dict(best_state["model"])
        backbone.load_state_dict(best_state["backbone"])
    model.eval()
    backbone.eval()
    return log


# ---------------------------------------------------------------------------
# Checkpoints: weights + config + normalization stats travel together
# ---------------------------------------------------------------------------

def save_checkpoint(
    path: str | Path,
    model: MultiTaskScorer,
    backbone: nn.Module,
    normalizer: FeatureNormalizer,
    ranges: ScoreRanges,
    client_config: dict,
    extra: dict | None = None,
) -> None:
    payload = {
        "schema": CHECKPOINT_SCHEMA,
        "model_config": model.cfg.to_dict(),
        "input_dim": model.input_dim,
        "model_state": model.state_dict(),
        "backbone_state": backbone.state_dict(),
        "normalizer": normalizer.state_dict(),
        "score_ranges": ranges.to_dict(),
        "client_config": client_config,
        "extra": extra or {},
    }
    torch.save(payload, path)


def load_checkpoint(path: str | Path) -> dict:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    if payload.get("schema") != CHECKPOINT_SCHEMA:
        raise CheckpointSchemaMismatch(
            f"checkpoint schema {payload.get('schema')!r} != {CHECKPOINT_SCHEMA!r}"
        )
    return payload


def restore_model(payload: dict) -> MultiTaskScorer:
    cfg = ModelConfig(**payload["model_config"])
    model = MultiTaskScorer(cfg, payload["input_dim"])
    model.load_state_dict(payload["model_state"])
    model.eval()
    return model
