"""Shared fixtures: synthetic clients, toy corpus, a small trained model."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
import torch

from multipa.clients import ClientConfig, ModelClients
from multipa.dataset import load_dataset, make_toy_dataset
from multipa.model import ModelConfig
from multipa.pipeline import train_assessor
from multipa.tonespeech import synthesize_clip
from multipa.training import TrainingConfig

FIXTURE_DIR = Path(__file__).parent / "fixtures"
FIXTURE_SENTENCE = ["we", "call", "it", "bear"]


@pytest.fixture(scope="session")
def golden() -> dict:
    return json.loads((FIXTURE_DIR / "golden.json").read_text())


@pytest.fixture(scope="session")
def clients() -> ModelClients:
    return ModelClients(ClientConfig.synthetic())


@pytest.fixture()
def fixture_clip():
    return synthesize_clip(FIXTURE_SENTENCE, "fix-bear")


@pytest.fixture(scope="session")
def toy_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("toy")
    paths = make_toy_dataset(root, n_train=8, n_test=4, seed=0)
    train_records, ranges = load_dataset(paths["train"])
    test_records, _ = load_dataset(paths["test"])
    return {
        "root": root,
        "paths": paths,
        "train": train_records,
        "test": test_records,
        "ranges": ranges,
    }


def small_model_config() -> ModelConfig:
    return ModelConfig(d=32, k=3, h=4, n_fusion_layers=1, dropout=0.0, max_words=64)


def smoke_training_config(**overrides) -> TrainingConfig:
    kwargs = dict(seed=1, max_epochs=5, learning_rate=5e-3, freeze_backbone=True)
    kwargs.update(overrides)
    return TrainingConfig(**kwargs)


@pytest.fixture(scope="session")
def trained_toy(toy_corpus):
    """One small trained assessor shared by service/eval/CLI tests."""
    torch.manual_seed(0)
    return train_assessor(
        toy_corpus["train"],
        toy_corpus["ranges"],
        ClientConfig.synthetic(),
        small_model_config(),
        smoke_training_config(),
    )


def rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)
