"""Application configuration: one serializable object per run.

Every CLI entry point resolves its configuration (file < env < flags) and
writes the result next to its outputs, so any run can be reproduced from
the logged config alone.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .clients import ClientConfig
from .completeness import CompletenessConfig
from .model import ModelConfig
from .training import TrainingConfig

CACHE_ENV_VAR = "MULTIPA_CACHE_DIR"


@dataclass
class AppConfig:
    clients: ClientConfig = field(default_factory=ClientConfig.synthetic)
    model: ModelConfig = field(default_factory=ModelConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    completeness: CompletenessConfig = field(default_factory=CompletenessConfig)
    dataset_dir: str | None = None
    checkpoint_path: str | None = None
    cache_dir: str | None = None
    output_dir: str = "runs"
    host: str = "127.0.0.1"
    port: int = 8000

    def __post_init__(self):
        env_cache = os.environ.get(CACHE_ENV_VAR)
        if env_cache:
            self.cache_dir = env_cache
            self.clients.cache_dir = env_cache

    def to_dict(self) -> dict:
        return {
            "clients": dataclasses.asdict(self.clients),
            "model": self.model.to_dict(),
            "training": self.training.to_dict(),
            "completeness": {"duration_threshold": self.completeness.duration_threshold},
            "dataset_dir": self.dataset_dir,
            "checkpoint_path": self.checkpoint_path,
            "cache_dir": self.cache_dir,
            "output_dir": self.output_dir,
            "host": self.host,
            "port": self.port,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "AppConfig":
        kwargs: dict = {}
        if "clients" in doc:
            kwargs["clients"] = ClientConfig(**doc["clients"])
        if "model" in doc:
            kwargs["model"] = ModelConfig(**doc["model"])
        if "training" in doc:
            kwargs["training"] = TrainingConfig(**doc["training"])
        if "completeness" in doc:
            kwargs["completeness"] = CompletenessConfig(**doc["completeness"])
        for key in ("dataset_dir", "checkpoint_path", "cache_dir", "output_dir", "host", "port"):
            if key in doc:
                kwargs[key] = doc[key]
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "AppConfig":
        path = Path(path)
        text = path.read_text()
        doc = yaml.safe_load(text) if path.suffix in (".yaml", ".yml") else json.loads(text)
        return cls.from_dict(doc)

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        if path.suffix in (".yaml", ".yml"):
            path.write_text(yaml.safe_dump(self.to_dict(), sort_keys=False))
        else:
            path.write_text(json.dumps(self.to_dict(), indent=2))

    def apply_overrides(self, **overrides) -> "AppConfig":
        """Flag-level overrides; None values are ignored."""
        for key, value in overrides.items():
            if value is None:
                continue
            if key == "seed":
                self.training.seed = value
            elif key == "cache_dir":
                self.cache_dir = value
                self.clients.cache_dir = value
            elif hasattr(self, key):
                setattr(self, key, value)
            else:
                raise KeyError(f"unknown config override {key!r}")
        return self
