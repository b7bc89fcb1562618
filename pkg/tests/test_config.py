import json

import pytest
import yaml

from multipa.config import AppConfig


def test_round_trip_yaml_and_json(tmp_path):
    cfg = AppConfig()
    cfg.training.seed = 42
    cfg.model.d = 64
    for name in ("a.yaml", "a.json"):
        path = tmp_path / name
        cfg.save(path)
        loaded = AppConfig.load(path)
        assert loaded.training.seed == 42
        assert loaded.model.d == 64
        assert loaded.to_dict() == cfg.to_dict()


def test_env_var_overrides_cache_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("MULTIPA_CACHE_DIR", str(tmp_path / "env-cache"))
    cfg = AppConfig()
    assert cfg.cache_dir == str(tmp_path / "env-cache")
    assert cfg.clients.cache_dir == str(tmp_path / "env-cache")


def test_flag_overrides_beat_file(tmp_path):
    cfg = AppConfig()
    cfg.save(tmp_path / "c.yaml")
    loaded = AppConfig.load(tmp_path / "c.yaml").apply_overrides(
        dataset_dir="/data", seed=7, cache_dir=str(tmp_path / "flag-cache")
    )
    assert loaded.dataset_dir == "/data"
    assert loaded.training.seed == 7
    assert loaded.clients.cache_dir == str(tmp_path / "flag-cache")


def test_unknown_override_rejected():
    with pytest.raises(KeyError):
        AppConfig().apply_overrides(not_a_field=1)


def test_model_ids_configurable_via_file(tmp_path):
    doc = {
        "clients": {
            "asrp_model_id": "synthetic-asr-a",
            "asrt_model_id": "synthetic-asr-b",
            "aligner_model_id": "synthetic-aligner",
            "embedder_model_id": "synthetic-embedder-8",
            "backbone_model_id": "synthetic-backbone-16",
        }
    }
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump(doc))
    cfg = AppConfig.load(path)
    assert cfg.clients.asrp_model_id == "synthetic-asr-a"
    assert cfg.clients.asrt_model_id == "synthetic-asr-b"
