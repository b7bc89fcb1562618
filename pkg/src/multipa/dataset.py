"""Dataset ingestion.

The harness reads one manifest JSON per split:

    {
      "split": "train",
      "score_ranges": {"sentence": {...}, "word": {...}},   # optional
      "utterances": [
        {
          "utterance_id": "spk0_0001",
          "audio": "wav/spk0_0001.wav",            # 16 kHz mono WAV, relative
          "speaker": "spk0",                        # optional
          "target_text": "we call it bear",
          "sentence_labels": {"accuracy": 8, "completeness": 10,
                               "fluency": 9, "prosody": 8, "total": 8},
          "word_labels": [{"accuracy": 8, "stress": 10, "total": 8}, ...]
        }, ...
      ]
    }

`convert_speechocean` maps the corpus's native resource layout into this
manifest format.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio import AudioClip, read_wav, write_wav
from .errors import SchemaViolation
from .model import ScoreRanges
from .tonespeech import synthesize_words
from .transcripts import normalize_text

SENTENCE_LABEL_DIMS = ("accuracy", "completeness", "fluency", "prosody", "total")
WORD_LABEL_DIMS = ("accuracy", "stress", "total")


@dataclass
class DatasetRecord:
    utterance_id: str
    audio_path: Path
    target_text: str
    sentence_labels: dict[str, float]
    word_labels: list[dict[str, float]]
    split: str
    speaker: str = ""

    def target_words(self) -> list[str]:
        return normalize_text(self.target_text)

    def load_audio(self) -> AudioClip:
        return read_wav(self.audio_path, self.utterance_id)


def _check_labels(record_id: str, labels: dict, dims, ranges: dict, where: str):
    for dim in dims:
        if dim not in labels:
            raise SchemaViolation(record_id, f"missing {where} label {dim!r}")
        value = labels[dim]
        if not isinstance(value, (int, float)) or not np.isfinite(value):
            raise SchemaViolation(record_id, f"{where} label {dim!r} is not a finite number")
        lo, hi = ranges[dim]
        if not (lo <= value <= hi):
            raise SchemaViolation(record_id, f"{where} label {dim!r}={value} outside [{lo}, {hi}]")


def load_dataset(manifest_path: str | Path) -> tuple[list[DatasetRecord], ScoreRanges]:
    """Load and validate one split manifest."""
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise SchemaViolation(str(manifest_path), "manifest file does not exist")
    try:
        doc = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaViolation(str(manifest_path), f"not valid JSON: {exc}") from exc
    split = doc.get("split")
    if split not in ("train", "test"):
        raise SchemaViolation(str(manifest_path), f"split must be train or test, got {split!r}")
    ranges = ScoreRanges.from_dict(doc["score_ranges"]) if "score_ranges" in doc else ScoreRanges()
    utterances = doc.get("utterances")
    if not utterances:
        raise SchemaViolation(str(manifest_path), "manifest lists no utterances")

    root = manifest_path.parent
    records = []
    for u in utterances:
        rid = u.get("utterance_id", "<missing id>")
        for key in ("audio", "target_text", "sentence_labels", "word_labels"):
            if key not in u:
                raise SchemaViolation(rid, f"missing field {key!r}")
        audio_path = root / u["audio"]
        if not audio_path.exists():
            raise SchemaViolation(rid, f"audio file {u['audio']!r} not found")
        words = normalize_text(u["target_text"])
        if not words:
            raise SchemaViolation(rid, "target_text normalizes to no words")
        if len(u["word_labels"]) != len(words):
            raise SchemaViolation(
                rid,
                f"{len(u['word_labels'])} word labels for {len(words)} target words",
            )
        _check_labels(rid, u["sentence_labels"], SENTENCE_LABEL_DIMS, ranges.sentence, "sentence")
        for wl in u["word_labels"]:
            _check_labels(rid, wl, WORD_LABEL_DIMS, ranges.word, "word")
        records.append(
            DatasetRecord(
                utterance_id=rid,
                audio_path=audio_path,
                target_text=u["target_text"],
                sentence_labels={d: float(u["sentence_labels"][d]) for d in SENTENCE_LABEL_DIMS},
                word_labels=[{d: float(wl[d]) for d in WORD_LABEL_DIMS} for wl in u["word_labels"]],
                split=split,
                speaker=u.get("speaker", ""),
            )
        )
    return records, ranges


# ---------------------------------------------------------------------------
# Converter from the corpus's native layout
# ---------------------------------------------------------------------------

def convert_speechocean(native_root: str | Path, out_dir: str | Path) -> dict[str, Path]:
    """Map the native speechocean762 resource layout into split manifests.

    Expects under `native_root`:
      resource/scores.json     utterance id -> {text, accuracy, completeness,
                               fluency, prosody, total, words: [{accuracy,
                               stress, total, text}, ...]}
      train/wav.scp, test/wav.scp   lines "UTTID path/to.wav"

    Audio paths in wav.scp are taken relative to `native_root`.  Writes
    train.json / test.json under `out_dir` and returns their paths.
    """
    native_root = Path(native_root)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scores = json.loads((native_root / "resource" / "scores.json").read_text())

    manifests = {}
    for split in ("train", "test"):
        scp = native_root / split / "wav.scp"
        utterances = []
        for line in scp.read_text().splitlines():
            line = line.strip()
            if not line:
                continue
            utt_id, rel = line.split(maxsplit=1)
            s = scores[utt_id]
            utterances.append(
                {
                    "utterance_id": utt_id,
                    "audio": str((native_root / rel).resolve()),
                    "speaker": utt_id.split("_")[0] if "_" in utt_id else utt_id[:5],
                    "target_text": s["text"],
                    "sentence_labels": {d: s[d] for d in SENTENCE_LABEL_DIMS},
                    "word_labels": [
                        {d: w[d] for d in WORD_LABEL_DIMS} for w in s["words"]
                    ],
                }
            )
        path = out_dir / f"{split}.json"
        path.write_text(json.dumps({"split": split, "utterances": utterances}, indent=2))
        manifests[split] = path
    return manifests


# ---------------------------------------------------------------------------
# Toy dataset: synthesized audio, deterministic labels
# ---------------------------------------------------------------------------

TOY_WORD_POOL = (
    "we", "call", "it", "bear", "the", "sun", "is", "warm", "today",
    "open", "water", "runs", "cold", "little", "bird", "sings", "green",
    "tree", "tall", "hill", "dog", "barks", "loud", "kids", "play",
)


def make_toy_dataset(
    out_dir: str | Path,
    n_train: int = 8,
    n_test: int = 4,
    seed: int = 0,
    min_words: int = 3,
    max_words: int = 6,
) -> dict[str, Path]:
    """Generate a miniature labeled corpus of tone-coded speech."""
    out_dir = Path(out_dir)
    (out_dir / "wav").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    def make_split(split: str, count: int, offset: int) -> Path:
        utterances = []
        for i in range(count):
            n_words = int(rng.integers(min_words, max_words + 1))
            words = list(rng.choice(TOY_WORD_POOL, size=n_words, replace=False))
            utt_id = f"spk{(offset + i) % 4}_{split}_{i:04d}"
            clip = AudioClip(synthesize_words(words), 16000, utt_id)
            wav_rel = f"wav/{utt_id}.wav"
            write_wav(out_dir / wav_rel, clip)
            accuracy = float(rng.integers(4, 11))
            fluency = float(rng.integers(4, 11))
            prosody = float(rng.integers(4, 11))
            total = round((accuracy + fluency + prosody) / 3.0, 1)
            utterances.append(
                {
                    "utterance_id": utt_id,
                    "audio": wav_rel,
                    "speaker": utt_id.split("_")[0],
                    "target_text": " ".join(words),
                    "sentence_labels": {
                        "accuracy": accuracy,
                        "completeness": 10.0,
                        "fluency": fluency,
                        "prosody": prosody,
                        "total": total,
                    },
                    "word_labels": [
                        {
                            "accuracy": float(rng.integers(4, 11)),
                            "stress": float(rng.choice([5.0, 10.0], p=[0.1, 0.9])),
                            "total": float(rng.integers(4, 11)),
                        }
                        for _ in words
                    ],
                }
            )
        path = out_dir / f"{split}.json"
        path.write_text(json.dumps({"split": split, "utterances": utterances}, indent=2))
        return path

    return {
        "train": make_split("train", n_train, 0),
        "test": make_split("test", n_test, 1),
    }
