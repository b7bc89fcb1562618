"""End-to-end assessment pipeline and training orchestration."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .audio import AudioClip
from .clients import TIER_ASRP, TIER_ASRT, ClientConfig, ModelClients
from .clients.cache import DiskCache
from .completeness import CompletenessConfig, completeness_score
from .dataset import DatasetRecord
from .errors import AlignmentFailure, AssessmentUnavailable, EmptyTranscript
from .evaluation import (
    MODE_CLOSED,
    MODE_OPEN,
    AssessmentResult,
    EvalFragment,
    FallbackScores,
    evaluate_closed,
    evaluate_open,
)
from .features import FeatureBundle, FeatureNormalizer, build_feature_bundle, load_bundle, save_bundle
from .model import (
    SENTENCE_TASKS,
    WORD_TASKS,
    ModelConfig,
    MultiTaskScorer,
    ScoreRanges,
    emit_scores,
    fused_input_dim,
    pool_static_features,
    pool_frames,
)
from .phones import INVENTORY
from .training import TrainExample, TrainingConfig, TrainingLog, train
from .transcripts import RawTranscript, SOURCE_TARGET

logger = logging.getLogger(__name__)


def extract_bundle(
    clients: ModelClients,
    audio: AudioClip,
    target: RawTranscript,
    use_asrp: bool = True,
) -> tuple[FeatureBundle, "AlignmentPair"]:
    """ASRp + alignment + embeddings -> FeatureBundle for one utterance.

    With use_asrp=False (ablation) the target transcript stands in for the
    perceived one, so every cross-transcript feature degenerates to its
    identity value and the model leans on the acoustic stream alone.
    """
    target_aligned = clients.force_align(target, audio)
    emb_target = clients.word_embeddings(target)
    if use_asrp:
        perceived_raw = clients.transcribe(audio, TIER_ASRP)
        perceived_aligned = clients.force_align(perceived_raw, audio)
        emb_perceived = clients.word_embeddings(perceived_raw)
    else:
        perceived_aligned = target_aligned
        emb_perceived = emb_target
    bundle = build_feature_bundle(target_aligned, perceived_aligned, emb_target, emb_perceived)
    return bundle, AlignmentPair(target_aligned, perceived_aligned)


@dataclass
class AlignmentPair:
    target: object
    perceived: object


class Assessor:
    """Scores utterances with a trained model; read-shared and reentrant."""

    def __init__(
        self,
        clients: ModelClients,
        model: MultiTaskScorer,
        normalizer: FeatureNormalizer,
        ranges: ScoreRanges,
        completeness_cfg: CompletenessConfig | None = None,
        use_asrp: bool = True,
    ):
        self.clients = clients
        self.model = model
        self.model.eval()
        self.normalizer = normalizer
        self.ranges = ranges
        self.completeness_cfg = completeness_cfg or CompletenessConfig()
        self.use_asrp = use_asrp

    # -- scoring ------------------------------------------------------------

    def assess_clip(
        self, audio: AudioClip, target_text: str | None, mode: str
    ) -> AssessmentResult:
        """Full pipeline for one clip.  Closed mode requires target_text;
        open mode forbids it (the ASRt transcript substitutes)."""
        if mode == MODE_CLOSED and not target_text:
            raise ValueError("closed mode requires target_text")
        if mode == MODE_OPEN and target_text:
            raise ValueError("open mode must not receive target_text")
        try:
            if mode == MODE_CLOSED:
                target = RawTranscript.from_text(target_text, SOURCE_TARGET)
                if not target.words:
                    raise AssessmentUnavailable(f"{audio.id}: target text has no words")
            else:
                target = self.clients.transcribe(audio, TIER_ASRT)
            bundle, alignments = extract_bundle(self.clients, audio, target, self.use_asrp)
        except (EmptyTranscript, AlignmentFailure) as exc:
            raise AssessmentUnavailable(str(exc)) from exc

        with torch.no_grad():
            frames = self.clients.acoustic_frames(audio)
            static = torch.from_numpy(
                pool_static_features(bundle, self.normalizer).astype(np.float32)
            )
            acoustic = pool_frames(bundle.word_spans, frames.frames, frames.frame_hop)
            fused = torch.cat([static, acoustic], dim=1)[None]
            sentence_raw, word_raw = self.model(fused)

        completeness = None
        if mode == MODE_CLOSED:
            frac = completeness_score(alignments.target, self.completeness_cfg).score
            completeness = self.ranges.completeness_value(frac)
        scores = emit_scores(sentence_raw[0], word_raw[0], self.ranges, completeness)
        return AssessmentResult(
            scores=scores,
            keyed_transcript=alignments.target,
            perceived_transcript=alignments.perceived,
        )

    def assess(self, record: DatasetRecord, mode: str) -> AssessmentResult:
        audio = record.load_audio()
        target_text = record.target_text if mode == MODE_CLOSED else None
        return self.assess_clip(audio, target_text, mode)

    def align_truth(self, record: DatasetRecord):
        """Force-align the ground-truth text (open-mode target remapping)."""
        try:
            return self.clients.force_align(
                RawTranscript.from_text(record.target_text, SOURCE_TARGET),
                record.load_audio(),
            )
        except (EmptyTranscript, AlignmentFailure) as exc:
            raise AssessmentUnavailable(str(exc)) from exc


# ---------------------------------------------------------------------------
# Training orchestration
# ---------------------------------------------------------------------------

def _labels_for(record: DatasetRecord, ranges: ScoreRanges) -> tuple[torch.Tensor, torch.Tensor]:
    sent = torch.tensor(
        [ranges.normalize_sentence(t, record.sentence_labels[t]) for t in SENTENCE_TASKS],
        dtype=torch.float32,
    )
    word = torch.tensor(
        [[ranges.normalize_word(t, wl[t]) for t in WORD_TASKS] for wl in record.word_labels],
        dtype=torch.float32,
    )
    return sent, word


def prepare_examples(
    clients: ModelClients,
    records: list[DatasetRecord],
    ranges: ScoreRanges,
    bundle_cache: DiskCache | None = None,
    use_asrp: bool = True,
) -> tuple[list[TrainExample], list[FeatureBundle], int]:
    """Extract bundles for every usable record; returns examples, raw
    bundles (for normalizer fitting) and the count of skipped records."""
    examples: list[TrainExample] = []
    bundles: list[FeatureBundle] = []
    skipped = 0
    for record in records:
        audio = record.load_audio()
        target = RawTranscript.from_text(record.target_text, SOURCE_TARGET)
        bundle = None
        entry = None
        if bundle_cache is not None:
            entry = bundle_cache.entry_path(
                "bundle",
                "|".join(clients.cfg.model_ids().values()),
                f"asrp={use_asrp}",
                audio.content_hash(),
                target.content_hash(),
            )
            if entry.exists():
                try:
                    bundle = load_bundle(entry)
                except Exception:
                    bundle = None
        if bundle is None:
            try:
                bundle, _ = extract_bundle(clients, audio, target, use_asrp)
            except (EmptyTranscript, AlignmentFailure) as exc:
                logger.warning("skipping %s: %s", record.utterance_id, exc)
                skipped += 1
                continue
            if entry is not None:
                save_bundle(bundle, entry)
        if bundle.n_words != len(record.word_labels):
            logger.warning("skipping %s: word count mismatch", record.utterance_id)
            skipped += 1
            continue
        sent, word = _labels_for(record, ranges)
        examples.append(
            TrainExample(
                utterance_id=record.utterance_id,
                static=torch.zeros(0),  # filled after the normalizer is fitted
                samples=torch.as_tensor(audio.samples, dtype=torch.float32),
                word_spans=bundle.word_spans,
                sentence_labels=sent,
                word_labels=word,
                speaker=record.speaker,
            )
        )
        bundles.append(bundle)
    return examples, bundles, skipped


@dataclass
class TrainedAssessor:
    assessor: Assessor
    log: TrainingLog
    normalizer: FeatureNormalizer
    skipped_records: int


def train_assessor(
    train_records: list[DatasetRecord],
    ranges: ScoreRanges,
    client_cfg: ClientConfig,
    mcfg: ModelConfig,
    tcfg: TrainingConfig,
    completeness_cfg: CompletenessConfig | None = None,
    bundle_cache_dir: str | Path | None = None,
    use_asrp: bool = True,
) -> TrainedAssessor:
    """Feature extraction, normalizer fit, model fit, packaged assessor."""
    torch.manual_seed(tcfg.seed)
    clients = ModelClients(client_cfg)
    cache = DiskCache(bundle_cache_dir) if bundle_cache_dir else None
    examples, bundles, skipped = prepare_examples(clients, train_records, ranges, cache, use_asrp)
    if not examples:
        raise AssessmentUnavailable("no training record survived feature extraction")
    normalizer = FeatureNormalizer.fit(bundles)
    for ex, bundle in zip(examples, bundles):
        ex.static = torch.from_numpy(pool_static_features(bundle, normalizer).astype(np.float32))

    input_dim = fused_input_dim(len(INVENTORY), clients.embedding_dim(), clients.backbone_dim())
    model = MultiTaskScorer(mcfg, input_dim)
    backbone = clients.backbone_module()
    log = train(examples, model, backbone, tcfg, frame_hop=clients.frame_hop())

    assessor = Assessor(clients, model, normalizer, ranges, completeness_cfg, use_asrp=use_asrp)
    return TrainedAssessor(assessor, log, normalizer, skipped)


def evaluate_assessor(
    assessor: Assessor,
    test_records: list[DatasetRecord],
    fallback: FallbackScores,
    modes: tuple[str, ...] = (MODE_CLOSED, MODE_OPEN),
) -> dict[str, EvalFragment]:
    out: dict[str, EvalFragment] = {}
    if MODE_CLOSED in modes:
        out[MODE_CLOSED] = evaluate_closed(assessor, test_records, fallback)
    if MODE_OPEN in modes:
        out[MODE_OPEN] = evaluate_open(assessor, test_records, fallback, assessor.align_truth)
    return out
