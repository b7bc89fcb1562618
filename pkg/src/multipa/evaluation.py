"""Evaluation: PCC metrics, closed/open protocols, fallback, seeded runs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dataset import SENTENCE_LABEL_DIMS, WORD_LABEL_DIMS, DatasetRecord
from .errors import AssessmentUnavailable, DegenerateInput
from .features import spans_overlap
from .model import ScoreOutput
from .transcripts import AlignedTranscript


def pcc(x, y) -> float:
    """Pearson correlation via centered sums."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError("pcc inputs must have equal length")
    if x.size < 2:
        raise DegenerateInput(f"need at least 2 points, got {x.size}")
    a = x - x.mean()
    b = y - y.mean()
    saa = float(a @ a)
    sbb = float(b @ b)
    if saa == 0.0 or sbb == 0.0:
        raise DegenerateInput("constant input sequence")
    r = float((a @ b) / np.sqrt(saa * sbb))
    # rounding can push |r| one ulp past 1; the identity cases stay exact
    return max(-1.0, min(1.0, r))


# ---------------------------------------------------------------------------
# Fallback scores: per-dimension training minima
# ---------------------------------------------------------------------------

@dataclass
class FallbackScores:
    sentence: dict[str, float]
    word: dict[str, float]

    @classmethod
    def from_records(cls, train_records: list[DatasetRecord]) -> "FallbackScores":
        sentence = {
            d: min(r.sentence_labels[d] for r in train_records) for d in SENTENCE_LABEL_DIMS
        }
        word = {
            d: min(wl[d] for r in train_records for wl in r.word_labels)
            for d in WORD_LABEL_DIMS
        }
        return cls(sentence, word)

    def to_dict(self) -> dict:
        return {"sentence": self.sentence, "word": self.word}


# ---------------------------------------------------------------------------
# Scorer protocol and evaluation fragments
# ---------------------------------------------------------------------------

@dataclass
class AssessmentResult:
    scores: ScoreOutput
    # word scores are keyed to this transcript: the target words (closed)
    # or the recognized ASRt words (open)
    keyed_transcript: AlignedTranscript | None = None
    perceived_transcript: AlignedTranscript | None = None


MODE_CLOSED = "closed"
MODE_OPEN = "open"


@dataclass
class EvalFragment:
    """PCC per dimension for one evaluation pass; None marks undefined PCC."""

    sentence: dict[str, float | None]
    word: dict[str, float | None]
    fallback_count: int
    unmatched_words: int = 0
    notes: dict[str, str] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "sentence": self.sentence,
            "word": self.word,
            "fallback_count": self.fallback_count,
            "unmatched_words": self.unmatched_words,
            "notes": self.notes,
        }


def _finish(sent_pairs, word_pairs, fallback_count, unmatched=0) -> EvalFragment:
    sentence: dict[str, float | None] = {}
    word: dict[str, float | None] = {}
    notes = {}
    for dim, (preds, labels) in sent_pairs.items():
        try:
            sentence[dim] = pcc(preds, labels)
        except DegenerateInput as exc:
            sentence[dim] = None
            notes[f"sentence.{dim}"] = str(exc)
    for dim, (preds, labels) in word_pairs.items():
        try:
            word[dim] = pcc(preds, labels)
        except DegenerateInput as exc:
            word[dim] = None
            notes[f"word.{dim}"] = str(exc)
    return EvalFragment(sentence, word, fallback_count, unmatched, notes)


def evaluate_closed(scorer, records: list[DatasetRecord], fallback: FallbackScores) -> EvalFragment:
    """Closed protocol: the ground-truth transcript keys the word scores.

    Word-level PCC pools every word of every utterance per dimension;
    utterances the scorer cannot handle get the training-minimum scores and
    are counted, not dropped.
    """
    sent_pairs = {d: ([], []) for d in SENTENCE_LABEL_DIMS}
    word_pairs = {d: ([], []) for d in WORD_LABEL_DIMS}
    fallback_count = 0
    for record in records:
        try:
            result = scorer.assess(record, MODE_CLOSED)
            sentence = dict(result.scores.sentence)
            if result.scores.completeness is not None:
                sentence["completeness"] = result.scores.completeness
            word_scores = result.scores.word
        except AssessmentUnavailable:
            fallback_count += 1
            sentence = dict(fallback.sentence)
            word_scores = [dict(fallback.word) for _ in record.word_labels]
        for d in SENTENCE_LABEL_DIMS:
            if d in sentence:
                sent_pairs[d][0].append(sentence[d])
                sent_pairs[d][1].append(record.sentence_labels[d])
        for ws, wl in zip(word_scores, record.word_labels):
            for d in WORD_LABEL_DIMS:
                word_pairs[d][0].append(ws[d])
                word_pairs[d][1].append(wl[d])
    return _finish(sent_pairs, word_pairs, fallback_count)


def map_open_response_targets(
    recognized: AlignedTranscript,
    truth: AlignedTranscript,
    truth_word_labels: list[dict[str, float]],
) -> tuple[list[dict[str, float] | None], int]:
    """Target score for each recognized word: the mean score of the
    ground-truth words its time span overlaps.  Words overlapping nothing
    are excluded (None) and counted."""
    if len(truth.words) != len(truth_word_labels):
        raise ValueError("truth labels do not match the truth alignment")
    targets: list[dict[str, float] | None] = []
    unmatched = 0
    for rw in recognized.words:
        hits = [
            i
            for i, tw in enumerate(truth.words)
            if spans_overlap(rw.start, rw.end, tw.start, tw.end)
        ]
        if not hits:
            targets.append(None)
            unmatched += 1
            continue
        targets.append(
            {
                d: float(np.mean([truth_word_labels[i][d] for i in hits]))
                for d in WORD_LABEL_DIMS
            }
        )
    return targets, unmatched


def evaluate_open(
    scorer,
    records: list[DatasetRecord],
    fallback: FallbackScores,
    truth_aligner,
) -> EvalFragment:
    """Open protocol: ASRt output substitutes for the target transcript.

    Word targets are remapped onto recognized words by time overlap;
    completeness is not evaluated (no target sentence exists).
    `truth_aligner(record)` force-aligns the ground-truth text for the
    remapping and may raise AssessmentUnavailable.
    """
    sent_dims = [d for d in SENTENCE_LABEL_DIMS if d != "completeness"]
    sent_pairs = {d: ([], []) for d in sent_dims}
    word_pairs = {d: ([], []) for d in WORD_LABEL_DIMS}
    fallback_count = 0
    unmatched_total = 0
    for record in records:
        try:
            result = scorer.assess(record, MODE_OPEN)
        except AssessmentUnavailable:
            fallback_count += 1
            for d in sent_dims:
                sent_pairs[d][0].append(fallback.sentence[d])
                sent_pairs[d][1].append(record.sentence_labels[d])
            # no recognized words exist; ground-truth words key the fallback
            for wl in record.word_labels:
                for d in WORD_LABEL_DIMS:
                    word_pairs[d][0].append(fallback.word[d])
                    word_pairs[d][1].append(wl[d])
            continue
        for d in sent_dims:
            sent_pairs[d][0].append(result.scores.sentence[d])
            sent_pairs[d][1].append(record.sentence_labels[d])
        try:
            truth = truth_aligner(record)
        except AssessmentUnavailable:
            truth = None
        if truth is None or result.keyed_transcript is None:
            unmatched_total += len(result.scores.word)
            continue
        targets, unmatched = map_open_response_targets(
            result.keyed_transcript, truth, record.word_labels
        )
        unmatched_total += unmatched
        for ws, target in zip(result.scores.word, targets):
            if target is None:
                continue
            for d in WORD_LABEL_DIMS:
                word_pairs[d][0].append(ws[d])
                word_pairs[d][1].append(target[d])
    return _finish(sent_pairs, word_pairs, fallback_count, unmatched_total)


# ---------------------------------------------------------------------------
# Seeded experiment aggregation
# ---------------------------------------------------------------------------

@dataclass
class EvalReport:
    seeds: list[int]
    fragments: dict[str, list[EvalFragment]]  # mode -> one fragment per seed
    fallback_scores: dict | None = None

    def _collect(self, mode: str, level: str, dim: str) -> list[float | None]:
        out = []
        for frag in self.fragments[mode]:
            out.append(getattr(frag, level).get(dim))
        return out

    def summary(self) -> dict:
        out: dict = {"seeds": self.seeds, "modes": {}}
        for mode, frags in self.fragments.items():
            dims = {"sentence": list(frags[0].sentence), "word": list(frags[0].word)}
            mode_out: dict = {"sentence": {}, "word": {}}
            for level in ("sentence", "word"):
                for dim in dims[level]:
                    values = [v for v in self._collect(mode, level, dim) if v is not None]
                    entry: dict = {"per_seed": self._collect(mode, level, dim)}
                    if values:
                        entry["mean"] = float(np.mean(values))
                        if len(self.seeds) >= 2:
                            # identical per-seed values report an exact zero
                            entry["std"] = 0.0 if len(set(values)) == 1 else float(np.std(values))
                    else:
                        entry["mean"] = None
                    mode_out[level][dim] = entry
            mode_out["fallback_count"] = [f.fallback_count for f in frags]
            mode_out["unmatched_words"] = [f.unmatched_words for f in frags]
            out["modes"][mode] = mode_out
        if self.fallback_scores:
            out["fallback_scores"] = self.fallback_scores
        return out

    def to_json(self) -> str:
        return json.dumps(
            {
                "seeds": self.seeds,
                "fragments": {
                    mode: [f.to_json_dict() for f in frags]
                    for mode, frags in self.fragments.items()
                },
                "fallback_scores": self.fallback_scores,
                "summary": self.summary(),
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        doc = json.loads(text)
        fragments = {
            mode: [
                EvalFragment(
                    sentence=f["sentence"],
                    word=f["word"],
                    fallback_count=f["fallback_count"],
                    unmatched_words=f.get("unmatched_words", 0),
                    notes=f.get("notes", {}),
                )
                for f in frags
            ]
            for mode, frags in doc["fragments"].items()
        }
        return cls(seeds=doc["seeds"], fragments=fragments, fallback_scores=doc.get("fallback_scores"))

    def render_table(self) -> str:
        """Rows per mode, word-level columns then sentence-level columns."""
        word_cols = list(WORD_LABEL_DIMS)
        sent_cols = list(SENTENCE_LABEL_DIMS)
        header = ["mode"] + [f"w.{c}" for c in word_cols] + [f"s.{c}" for c in sent_cols]
        rows = [header]
        summary = self.summary()
        for mode, data in summary["modes"].items():
            row = [mode]
            for c in word_cols:
                row.append(_fmt_cell(data["word"].get(c)))
            for c in sent_cols:
                row.append(_fmt_cell(data["sentence"].get(c)))
            rows.append(row)
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        lines = []
        for r, row in enumerate(rows):
            lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
            if r == 0:
                lines.append("-" * (sum(widths) + 2 * (len(widths) - 1)))
        return "\n".join(lines)


def _fmt_cell(entry: dict | None) -> str:
    if entry is None or entry.get("mean") is None:
        return "-"
    if "std" in entry:
        return f"{entry['mean']:.3f}±{entry['std']:.3f}"
    return f"{entry['mean']:.3f}"


def run_seeds(run_one, seeds: list[int], fallback_scores: dict | None = None) -> EvalReport:
    """Train + evaluate once per seed and aggregate.

    `run_one(seed)` returns {mode: EvalFragment}.  Any seed failure aborts
    the whole run; partial results are never averaged silently.
    """
    if not seeds:
        raise ValueError("need at least one seed")
    fragments: dict[str, list[EvalFragment]] = {}
    for seed in seeds:
        try:
            result = run_one(seed)
        except Exception as exc:
            raise RuntimeError(f"seed {seed} failed: {exc}") from exc
        for mode, frag in result.items():
            fragments.setdefault(mode, []).append(frag)
    return EvalReport(seeds=list(seeds), fragments=fragments, fallback_scores=fallback_scores)


def ablation_table(reports: list[tuple[str, EvalReport]]) -> str:
    """Side-by-side rendering of per-configuration reports."""
    blocks = []
    for label, report in reports:
        blocks.append(f"== {label} ==\n{report.render_table()}")
    return "\n\n".join(blocks)
