"""Forced-alignment completeness: omitted words show up as tiny aligned spans.

A word counts as complete when its aligned duration reaches a threshold;
the completeness score is the fraction of complete words.  The threshold
study sweeps candidate thresholds over complete/incomplete duration
populations and picks the F1-best one (positive class: incomplete).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlignmentFailure, EmptyTranscript
from .transcripts import AlignedTranscript

DEFAULT_THRESHOLD = 0.07  # seconds


@dataclass
class CompletenessConfig:
    duration_threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        # zero stays legal: with the closed lower boundary it is the
        # degenerate "everything complete" classifier
        if self.duration_threshold < 0:
            raise ValueError("duration threshold must not be negative")


@dataclass
class CompletenessResult:
    score: float
    complete_flags: list[bool]
    durations: list[float]


def completeness_score(aligned: AlignedTranscript, cfg: CompletenessConfig) -> CompletenessResult:
    """Fraction of words whose aligned duration reaches the threshold.

    A duration exactly at the threshold counts as complete, which keeps a
    zero threshold degenerate-safe.
    """
    if not aligned.words:
        raise EmptyTranscript(aligned.utterance_id)
    durations = [w.duration for w in aligned.words]
    flags = [d >= cfg.duration_threshold for d in durations]
    return CompletenessResult(sum(flags) / len(flags), flags, durations)


# ---------------------------------------------------------------------------
# Simulation of incomplete words
# ---------------------------------------------------------------------------

@dataclass
class InsertionSample:
    utterance_id: str
    aligned: AlignedTranscript
    inserted_index: int


@dataclass
class SimulationOutcome:
    samples: list[InsertionSample]
    skipped: int  # utterances the aligner refused


def simulate_incomplete_corpus(
    records,
    aligner_fn,
    lexicon: list[str],
    seed: int,
    load_audio_fn=None,
) -> SimulationOutcome:
    """Insert one extra word per utterance, then re-align to the unmodified audio.

    `records` yield (utterance_id, audio, words); `aligner_fn(words, audio)`
    returns an AlignedTranscript or raises AlignmentFailure.  The inserted
    position and word come from an explicit seeded generator.
    """
    rng = np.random.default_rng(seed)
    samples: list[InsertionSample] = []
    skipped = 0
    pool = sorted(set(lexicon))
    for utterance_id, audio, words in records:
        candidates = [w for w in pool if w not in words]
        if not candidates:
            skipped += 1
            continue
        extra = candidates[int(rng.integers(len(candidates)))]
        pos = int(rng.integers(len(words) + 1))
        modified = list(words[:pos]) + [extra] + list(words[pos:])
        if load_audio_fn is not None:
            audio = load_audio_fn(audio)
        try:
            aligned = aligner_fn(modified, audio)
        except AlignmentFailure:
            skipped += 1
            continue
        samples.append(InsertionSample(utterance_id, aligned, pos))
    return SimulationOutcome(samples, skipped)


# ---------------------------------------------------------------------------
# Threshold sweep
# ---------------------------------------------------------------------------

def default_grid() -> np.ndarray:
    # covers both reported duration scales (~0.075 s and ~0.38 s)
    return np.arange(0.0, 0.5001, 0.005)


@dataclass
class SimulationReport:
    complete_durations: list[float]
    incomplete_durations: list[float]
    threshold_grid: list[float]
    f1_per_threshold: list[float]
    best_threshold: float
    best_f1: float
    skipped: int = 0

    def to_json_dict(self) -> dict:
        return {
            "complete_durations": self.complete_durations,
            "incomplete_durations": self.incomplete_durations,
            "threshold_grid": self.threshold_grid,
            "f1_per_threshold": self.f1_per_threshold,
            "best_threshold": self.best_threshold,
            "best_f1": self.best_f1,
            "skipped": self.skipped,
        }


def f1_score(tp: int, fp: int, fn: int) -> float:
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def sweep_thresholds(
    complete_durations,
    incomplete_durations,
    grid: np.ndarray | None = None,
    skipped: int = 0,
) -> SimulationReport:
    """F1 of "duration < threshold => incomplete" for each grid threshold."""
    complete = np.asarray(list(complete_durations), dtype=np.float64)
    incomplete = np.asarray(list(incomplete_durations), dtype=np.float64)
    if complete.size == 0 or incomplete.size == 0:
        raise ValueError("both duration populations must be non-empty")
    if grid is None:
        grid = default_grid()
    f1s = []
    for t in grid:
        tp = int((incomplete < t).sum())
        fn = int(incomplete.size - tp)
        fp = int((complete < t).sum())
        f1s.append(f1_score(tp, fp, fn))
    best = int(np.argmax(f1s))
    return SimulationReport(
        complete_durations=complete.tolist(),
        incomplete_durations=incomplete.tolist(),
        threshold_grid=np.asarray(grid, dtype=np.float64).tolist(),
        f1_per_threshold=f1s,
        best_threshold=float(grid[best]),
        best_f1=float(f1s[best]),
        skipped=skipped,
    )


# ---------------------------------------------------------------------------
# Synthetic duration populations shaped like the corpus-scale study
# ---------------------------------------------------------------------------

@dataclass
class PopulationConfig:
    """Two-class sampler: near-normal complete words vs right-skewed
    incomplete words whose tail comes from occasional spurious alignments."""

    n_complete: int = 7000
    n_incomplete: int = 1000
    complete_mean: float = 0.38
    complete_std: float = 0.13
    incomplete_gamma_shape: float = 4.0
    incomplete_gamma_scale: float = 0.01
    incomplete_tail_fraction: float = 0.12
    incomplete_tail_mean: float = 0.33
    incomplete_tail_std: float = 0.12
    min_duration: float = 0.01


def sample_completeness_populations(
    cfg: PopulationConfig, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)

    def trunc_normal(n, mean, std):
        out = rng.normal(mean, std, size=n)
        while True:
            bad = out < cfg.min_duration
            if not bad.any():
                return out
            out[bad] = rng.normal(mean, std, size=int(bad.sum()))

    complete = trunc_normal(cfg.n_complete, cfg.complete_mean, cfg.complete_std)
    n_tail = int(round(cfg.n_incomplete * cfg.incomplete_tail_fraction))
    body = rng.gamma(cfg.incomplete_gamma_shape, cfg.incomplete_gamma_scale, size=cfg.n_incomplete - n_tail)
    body = np.maximum(body, cfg.min_duration / 2)
    tail = trunc_normal(n_tail, cfg.incomplete_tail_mean, cfg.incomplete_tail_std)
    incomplete = np.concatenate([body, tail])
    rng.shuffle(incomplete)
    return complete, incomplete
