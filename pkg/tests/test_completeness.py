import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multipa.audio import AudioClip
from multipa.completeness import (
    CompletenessConfig,
    PopulationConfig,
    completeness_score,
    sample_completeness_populations,
    simulate_incomplete_corpus,
    sweep_thresholds,
)
from multipa.errors import EmptyTranscript
from multipa.tonespeech import synthesize_clip
from multipa.transcripts import AlignedTranscript, RawTranscript, TimedWord


def aligned_with_durations(durations):
    cursor = 0.0
    words = []
    for i, d in enumerate(durations):
        words.append(TimedWord(f"w{i}", cursor, cursor + d, []))
        cursor += d + 0.05
    return AlignedTranscript("utt", words, "target")


def test_all_complete():
    res = completeness_score(aligned_with_durations([0.3, 0.4, 0.5]), CompletenessConfig(0.07))
    assert res.score == 1.0
    assert res.complete_flags == [True, True, True]


def test_four_out_of_five():
    res = completeness_score(
        aligned_with_durations([0.3, 0.3, 0.02, 0.3, 0.3]), CompletenessConfig(0.07)
    )
    assert res.score == 0.8
    assert res.complete_flags == [True, True, False, True, True]


def test_empty_word_list_raises():
    class Hollow:
        utterance_id = "empty"
        words = []

    with pytest.raises(EmptyTranscript):
        completeness_score(Hollow(), CompletenessConfig(0.07))


def test_boundary_duration_counts_complete():
    res = completeness_score(aligned_with_durations([0.07]), CompletenessConfig(0.07))
    assert res.score == 1.0


def test_threshold_zero_scores_one():
    res = completeness_score(aligned_with_durations([0.01, 0.5]), CompletenessConfig(0.0))
    assert res.score == 1.0


def test_negative_threshold_rejected():
    with pytest.raises(ValueError):
        CompletenessConfig(-0.1)


@given(
    st.lists(st.floats(0.001, 1.0, allow_nan=False), min_size=1, max_size=20),
    st.floats(0.0, 0.5),
    st.floats(0.0, 0.5),
)
@settings(max_examples=200)
def test_monotone_in_threshold(durations, t1, t2):
    lo, hi = sorted((t1, t2))
    a = aligned_with_durations(durations)
    assert completeness_score(a, CompletenessConfig(lo)).score >= completeness_score(
        a, CompletenessConfig(hi)
    ).score


@given(st.lists(st.floats(0.001, 1.0, allow_nan=False), min_size=1, max_size=17))
@settings(max_examples=100)
def test_score_is_exact_fraction(durations):
    n = len(durations)
    res = completeness_score(aligned_with_durations(durations), CompletenessConfig(0.07))
    assert res.score in [k / n for k in range(n + 1)]


# ---------------------------------------------------------------------------
# Insertion simulation
# ---------------------------------------------------------------------------

def _records(sentences):
    out = []
    for i, sent in enumerate(sentences):
        words = sent.split()
        out.append((f"utt{i}", synthesize_clip(words, f"utt{i}"), words))
    return out


def _aligner(clients):
    def fn(words, audio):
        return clients.force_align(RawTranscript(tuple(words), "target"), audio)

    return fn


LEXICON = ["we", "call", "it", "bear", "sun", "tree", "dog", "apple", "runs"]


def test_simulation_adds_one_word(clients):
    outcome = simulate_incomplete_corpus(
        _records(["we call it", "the sun runs"]), _aligner(clients), LEXICON, seed=3
    )
    assert outcome.skipped == 0
    for sample, n_orig in zip(outcome.samples, (3, 3)):
        assert len(sample.aligned.words) == n_orig + 1
        assert 0 <= sample.inserted_index <= n_orig


def test_simulation_deterministic_under_seed(clients):
    a = simulate_incomplete_corpus(_records(["we call it bear"]), _aligner(clients), LEXICON, seed=9)
    b = simulate_incomplete_corpus(_records(["we call it bear"]), _aligner(clients), LEXICON, seed=9)
    assert [s.inserted_index for s in a.samples] == [s.inserted_index for s in b.samples]
    assert [w.text for w in a.samples[0].aligned.words] == [
        w.text for w in b.samples[0].aligned.words
    ]


def test_simulation_counts_unalignable_utterances(clients):
    silence = AudioClip(np.zeros(16000, dtype=np.float32), 16000, "silent")
    records = _records(["we call it"]) + [("silent", silence, ["we", "go"])]
    outcome = simulate_incomplete_corpus(records, _aligner(clients), LEXICON, seed=2)
    assert outcome.skipped == 1
    assert len(outcome.samples) == 1


def test_simulated_inserted_word_is_short(clients):
    outcome = simulate_incomplete_corpus(
        _records(["we call it bear"]), _aligner(clients), LEXICON, seed=1
    )
    sample = outcome.samples[0]
    inserted = sample.aligned.words[sample.inserted_index]
    assert inserted.duration < 0.1
    others = [w for i, w in enumerate(sample.aligned.words) if i != sample.inserted_index]
    assert all(w.duration > 0.1 for w in others)


# ---------------------------------------------------------------------------
# Threshold sweep
# ---------------------------------------------------------------------------

def test_sweep_separable_classes_reach_f1_one():
    rng = np.random.default_rng(0)
    complete = rng.uniform(0.15, 0.45, size=300)
    incomplete = rng.uniform(0.01, 0.05, size=80)
    report = sweep_thresholds(complete, incomplete)
    assert report.best_f1 == 1.0
    assert 0.05 <= report.best_threshold <= 0.15


def test_sweep_identical_distributions_hit_all_positive_baseline():
    rng = np.random.default_rng(1)
    samples = rng.uniform(0.02, 0.4, size=400)
    report = sweep_thresholds(samples, samples.copy())
    # same samples in both classes: precision is fixed at n_i/(n_i+n_c) and
    # F1 rises with recall, so the optimum is the all-positive classifier
    pi = len(samples) / (2 * len(samples))
    assert report.best_f1 == pytest.approx(2 * pi / (1 + pi))


def test_sweep_f1_bounds_and_best_consistency():
    comp, inc = sample_completeness_populations(PopulationConfig(n_complete=500, n_incomplete=80), 5)
    report = sweep_thresholds(comp, inc)
    f1 = np.array(report.f1_per_threshold)
    assert np.all((0.0 <= f1) & (f1 <= 1.0))
    assert report.best_f1 == f1.max()
    assert report.threshold_grid[int(f1.argmax())] == report.best_threshold


def test_sweep_rejects_empty_population():
    with pytest.raises(ValueError):
        sweep_thresholds([], [0.1])


def test_population_shapes_match_study():
    comp, inc = sample_completeness_populations(PopulationConfig(), 7)
    assert abs(comp.mean() - 0.38) < 0.02
    assert abs(inc.mean() - 0.075) < 0.01
    # right-skew: mean well above the median
    assert inc.mean() > np.median(inc) * 1.3
