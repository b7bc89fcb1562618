"""Acceptance gate: every desk-scale criterion, one test each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
PASS lines.  The corpus-scale reproduction (five-seed training on the full
dataset) is documented but excluded: it needs the real pretrained models
and GPU-hours, not a desk.
"""

import time

import numpy as np
import pytest
import torch

from multipa.clients import ClientConfig
from multipa.clients.base import AcousticFrameSeq
from multipa.completeness import (
    CompletenessConfig,
    PopulationConfig,
    completeness_score,
    sample_completeness_populations,
    sweep_thresholds,
)
from multipa.dataset import SENTENCE_LABEL_DIMS, WORD_LABEL_DIMS, make_toy_dataset, load_dataset
from multipa.errors import AssessmentUnavailable
from multipa.evaluation import (
    FallbackScores,
    evaluate_closed,
    evaluate_open,
    map_open_response_targets,
    pcc,
)
from multipa.features import _lev_kernel, build_feature_bundle, compute_phone_features, compute_word_features, align_words_by_time, levenshtein
from multipa.model import (
    SENTENCE_TASKS,
    WORD_TASKS,
    ModelConfig,
    MultiTaskScorer,
    pool_levels,
)
from multipa.pipeline import train_assessor
from multipa.training import TrainingConfig
from multipa.transcripts import AlignedTranscript, TimedWord

from conftest import small_model_config
from helpers import GRID, identical_pair, oracle_pool_levels, random_embeddings, random_pair
from test_evaluation import _fake_records, oracle_pcc, PerfectScorer
from test_features import _bundle_for_pair


def _report(name: str):
    print(f"\nACCEPTANCE {name}: PASS")


# ---------------------------------------------------------------------------
# 1. Levenshtein: exhaustive agreement, lengths <= 8, 3-letter alphabet
# ---------------------------------------------------------------------------

def _universe_distance_matrix():
    """Edit distances between ALL strings of length <= 8 over {0,1,2}.

    Independent DP over the prefix-closed string universe: every DP cell
    d(prefix_i(a), prefix_j(b)) is itself a string pair in the universe, so
    the classic recurrence becomes a recurrence over the full matrix.
    """
    parent = [0]
    last = [0]
    level_index = [np.array([0])]
    for length in range(1, 9):
        start = len(parent)
        for p in level_index[length - 1]:
            for c in range(3):
                parent.append(int(p))
                last.append(c)
        level_index.append(np.arange(start, len(parent)))
    parent = np.array(parent)
    last = np.array(last, dtype=np.int16)
    n = len(parent)
    lens = np.zeros(n, dtype=np.int64)
    for length, idx in enumerate(level_index):
        lens[idx] = length

    D = np.zeros((n, n), dtype=np.uint8)
    D[0, :] = lens
    D[:, 0] = lens
    for la in range(1, 9):
        rows = level_index[la]
        pa = parent[rows]
        row_last = last[rows]
        for lb in range(1, 9):
            cols = level_index[lb]
            pb = parent[cols]
            sub = D[np.ix_(pa, pb)] + (row_last[:, None] != last[cols][None, :])
            dele = D[np.ix_(pa, cols)] + 1
            ins = D[np.ix_(rows, pb)] + 1
            D[np.ix_(rows, cols)] = np.minimum(sub, np.minimum(dele, ins))

    mat = np.zeros((n, 8), dtype=np.int32)
    for k in range(n):
        s = []
        q = k
        while q != 0:
            s.append(last[q])
            q = parent[q]
        mat[k, : len(s)] = s[::-1]
    return mat, lens, D


def test_acceptance_levenshtein_exhaustive():
    from numba import njit

    t0 = time.time()
    mat, lens, D = _universe_distance_matrix()

    # triangulate the oracle itself against a third, per-pair implementation
    rng = np.random.default_rng(0)
    from test_features import oracle_levenshtein

    for _ in range(200):
        i, j = int(rng.integers(len(lens))), int(rng.integers(len(lens)))
        a = list(mat[i, : lens[i]])
        b = list(mat[j, : lens[j]])
        assert D[i, j] == oracle_levenshtein(a, b)

    @njit(cache=True)
    def drive(mat, lens, D):
        n = mat.shape[0]
        for i in range(n):
            a = mat[i, : lens[i]]
            for j in range(n):
                if _lev_kernel(a, mat[j, : lens[j]]) != D[i, j]:
                    return i * n + j
        return -1

    first_bad = drive(mat, lens, D)
    assert first_bad == -1, f"kernel disagrees with oracle at pair index {first_bad}"

    # the public wrapper (token encoding included), exhaustive to length 4
    strings = [""]
    for length in range(1, 5):
        strings += [s + c for s in strings if len(s) == length - 1 for c in "abc"]
    univ = {s: k for k, s in enumerate(_strings_of(mat, lens))}
    for a in strings:
        for b in strings:
            assert levenshtein(a, b) == D[univ[a], univ[b]]

    elapsed = time.time() - t0
    assert elapsed < 60.0, f"exhaustive sweep took {elapsed:.1f}s"
    _report(f"levenshtein-exhaustive ({elapsed:.1f}s, 9841^2 ordered pairs)")


def _strings_of(mat, lens):
    alphabet = "abc"
    return ["".join(alphabet[c] for c in mat[k, : lens[k]]) for k in range(mat.shape[0])]


# ---------------------------------------------------------------------------
# 2. PCC oracle
# ---------------------------------------------------------------------------

def test_acceptance_pcc_oracle():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        n = int(rng.integers(2, 101))
        x = rng.standard_normal(n) * rng.uniform(0.01, 100)
        y = rng.standard_normal(n) * rng.uniform(0.01, 100)
        assert abs(pcc(x, y) - oracle_pcc(x, y)) < 1e-12
    for _ in range(100):
        n = int(rng.integers(2, 50))
        x = rng.standard_normal(n) * rng.uniform(0.01, 100)
        if np.std(x) == 0:
            continue
        assert pcc(x, x) == 1.0
        assert pcc(x, -x) == -1.0
    _report("pcc-oracle (1000 pairs within 1e-12; +/-1 exact)")


# ---------------------------------------------------------------------------
# 3..5. Feature laws
# ---------------------------------------------------------------------------

def test_acceptance_feature_length_laws():
    rng = np.random.default_rng(2)
    for _ in range(500):
        t, p = random_pair(rng)
        bundle = _bundle_for_pair(t, p, rng)
        assert bundle.word_features.shape[0] == len(t.words)
        assert bundle.phone_features.shape[0] == len(t.phones())
    _report("feature-length-laws (500 fuzzed pairs)")


def test_acceptance_identity_law():
    rng = np.random.default_rng(3)
    for _ in range(500):
        t, p = identical_pair(rng)
        for f in compute_word_features(t, p, align_words_by_time(t, p)):
            assert f.distance == 0.0 and f.phone_distance == 0.0
            assert f.time_diff_start == 0.0 and f.time_diff_end == 0.0
            assert f.phone_ratio == 1.0
        for f in compute_phone_features(t, p):
            assert f.time_diff == 0.0
    _report("identity-law (500 fuzzed identical pairs)")


def test_acceptance_time_shift_invariance():
    rng = np.random.default_rng(4)
    for _ in range(500):
        t, p = random_pair(rng)
        emb_t = random_embeddings(rng, len(t.words))
        emb_p = random_embeddings(rng, len(p.words))
        base = build_feature_bundle(t, p, emb_t, emb_p)
        delta = int(rng.integers(0, 2**15)) * GRID
        shifted = build_feature_bundle(t.shifted(delta), p.shifted(delta), emb_t, emb_p)
        for name, arr in base.arrays().items():
            if name == "word_spans":
                continue
            assert np.array_equal(arr, shifted.arrays()[name]), name
    _report("time-shift-invariance (500 fuzzed shifts, exact)")


# ---------------------------------------------------------------------------
# 6. Pooling oracle
# ---------------------------------------------------------------------------

def test_acceptance_pooling_oracle():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        t, p = random_pair(rng)
        bundle = _bundle_for_pair(t, p, rng)
        max_end = max(w.end for w in t.words)
        n_frames = int(np.ceil(max_end / 0.02)) + 3
        torch.manual_seed(seed)
        frames = torch.randn(n_frames, 6)
        fused = pool_levels(bundle, AcousticFrameSeq(frames, 0.02))
        expected = oracle_pool_levels(bundle, frames.numpy(), 0.02)
        assert np.array_equal(fused.numpy(), expected), f"seed {seed}"
    _report("pooling-oracle (100 random bundles, bit-exact)")


# ---------------------------------------------------------------------------
# 7. Model shape and gradient suite
# ---------------------------------------------------------------------------

def test_acceptance_model_shapes_and_gradients():
    cfg = ModelConfig(d=16, k=3, h=4, n_fusion_layers=1, dropout=0.0, max_words=64)
    torch.manual_seed(7)
    model = MultiTaskScorer(cfg, input_dim=11)
    model.eval()
    for w in range(1, 51):
        s, wd = model(torch.randn(1, w, 11))
        assert s.shape == (1, 4) and wd.shape == (1, w, 3)

    loss_inputs = torch.randn(2, 9, 11)
    sentence, word = model(loss_inputs)
    loss = (sentence**2).mean() + (word**2).mean()
    loss.backward()
    for name in SENTENCE_TASKS:
        grad = model.sentence_heads[name].weight.grad
        assert grad is not None and grad.abs().sum() > 0
    for name in WORD_TASKS:
        grad = model.word_heads[name].weight.grad
        assert grad is not None and grad.abs().sum() > 0

    # finite differences on a float64 twin
    torch.manual_seed(8)
    model64 = MultiTaskScorer(cfg, input_dim=11).double()
    model64.eval()
    x64 = torch.randn(2, 7, 11, dtype=torch.float64, generator=torch.Generator().manual_seed(9))
    target_s = torch.rand(2, 4, dtype=torch.float64, generator=torch.Generator().manual_seed(10))
    target_w = torch.rand(2, 7, 3, dtype=torch.float64, generator=torch.Generator().manual_seed(11))

    def loss64():
        s, w = model64(x64)
        return ((s - target_s) ** 2).mean() + ((w - target_w) ** 2).mean()

    out = loss64()
    out.backward()
    params = [p for p in model64.parameters() if p.grad is not None]
    rng = np.random.default_rng(12)
    for pi in rng.choice(len(params), size=3, replace=False):
        p = params[int(pi)]
        idx = int(rng.integers(p.numel()))
        analytic = float(p.grad.flatten()[idx])
        eps = 1e-6 * max(1.0, abs(float(p.data.flatten()[idx])))
        with torch.no_grad():
            p.data.flatten()[idx] += eps
            up = loss64().item()
            p.data.flatten()[idx] -= 2 * eps
            down = loss64().item()
            p.data.flatten()[idx] += eps
        numeric = (up - down) / (2 * eps)
        denom = max(abs(analytic), abs(numeric), 1e-12)
        assert abs(analytic - numeric) / denom < 1e-2
    _report("model-shapes-and-gradients (W=1..50; heads live; 3-param FD within 1e-2)")


# ---------------------------------------------------------------------------
# 8. Overfit smoke
# ---------------------------------------------------------------------------

def test_acceptance_overfit_smoke(tmp_path):
    t0 = time.time()
    paths = make_toy_dataset(tmp_path / "toy", n_train=8, n_test=2, seed=0)
    records, ranges = load_dataset(paths["train"])
    # recipe knobs pinned by the criterion: <=30 epochs, frozen extractor,
    # CPU runtime; the smoke learning rate is raised so 30 epochs suffice
    tcfg = TrainingConfig(
        seed=0,
        max_epochs=30,
        learning_rate=5e-3,
        momentum=0.7,
        batch_size=2,
        early_stop_patience=30,
        freeze_backbone=True,
    )
    torch.manual_seed(0)
    trained = train_assessor(
        records, ranges, ClientConfig.synthetic(), small_model_config(), tcfg
    )
    losses = [e.train_loss for e in trained.log.epochs]
    elapsed = time.time() - t0
    assert len(losses) <= 30
    assert losses[-1] <= 0.5 * losses[0], f"loss {losses[0]:.4f} -> {losses[-1]:.4f}"
    assert elapsed < 600.0, f"overfit smoke took {elapsed:.0f}s"
    _report(
        f"overfit-smoke (loss {losses[0]:.3f} -> {losses[-1]:.3f} "
        f"in {len(losses)} epochs, {elapsed:.0f}s)"
    )


# ---------------------------------------------------------------------------
# 9..10. Completeness
# ---------------------------------------------------------------------------

def _aligned_with_durations(durations):
    cursor = 0.0
    words = []
    for i, d in enumerate(durations):
        words.append(TimedWord(f"w{i}", cursor, cursor + d, []))
        cursor += d + 0.05
    return AlignedTranscript("utt", words, "target")


def test_acceptance_completeness_unit_law():
    res = completeness_score(
        _aligned_with_durations([0.3, 0.3, 0.02, 0.3, 0.3]), CompletenessConfig(0.07)
    )
    assert res.score == 0.8
    rng = np.random.default_rng(13)
    for _ in range(500):
        durations = rng.uniform(0.001, 0.8, size=int(rng.integers(1, 20)))
        t1, t2 = sorted(rng.uniform(0.0, 0.5, size=2))
        a = _aligned_with_durations(durations)
        s_lo = completeness_score(a, CompletenessConfig(t1)).score
        s_hi = completeness_score(a, CompletenessConfig(t2)).score
        assert s_lo >= s_hi
    _report("completeness-unit-law (score 0.8 exact; monotone over 500 fuzz cases)")


def test_acceptance_completeness_synthetic_sweep():
    t0 = time.time()
    complete, incomplete = sample_completeness_populations(PopulationConfig(), seed=7)
    report = sweep_thresholds(complete, incomplete)
    elapsed = time.time() - t0
    assert 0.04 <= report.best_threshold <= 0.12, report.best_threshold
    assert report.best_f1 >= 0.80, report.best_f1
    assert elapsed < 30.0
    _report(
        f"completeness-synthetic-sweep (best t={report.best_threshold:.3f}s, "
        f"F1={report.best_f1:.3f}, {elapsed:.1f}s)"
    )


# ---------------------------------------------------------------------------
# 11. Fallback accounting
# ---------------------------------------------------------------------------

class _AlwaysFailing:
    def assess(self, record, mode):
        raise AssessmentUnavailable(record.utterance_id)


class _FailButFirst(PerfectScorer):
    def __init__(self, survivor_id):
        self.survivor_id = survivor_id

    def assess(self, record, mode):
        if record.utterance_id != self.survivor_id:
            raise AssessmentUnavailable(record.utterance_id)
        return super().assess(record, mode)


def test_acceptance_fallback_accounting():
    records = _fake_records(n=20, seed=17)
    fallback = FallbackScores.from_records(records)
    for d in SENTENCE_LABEL_DIMS:
        assert fallback.sentence[d] == min(r.sentence_labels[d] for r in records)

    frag = evaluate_closed(_AlwaysFailing(), records, fallback)
    assert frag.fallback_count == 20
    for dim, value in frag.sentence.items():
        assert value is None and "constant" in frag.notes[f"sentence.{dim}"]

    # PCC fingerprint: with 19 fallbacks and one genuine prediction, the PCC
    # only matches the oracle if the injected values are exactly the minima
    survivor = records[0]
    frag = evaluate_closed(_FailButFirst(survivor.utterance_id), records, fallback)
    assert frag.fallback_count == 19
    for dim in SENTENCE_LABEL_DIMS:
        preds = [survivor.sentence_labels[dim]] + [fallback.sentence[dim]] * 19
        labels = [r.sentence_labels[dim] for r in records]
        try:
            expected = oracle_pcc(preds, labels)
        except ZeroDivisionError:
            assert frag.sentence[dim] is None
            continue
        assert frag.sentence[dim] == pytest.approx(expected, abs=1e-12)
    _report("fallback-accounting (count exact; predictions are the training minima)")


# ---------------------------------------------------------------------------
# 12. Open-response remapping
# ---------------------------------------------------------------------------

def test_acceptance_open_response_remapping():
    recognized = AlignedTranscript(
        "utt", [TimedWord("blend", 0.0, 1.0, [])], "asrt"
    )
    truth = AlignedTranscript(
        "utt",
        [TimedWord("six", 0.0, 0.4, []), TimedWord("ten", 0.5, 1.0, [])],
        "target",
    )
    labels = [
        {"accuracy": 6.0, "stress": 6.0, "total": 6.0},
        {"accuracy": 10.0, "stress": 10.0, "total": 10.0},
    ]
    targets, unmatched = map_open_response_targets(recognized, truth, labels)
    assert unmatched == 0
    assert targets[0] == {"accuracy": 8.0, "stress": 8.0, "total": 8.0}

    # identity remapping: recognized == truth implies open == closed word PCC
    records = _fake_records(n=10, seed=19)
    fallback = FallbackScores.from_records(records)
    scorer = PerfectScorer()
    from test_evaluation import _aligned_for

    closed = evaluate_closed(scorer, records, fallback)
    opened = evaluate_open(scorer, records, fallback, truth_aligner=_aligned_for)
    for dim in WORD_LABEL_DIMS:
        assert opened.word[dim] == pytest.approx(closed.word[dim], abs=1e-12)
    _report("open-response-remapping (6,10 -> 8 exact; identity remap == closed)")


# ---------------------------------------------------------------------------
# 13. Corpus-scale reproduction: documented, not desk-runnable
# ---------------------------------------------------------------------------

@pytest.mark.skip(
    reason="full reproduction needs speechocean762 + pretrained Whisper/HuBERT/"
    "RoBERTa/aligner weights and multi-hour GPU training (5 seeds); see README"
)
def test_acceptance_full_corpus_reproduction():
    raise NotImplementedError
