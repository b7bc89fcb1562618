"""Tone-coded speech: a deterministic, self-contained audio codec.

Each phone renders as a pure tone at a frequency unique to the phone;
phones inside a word are separated by short silences and words by longer
ones.  The same signal model drives the synthetic recognizer and forced
aligner used for fixtures, toy datasets and desk-scale runs, so the whole
pipeline can be exercised end to end without any pretrained weights.

Everything here is pure DSP on numpy arrays: no randomness, no state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import CANONICAL_RATE, AudioClip
from .phones import INVENTORY, PHONE_INDEX, SILENCE, phones_to_word, word_to_phones

HOP = 160  # 10 ms analysis hop
WIN = 400  # 25 ms analysis window
WORD_GAP = 0.06  # silence between words
PHONE_GAP = 0.02  # silence between phones inside a word
LEAD_SILENCE = 0.05
TAPER = 0.004  # attack/decay ramp per phone
AMPLITUDE = 0.3
TINY_SPAN = 0.005  # span given to a phone the aligner cannot place
WORD_SPLIT_FRAMES = 4  # silence >= this many frames separates words
BAND_HALF_WIDTH = 45.0  # Hz collected around each nominal tone (center bin +/- 1)
POSTERIOR_POWER = 4.0
MIN_RUN_FRAMES = 3  # sustained label changes only; edge jitter merges away


def phone_frequency(index: int) -> float:
    """Nominal tone for an inventory index.

    Tones sit exactly on FFT bins (40 Hz grid for a 25 ms window) two bins
    apart, where the Hann window has exact spectral nulls, so neighboring
    phones barely leak into each other's bands.
    """
    return 320.0 + 80.0 * index

def phone_render_duration(index: int) -> float:
    return 0.08 + 0.012 * (index % 5)


def synthesize_words(words: list[str], sample_rate: int = CANONICAL_RATE) -> np.ndarray:
    """Render a word sequence as tone-coded audio (mono float32)."""
    chunks = [np.zeros(int(LEAD_SILENCE * sample_rate))]
    ntap = int(TAPER * sample_rate)
    ramp = np.linspace(0.0, 1.0, ntap)
    for w, word in enumerate(words):
        if w > 0:
            chunks.append(np.zeros(int(WORD_GAP * sample_rate)))
        for k, phone in enumerate(word_to_phones(word)):
            if k > 0:
                chunks.append(np.zeros(int(PHONE_GAP * sample_rate)))
            idx = PHONE_INDEX[phone]
            n = int(phone_render_duration(idx) * sample_rate)
            t = np.arange(n) / sample_rate
            tone = AMPLITUDE * np.sin(2.0 * np.pi * phone_frequency(idx) * t)
            env = np.ones(n)
            env[:ntap] = ramp
            env[-ntap:] = ramp[::-1]
            chunks.append(tone * env)
    chunks.append(np.zeros(int(LEAD_SILENCE * sample_rate)))
    return np.concatenate(chunks).astype(np.float32)


def synthesize_clip(text_words: list[str], clip_id: str) -> AudioClip:
    return AudioClip(synthesize_words(text_words), CANONICAL_RATE, clip_id).validate()


@dataclass
class ToneSegment:
    phone_index: int
    start: float
    end: float
    posterior: np.ndarray  # over the full inventory, sums to 1


def _frame_features(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame RMS energy and magnitude spectrum."""
    n_frames = 1 + (len(samples) - WIN) // HOP if len(samples) >= WIN else 0
    if n_frames <= 0:
        return np.zeros(0), np.zeros((0, WIN // 2 + 1))
    frames = np.lib.stride_tricks.sliding_window_view(samples, WIN)[::HOP][:n_frames]
    frames = frames * np.hanning(WIN)
    energy = np.sqrt((frames**2).mean(axis=1))
    spectra = np.abs(np.fft.rfft(frames, axis=1))
    return energy, spectra


_FREQS = np.fft.rfftfreq(WIN, 1.0 / CANONICAL_RATE)
_BAND_MASKS = np.stack(
    [np.abs(_FREQS - phone_frequency(i)) <= BAND_HALF_WIDTH for i in range(len(INVENTORY))]
)


def _segment_posterior(spectrum: np.ndarray) -> tuple[int, np.ndarray]:
    band = _BAND_MASKS @ spectrum
    band[0] = 1e-4 * band.sum()  # silence floor: never dominates a real tone
    sharpened = band**POSTERIOR_POWER
    posterior = sharpened / sharpened.sum()
    return int(band[1:].argmax()) + 1, posterior


def detect_segments(samples: np.ndarray) -> list[list[ToneSegment]]:
    """Segment audio into word groups of phone-level tone segments.

    Returns an empty list when the signal carries no speech energy.
    """
    energy, spectra = _frame_features(np.asarray(samples, dtype=np.float64))
    if len(energy) == 0 or energy.max() < 1e-5:
        return []
    speech = energy > 0.15 * energy.max()
    islands: list[tuple[int, int]] = []
    f = 0
    while f < len(speech):
        if speech[f]:
            g = f
            while g + 1 < len(speech) and speech[g + 1]:
                g += 1
            if g - f + 1 >= 2:  # single-frame blips are taper noise
                islands.append((f, g))
            f = g + 1
        else:
            f += 1
    if not islands:
        return []

    groups: list[list[tuple[int, int]]] = [[islands[0]]]
    for prev, nxt in zip(islands, islands[1:]):
        if nxt[0] - prev[1] - 1 >= WORD_SPLIT_FRAMES:
            groups.append([])
        groups[-1].append(nxt)

    out: list[list[ToneSegment]] = []
    for group in groups:
        segs: list[ToneSegment] = []
        for a, b in group:
            # one island is normally one phone; split only on sustained label
            # changes so merged phones still come apart
            labels = [_segment_posterior(spectra[f])[0] for f in range(a, b + 1)]
            runs: list[tuple[int, int, int]] = []
            s = 0
            for i in range(1, len(labels) + 1):
                if i == len(labels) or labels[i] != labels[s]:
                    runs.append((labels[s], a + s, a + i - 1))
                    s = i
            merged: list[tuple[int, int, int]] = []
            pending_start: int | None = None
            for lab, ra, rb in runs:
                if rb - ra + 1 < MIN_RUN_FRAMES:
                    if merged:
                        merged[-1] = (merged[-1][0], merged[-1][1], rb)
                    elif pending_start is None:
                        pending_start = ra
                else:
                    if pending_start is not None:
                        ra, pending_start = pending_start, None
                    merged.append((lab, ra, rb))
            if not merged:  # island too short to carry a sustained label
                merged.append((labels[0], a, b))
            for _, ra, rb in merged:
                spec = spectra[ra : rb + 1].sum(axis=0)
                idx, post = _segment_posterior(spec)
                segs.append(
                    ToneSegment(idx, ra * HOP / CANONICAL_RATE, (rb + 1) * HOP / CANONICAL_RATE, post)
                )
        if segs:
            out.append(segs)
    return out


def recognize_words(samples: np.ndarray) -> list[tuple[str, list[ToneSegment]]]:
    """Decode tone-coded audio into words with their phone segments."""
    decoded = []
    for group in detect_segments(samples):
        word = phones_to_word([INVENTORY[s.phone_index] for s in group])
        if word:
            decoded.append((word, group))
    return decoded


def _silence_posterior() -> np.ndarray:
    post = np.full(len(INVENTORY), 0.08 / (len(INVENTORY) - 1))
    post[PHONE_INDEX[SILENCE]] = 0.92
    return post


@dataclass
class AlignedPhoneSpan:
    label: str
    start: float
    end: float
    posterior: np.ndarray
    matched: bool


def align_phones(expected: list[str], samples: np.ndarray) -> list[AlignedPhoneSpan]:
    """Map an expected phone sequence onto the signal's tone segments.

    Classic edit-distance alignment: matching a segment is free, crossing a
    mismatched pair costs less than skipping both sides, so surviving words
    keep their true spans while phones with no acoustic support collapse to
    near-zero spans at the position where they should have occurred.
    """
    segments = [s for group in detect_segments(samples) for s in group]
    n, m = len(expected), len(segments)
    if n == 0:
        return []
    SUB, INDEL = 0.4, 1.0
    cost = np.zeros((n + 1, m + 1))
    cost[:, 0] = np.arange(n + 1) * INDEL
    cost[0, :] = np.arange(m + 1) * INDEL
    exp_idx = [PHONE_INDEX.get(p, 0) for p in expected]
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            sub = cost[i - 1, j - 1] + (0.0 if exp_idx[i - 1] == segments[j - 1].phone_index else SUB)
            cost[i, j] = min(sub, cost[i - 1, j] + INDEL, cost[i, j - 1] + INDEL)
    # traceback: which segment (if any) realizes each expected phone
    assign: list[int | None] = [None] * n
    i, j = n, m
    while i > 0 and j > 0:
        sub = cost[i - 1, j - 1] + (0.0 if exp_idx[i - 1] == segments[j - 1].phone_index else SUB)
        if cost[i, j] == sub:
            assign[i - 1] = j - 1
            i, j = i - 1, j - 1
        elif cost[i, j] == cost[i - 1, j] + INDEL:
            i -= 1
        else:
            j -= 1

    spans: list[AlignedPhoneSpan] = []
    cursor = 0.0
    for k, label in enumerate(expected):
        j = assign[k]
        if j is None:
            spans.append(AlignedPhoneSpan(label, cursor, cursor + TINY_SPAN, _silence_posterior(), False))
            cursor += TINY_SPAN
        else:
            seg = segments[j]
            spans.append(AlignedPhoneSpan(label, seg.start, seg.end, seg.posterior.copy(), True))
            cursor = seg.end
    return spans
