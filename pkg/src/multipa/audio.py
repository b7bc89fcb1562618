"""Audio ingestion: everything downstream sees 16 kHz mono float32."""

from __future__ import annotations

import hashlib
import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import resample_poly

CANONICAL_RATE = 16000


@dataclass
class AudioClip:
    samples: np.ndarray  # mono float32 in [-1, 1]
    sample_rate: int
    id: str

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def validate(self) -> "AudioClip":
        if self.sample_rate != CANONICAL_RATE:
            raise ValueError(f"{self.id}: sample_rate {self.sample_rate} != {CANONICAL_RATE}")
        if len(self.samples) == 0:
            raise ValueError(f"{self.id}: empty audio")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError(f"{self.id}: non-finite samples")
        return self

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.samples, dtype=np.float32).tobytes())
        h.update(str(self.sample_rate).encode())
        return h.hexdigest()[:16]


def canonicalize(samples: np.ndarray, sample_rate: int, clip_id: str) -> AudioClip:
    """Resample to 16 kHz, downmix to mono, cast to float32."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 2:
        x = x.mean(axis=1)
    if sample_rate != CANONICAL_RATE:
        from math import gcd

        g = gcd(int(sample_rate), CANONICAL_RATE)
        x = resample_poly(x, CANONICAL_RATE // g, int(sample_rate) // g)
    return AudioClip(x.astype(np.float32), CANONICAL_RATE, clip_id).validate()


def read_wav(path: str | Path, clip_id: str | None = None) -> AudioClip:
    """Read a PCM or float WAV file and canonicalize it.

    Supports 8/16/32-bit integer and 32-bit float encodings, any channel
    count and rate.
    """
    path = Path(path)
    with wave.open(str(path), "rb") as wf:
        n_channels = wf.getnchannels()
        width = wf.getsampwidth()
        rate = wf.getframerate()
        raw = wf.readframes(wf.getnframes())
    if width == 1:
        x = (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    elif width == 2:
        x = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    elif width == 4:
        as_int = np.frombuffer(raw, dtype="<i4")
        as_float = np.frombuffer(raw, dtype="<f4")
        # stdlib wave reports no format code; treat plausible float data as float
        if np.all(np.isfinite(as_float)) and np.abs(as_float).max(initial=0.0) <= 4.0:
            x = as_float.astype(np.float64)
        else:
            x = as_int.astype(np.float64) / 2147483648.0
    else:
        raise ValueError(f"unsupported WAV sample width {width}")
    if n_channels > 1:
        x = x.reshape(-1, n_channels)
    return canonicalize(x, rate, clip_id or path.stem)


def write_wav(path: str | Path, clip: AudioClip) -> None:
    """Write a clip as 16-bit PCM WAV."""
    pcm = np.clip(clip.samples, -1.0, 1.0)
    pcm = (pcm * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(clip.sample_rate)
        wf.writeframes(pcm.tobytes())


def decode_audio_bytes(data: bytes, clip_id: str) -> AudioClip:
    """Decode an uploaded audio payload.

    WAV is decoded natively; other containers are handed to soundfile when
    that library is importable, otherwise the payload is rejected.
    """
    import io

    if data[:4] == b"RIFF":
        bio = io.BytesIO(data)
        with wave.open(bio, "rb") as wf:
            n_channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
        if width == 2:
            x = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
        elif width == 1:
            x = (np.frombuffer(raw, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
        elif width == 4:
            x = np.frombuffer(raw, dtype="<i4").astype(np.float64) / 2147483648.0
        else:
            raise ValueError(f"unsupported WAV sample width {width}")
        if n_channels > 1:
            x = x.reshape(-1, n_channels)
        return canonicalize(x, rate, clip_id)
    try:
        import soundfile  # type: ignore
    except ImportError as exc:
        raise ValueError("only WAV uploads are supported in this build") from exc
    x, rate = soundfile.read(io.BytesIO(data), dtype="float64")
    return canonicalize(x, rate, clip_id)
