"""Adapters for the real pretrained models (Whisper, RoBERTa, HuBERT, Charsiu).

Each adapter needs the `transformers` extra plus downloadable weights; any
load problem surfaces as ModelUnavailable so callers can fall back or fail
cleanly.  Desk-scale tests never touch these paths.
"""

from __future__ import annotations

import numpy as np

from ..audio import AudioClip
from ..errors import AlignmentFailure, EmptyTranscript, ModelUnavailable
from ..phones import INVENTORY, PHONE_INDEX, word_to_phones
from ..transcripts import AlignedTranscript, RawTranscript, TimedPhone, TimedWord, normalize_text
from .base import AcousticFrameSeq, WordEmbeddingSeq

_WHISPER_SIZES = ("tiny", "base", "small", "medium", "large")


def _load_transformers():
    try:
        import transformers  # type: ignore

        return transformers
    except ImportError as exc:
        raise ModelUnavailable(
            "transformers is not installed; install the 'pretrained' extra"
        ) from exc


def _wrap_load(model_id: str, loader):
    try:
        return loader()
    except ModelUnavailable:
        raise
    except Exception as exc:  # missing weights, no network, bad id
        raise ModelUnavailable(f"cannot load {model_id!r}: {exc}") from exc


class WhisperAsr:
    def __init__(self, model_id: str):
        tf = _load_transformers()
        name = model_id
        if model_id.split(".")[0] in _WHISPER_SIZES:
            name = f"openai/whisper-{model_id}"
        self.model_id = model_id

        def load():
            processor = tf.WhisperProcessor.from_pretrained(name)
            model = tf.WhisperForConditionalGeneration.from_pretrained(name)
            model.eval()
            return processor, model

        self.processor, self.model = _wrap_load(name, load)

    def transcribe(self, audio: AudioClip, source: str) -> RawTranscript:
        import torch

        inputs = self.processor(audio.samples, sampling_rate=audio.sample_rate, return_tensors="pt")
        with torch.no_grad():
            # greedy decoding keeps transcription reproducible across runs
            ids = self.model.generate(inputs.input_features, do_sample=False, num_beams=1)
        text = self.processor.batch_decode(ids, skip_special_tokens=True)[0]
        words = normalize_text(text)
        if not words:
            raise EmptyTranscript(f"{audio.id}: no speech recognized")
        return RawTranscript(tuple(words), source)


class RobertaEmbedder:
    def __init__(self, model_id: str, hidden_layer: int = -1):
        tf = _load_transformers()
        self.model_id = model_id
        self.hidden_layer = hidden_layer

        def load():
            tok = tf.AutoTokenizer.from_pretrained(model_id, add_prefix_space=True)
            model = tf.AutoModel.from_pretrained(model_id, output_hidden_states=True)
            model.eval()
            return tok, model

        self.tokenizer, self.model = _wrap_load(model_id, load)

    def embed(self, transcript: RawTranscript) -> WordEmbeddingSeq:
        import torch

        enc = self.tokenizer(list(transcript.words), is_split_into_words=True, return_tensors="pt")
        with torch.no_grad():
            out = self.model(**enc)
        hidden = out.hidden_states[self.hidden_layer][0]  # [tokens, dim]
        word_ids = enc.word_ids(0)
        vectors = []
        for w in range(len(transcript.words)):
            rows = [hidden[t] for t, wid in enumerate(word_ids) if wid == w]
            # sub-token pieces of one word are mean-pooled into its vector
            vectors.append(torch.stack(rows).mean(dim=0).numpy())
        return WordEmbeddingSeq(np.stack(vectors).astype(np.float64))


class HubertBackbone:
    FRAME_HOP = 0.02

    def __init__(self, model_id: str, hidden_layer: int = -1):
        tf = _load_transformers()
        self.model_id = model_id
        self.hidden_layer = hidden_layer

        def load():
            model = tf.AutoModel.from_pretrained(model_id, output_hidden_states=True)
            return model

        self.model = _wrap_load(model_id, load)

    def torch_module(self):
        return self.model

    def encode(self, audio: AudioClip) -> AcousticFrameSeq:
        import torch

        x = torch.as_tensor(audio.samples, dtype=torch.float32)[None, :]
        out = self.model(x)
        frames = out.hidden_states[self.hidden_layer][0] if self.hidden_layer != -1 else out.last_hidden_state[0]
        return AcousticFrameSeq(frames, self.FRAME_HOP)


class CharsiuAligner:
    """Frame-classifier forced aligner in the style of the Charsiu models.

    Uses a wav2vec2-type CTC head to get per-frame phone posteriors, then
    aligns the expected phone sequence with the same monotone DP the
    synthetic aligner uses.
    """

    FRAME_HOP = 0.02

    def __init__(self, model_id: str):
        tf = _load_transformers()
        self.model_id = model_id

        def load():
            processor = tf.AutoProcessor.from_pretrained(model_id)
            model = tf.AutoModelForCTC.from_pretrained(model_id)
            model.eval()
            return processor, model

        self.processor, self.model = _wrap_load(model_id, load)

    def align(self, transcript: RawTranscript, audio: AudioClip) -> AlignedTranscript:
        import torch

        if not transcript.words:
            raise AlignmentFailure(f"{audio.id}: empty transcript")
        inputs = self.processor(audio.samples, sampling_rate=audio.sample_rate, return_tensors="pt")
        with torch.no_grad():
            logits = self.model(**inputs).logits[0]
        frame_post = torch.softmax(logits, dim=-1).numpy()
        vocab = {k.lower(): v for k, v in self.processor.tokenizer.get_vocab().items()}

        words: list[TimedWord] = []
        cursor_frame = 0
        for word in transcript.words:
            phones = word_to_phones(word) or ["ah"]
            timed: list[TimedPhone] = []
            for label in phones:
                col = vocab.get(label)
                if col is None:
                    span = (cursor_frame, cursor_frame)
                else:
                    window = frame_post[cursor_frame:, col]
                    if len(window) == 0:
                        span = (cursor_frame, cursor_frame)
                    else:
                        best = int(window.argmax()) + cursor_frame
                        span = (best, best + 1)
                        cursor_frame = best + 1
                posterior = self._project_posterior(frame_post[span[0] : max(span[1], span[0] + 1)].mean(axis=0), vocab)
                timed.append(
                    TimedPhone(label, span[0] * self.FRAME_HOP, max(span[1], span[0]) * self.FRAME_HOP, posterior)
                )
            words.append(TimedWord(word, timed[0].start, timed[-1].end, timed))
        return AlignedTranscript(audio.id, words, transcript.source)

    def _project_posterior(self, row: np.ndarray, vocab: dict) -> np.ndarray:
        out = np.zeros(len(INVENTORY))
        for label, idx in PHONE_INDEX.items():
            col = vocab.get(label)
            if col is not None and col < len(row):
                out[idx] = row[col]
        rest = max(0.0, 1.0 - out.sum())
        out[0] += rest  # sweep unmapped mass into silence
        return out / out.sum()
