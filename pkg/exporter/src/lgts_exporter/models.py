"""Acoustic model backends producing per-frame character log-probabilities.

Two backends exist: a deterministic stub ("stub:<text>") that emits a
near-one-hot spelling of the given text and needs no model runtime, and
a transformers CTC checkpoint backend (any Wav2Vec2-style character
model). All algorithmic work lives in the alignment engine; this module
only produces log-softmaxed rows plus vocabulary metadata.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ModelLoadError(Exception):
    pass


class AudioDecodeError(Exception):
    pass


@dataclass
class ModelOutput:
    frames: np.ndarray
    vocab: list[str]
    blank_id: int
    word_delim_id: int


# Stub emission profile: hot symbol takes 0.96, the rest share 0.04.
# The checked-in cross-component fixture files pin these exact values.
STUB_HOT = 0.96


def stub_rows(text: str) -> ModelOutput:
    """Near-one-hot rows spelling ``text``: leading/trailing blanks, one
    frame per symbol, a blank between repeated symbols, '|' for spaces."""
    if not text:
        raise ModelLoadError("stub model needs a non-empty text")
    vocab = ["<blank>", "|"]
    for ch in text:
        sym = "|" if ch == " " else ch
        if sym not in vocab:
            vocab.append(sym)
    index = {s: i for i, s in enumerate(vocab)}
    seq = [0]
    for ch in text:
        sym = index["|"] if ch == " " else index[ch]
        if sym == seq[-1]:
            seq.append(0)  # CTC: blank between repeated symbols
        seq.append(sym)
    seq.append(0)
    v = len(vocab)
    floor = (1.0 - STUB_HOT) / (v - 1)
    rows = np.full((len(seq), v), floor, dtype=np.float64)
    rows[np.arange(len(seq)), seq] = STUB_HOT
    return ModelOutput(np.log(rows).astype(np.float32), vocab, 0, 1)


def load_audio_16k(path) -> np.ndarray:
    """Mono float32 samples at 16 kHz from a PCM WAV file."""
    from scipy.io import wavfile
    from scipy.signal import resample_poly
    try:
        rate, data = wavfile.read(str(path))
    except (ValueError, FileNotFoundError, EOFError) as exc:
        raise AudioDecodeError(f"{path}: {exc}")
    if data.ndim != 1:
        raise AudioDecodeError(f"{path}: expected mono audio, got shape {data.shape}")
    if data.dtype == np.int16:
        samples = data.astype(np.float32) / 32768.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float32)
    else:
        raise AudioDecodeError(f"{path}: unsupported sample format {data.dtype}")
    if rate != 16000:
        from math import gcd
        g = gcd(rate, 16000)
        samples = resample_poly(samples, 16000 // g, rate // g).astype(np.float32)
    return samples


def expected_frames(n_samples: int, frame_ms: float, sample_rate: int = 16000) -> int:
    """Frame count for a given duration at the model stride."""
    return int(round(n_samples / sample_rate * 1000.0 / frame_ms))


class TransformersCtcModel:
    """Wav2Vec2-style CTC checkpoint via the transformers library."""

    def __init__(self, model_id: str):
        try:
            import torch  # noqa: F401
            from transformers import AutoModelForCTC, AutoProcessor
        except ImportError as exc:
            raise ModelLoadError(
                f"transformers backend unavailable: {exc}; "
                "install with the [model] extra"
            )
        try:
            self.processor = AutoProcessor.from_pretrained(model_id)
            self.model = AutoModelForCTC.from_pretrained(model_id)
        except Exception as exc:
            raise ModelLoadError(f"cannot load CTC checkpoint {model_id!r}: {exc}")
        self.model.eval()

    def run(self, samples: np.ndarray, batch_seconds: float = 30.0) -> ModelOutput:
        import torch
        tokenizer = self.processor.tokenizer
        vocab = [None] * tokenizer.vocab_size
        for token, idx in tokenizer.get_vocab().items():
            if idx < len(vocab):
                vocab[idx] = token
        vocab = [t if t is not None else f"<id{i}>" for i, t in enumerate(vocab)]
        blank_id = tokenizer.pad_token_id
        word_delim = getattr(tokenizer, "word_delimiter_token", "|")
        word_delim_id = vocab.index(word_delim) if word_delim in vocab else blank_id

        step = int(batch_seconds * 16000)
        chunks = []
        with torch.inference_mode():
            for lo in range(0, len(samples), step):
                window = samples[lo:lo + step]
                if len(window) < 400:  # below one receptive field
                    break
                inputs = self.processor(
                    window, sampling_rate=16000, return_tensors="pt"
                )
                logits = self.model(inputs.input_values).logits[0]
                chunks.append(torch.log_softmax(logits, dim=-1).cpu().numpy())
        frames = (np.concatenate(chunks) if chunks
                  else np.zeros((0, len(vocab)), dtype=np.float32))
        return ModelOutput(frames.astype(np.float32), vocab, blank_id, word_delim_id)


def load_model(model_id: str):
    """Backend factory: 'stub:<text>' or a transformers checkpoint id."""
    if model_id.startswith("stub:"):
        text = model_id[len("stub:"):]

        class _Stub:
            def run(self, samples=None):
                return stub_rows(text)

        return _Stub()
    return TransformersCtcModel(model_id)
