import numpy as np
import pytest

from longalign.lgts import LogitMatrix
from longalign.textnorm import ascii_config

VOCAB = ["<blank>", "|"] + list("abcdefghijklmnopqrstuvwxyz")


@pytest.fixture
def norm_config():
    return ascii_config()


def logsoftmax(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x - np.log(np.exp(x).sum(axis=1, keepdims=True))


def onehot_logits(seq, vocab=None, blank=0, delim=1, frame_ms=20.0, hi=12.0):
    """Near-one-hot log-softmax matrix emitting symbol ids in ``seq``."""
    vocab = vocab or VOCAB
    t_len, v = len(seq), len(vocab)
    x = np.zeros((t_len, v))
    for t, s in enumerate(seq):
        x[t, s] = hi
    return LogitMatrix(logsoftmax(x).astype(np.float32), vocab, blank, delim, frame_ms)


def random_logits(rng, t_len, v, vocab=None, frame_ms=20.0):
    vocab = vocab or VOCAB[:v]
    x = logsoftmax(rng.normal(size=(t_len, v))) if t_len else np.zeros((0, v))
    return LogitMatrix(x.astype(np.float32), vocab[:v], 0, 1, frame_ms)


def sym_ids(text, vocab=None):
    vocab = vocab or VOCAB
    index = {s: i for i, s in enumerate(vocab)}
    return [index["|"] if ch == " " else index[ch] for ch in text]
