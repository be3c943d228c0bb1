import json
import struct
from pathlib import Path

import numpy as np
import pytest

from longalign.ctc_decode import greedy_decode
from longalign.errors import ParseError
from longalign.lgts import MAGIC, read_lgts, write_lgts

from conftest import onehot_logits, sym_ids

FIXTURE = Path(__file__).parent / "data" / "fixture_onehot_test.lgts"


def test_round_trip(tmp_path):
    m = onehot_logits(sym_ids("ab c"))
    m.start_offset_ms = 1234.5
    path = tmp_path / "x.lgts"
    write_lgts(path, m)
    loaded = read_lgts(path)
    assert loaded.vocab == m.vocab
    assert loaded.blank_id == m.blank_id
    assert loaded.word_delim_id == m.word_delim_id
    assert loaded.frame_duration_ms == m.frame_duration_ms
    assert loaded.start_offset_ms == m.start_offset_ms
    assert np.array_equal(loaded.frames, m.frames)


def test_header_layout_is_exact(tmp_path):
    m = onehot_logits(sym_ids("a"), vocab=["<blank>", "|", "a"])
    path = tmp_path / "x.lgts"
    write_lgts(path, m)
    blob = path.read_bytes()
    t_len, v = m.frames.shape
    expected_header = struct.pack("<4sIIIIIfd", MAGIC, 1, t_len, v, 0, 1, 20.0, 0.0)
    assert blob[:len(expected_header)] == expected_header
    trailer = json.dumps({"vocab": m.vocab}, ensure_ascii=False).encode("utf-8")
    (trailer_len,) = struct.unpack("<Q", blob[-8:])
    assert trailer_len == len(trailer)
    assert blob[-8 - trailer_len:-8] == trailer
    body = np.frombuffer(blob, dtype="<f4", count=t_len * v, offset=len(expected_header))
    assert np.array_equal(body.reshape(t_len, v), m.frames)


def test_bad_magic(tmp_path):
    path = tmp_path / "x.lgts"
    path.write_bytes(b"NOPE" + b"\x00" * 60)
    with pytest.raises(ParseError):
        read_lgts(path)


def test_truncated_file(tmp_path):
    path = tmp_path / "x.lgts"
    path.write_bytes(b"LG")
    with pytest.raises(ParseError):
        read_lgts(path)


def test_layout_mismatch_detected(tmp_path):
    m = onehot_logits(sym_ids("ab"))
    path = tmp_path / "x.lgts"
    write_lgts(path, m)
    blob = bytearray(path.read_bytes())
    blob[-8:] = struct.pack("<Q", 3)  # lie about the trailer length
    path.write_bytes(bytes(blob))
    with pytest.raises(ParseError):
        read_lgts(path)


def test_row_logsumexp_is_zero(tmp_path):
    m = onehot_logits(sym_ids("ab c d"))
    path = tmp_path / "x.lgts"
    write_lgts(path, m)
    loaded = read_lgts(path)
    lse = np.log(np.exp(loaded.frames.astype(np.float64)).sum(axis=1))
    assert np.abs(lse).max() < 1e-3


def test_checked_in_fixture_parses_and_decodes():
    m = read_lgts(FIXTURE)
    assert m.vocab == ["<blank>", "|", "t", "e", "s"]
    assert (m.num_frames, m.num_symbols) == (6, 5)
    assert m.blank_id == 0 and m.word_delim_id == 1
    assert m.frame_duration_ms == 20.0
    assert greedy_decode(m).text == "test"
