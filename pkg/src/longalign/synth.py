"""Synthetic corpus + logits generator with exact ground truth.

Builds a reproducible miniature of the production inputs: a speech
corpus (JSONL), near-one-hot character logits (LGTS) for audio that
contains every speech, and VAD segment files. A configurable share of
speeches is deleted from the reference only (untranscribed audio), and
the per-file reference order is permuted in blocks, so matching has to
recover order and tolerate missing transcripts. Ground truth records
every word's start time and the injected deletion fraction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .lgts import LogitMatrix, write_lgts

LETTERS = "abcdefghijklmnopqrstuvwxyz"
VOCAB = ["<blank>", "|"] + list(LETTERS)
BLANK_ID = 0
DELIM_ID = 1


@dataclass
class GroundTruth:
    file_ids: list[str]
    word_starts: dict[tuple[str, int, int], float]  # (speech_id, sent, word) -> ms
    deleted_speeches: list[str]
    present_token_fraction: float
    tokens_per_file: dict[str, int] = field(default_factory=dict)


def _make_words(rng: np.random.Generator, count: int) -> list[str]:
    words: list[str] = []
    seen = set()
    while len(words) < count:
        n = int(rng.integers(3, 9))
        w = "".join(rng.choice(list(LETTERS), size=n))
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


def _speakers() -> list[dict]:
    return [
        {"name": f"spk{i:02d}", "role": "chair" if i % 7 == 0 else "MP",
         "party": f"P{i % 4}", "orientation": ["left", "centre", "right"][i % 3],
         "coalition": bool(i % 2), "gender": ["F", "M"][i % 2],
         "birth_year": 1950 + (i * 3) % 40}
        for i in range(12)
    ]


def _prob_row(v: int, hot: dict[int, float], floor_mass: float) -> np.ndarray:
    row = np.full(v, floor_mass / v, dtype=np.float64)
    remaining = 1.0 - floor_mass
    for sym, share in hot.items():
        row[sym] += remaining * share
    return row / row.sum()


def build_synthetic_dataset(
    root: str | Path,
    n_speeches: int = 200,
    n_files: int = 4,
    seed: int = 1234,
    noise_rate: float = 0.05,
    delete_every: int = 4,
    frame_ms: float = 20.0,
) -> GroundTruth:
    """Write corpus.jsonl, norm.json, logits/*.lgts and segments/*.json."""
    root = Path(root)
    (root / "logits").mkdir(parents=True, exist_ok=True)
    (root / "segments").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    word_pool = _make_words(rng, 2000)
    # Zipf-like type distribution: frequent function-ish words plus a long
    # hapax tail, so n-gram count-of-counts behave like real text
    ranks = np.arange(1, len(word_pool) + 1, dtype=np.float64)
    word_p = (1.0 / ranks ** 0.8)
    word_p /= word_p.sum()
    speakers = _speakers()

    # plan speeches
    speeches = []
    for idx in range(n_speeches):
        file_idx = idx * n_files // n_speeches
        n_sents = int(rng.integers(2, 5))
        sents = []
        for _ in range(n_sents):
            n_words = int(rng.integers(7, 14))
            sents.append(list(rng.choice(word_pool, size=n_words, p=word_p)))
        speeches.append({
            "speech_id": f"s{file_idx:02d}-{idx:04d}",
            "file_idx": file_idx,
            "sentences": sents,
            "speaker": speakers[idx % len(speakers)],
        })

    file_ids = [f"rec{f:02d}" for f in range(n_files)]
    truth = GroundTruth(file_ids, {}, [], 0.0)

    letter_ids = {ch: VOCAB.index(ch) for ch in LETTERS}
    for f, file_id in enumerate(file_ids):
        rows: list[np.ndarray] = []
        segments: list[tuple[float, float]] = []

        last_sym = BLANK_ID

        def pause(lo: int, hi: int):
            nonlocal last_sym
            for _ in range(int(rng.integers(lo, hi))):
                rows.append(_prob_row(len(VOCAB), {BLANK_ID: 0.996}, 0.002))
            last_sym = BLANK_ID

        def emit(sym: int, hot_share: float = 0.996, extra: dict | None = None):
            nonlocal last_sym
            if sym == last_sym:
                # CTC needs a blank between repeated symbols or they collapse
                rows.append(_prob_row(len(VOCAB), {BLANK_ID: 0.996}, 0.002))
            hot = {sym: hot_share}
            if extra:
                hot.update(extra)
            for _ in range(int(rng.integers(1, 3))):
                rows.append(_prob_row(len(VOCAB), hot, 0.002))
            last_sym = sym

        pause(5, 15)
        for speech in (s for s in speeches if s["file_idx"] == f):
            speech_start = len(rows)
            for s_k, sent in enumerate(speech["sentences"]):
                for w_k, word in enumerate(sent):
                    truth.word_starts[(speech["speech_id"], s_k, w_k)] = len(rows) * frame_ms
                    for ch in word:
                        sym = letter_ids[ch]
                        if rng.random() < noise_rate:
                            confusor = letter_ids[LETTERS[int(rng.integers(0, 26))]]
                            if confusor == sym:
                                confusor = letter_ids[LETTERS[(LETTERS.index(ch) + 1) % 26]]
                            if rng.random() < 1 / 3:
                                emit(confusor, 0.60, {sym: 0.35})  # flipped char
                            else:
                                emit(sym, 0.63, {confusor: 0.35})  # degraded char
                        else:
                            emit(sym)
                    emit(DELIM_ID)
                pause(3, 8)
            segments.append((
                max(0.0, (speech_start - 2) * frame_ms),
                (len(rows) + 2) * frame_ms,
            ))
            pause(10, 30)
        pause(5, 15)

        frames = np.log(np.stack(rows)).astype(np.float32)
        matrix = LogitMatrix(frames, VOCAB, BLANK_ID, DELIM_ID, frame_ms, 0.0)
        write_lgts(root / "logits" / f"{file_id}.lgts", matrix)
        seg_payload = [{"start_ms": s, "end_ms": min(e, len(rows) * frame_ms)}
                       for s, e in segments]
        (root / "segments" / f"{file_id}.json").write_text(
            json.dumps(seg_payload), encoding="utf-8"
        )

    # reference corpus: drop every delete_every-th speech, permute in blocks
    total_tokens = sum(len(s) for sp in speeches for s in sp["sentences"])
    present_tokens = 0
    corpus_lines = []
    for f in range(n_files):
        file_speeches = [s for s in speeches if s["file_idx"] == f]
        kept = [s for i, s in enumerate(file_speeches) if i % delete_every != delete_every - 1]
        for sp in (s for i, s in enumerate(file_speeches) if i % delete_every == delete_every - 1):
            truth.deleted_speeches.append(sp["speech_id"])
        blocks = [kept[i:i + 8] for i in range(0, len(kept), 8)]
        order = rng.permutation(len(blocks))
        for b in order:
            for speech in blocks[int(b)]:
                present_tokens += sum(len(s) for s in speech["sentences"])
                text_parts = []
                sent_spans = []
                cursor = 0
                for sent in speech["sentences"]:
                    sent_text = " ".join(sent).capitalize() + "."
                    if text_parts:
                        cursor += 1  # joining space
                    sent_spans.append([cursor, cursor + len(sent_text)])
                    text_parts.append(sent_text)
                    cursor += len(sent_text)
                corpus_lines.append({
                    "speech_id": speech["speech_id"],
                    "section_id": f"sec{f:02d}",
                    "date": f"2022-01-{(f % 27) + 1:02d}",
                    "text": " ".join(text_parts),
                    "sentences": sent_spans,
                    "speaker": speech["speaker"],
                })

    with open(root / "corpus.jsonl", "w", encoding="utf-8") as fh:
        for line in corpus_lines:
            fh.write(json.dumps(line, ensure_ascii=False) + "\n")

    norm = {
        "alphabet": LETTERS + " ",
        "drop": ".,!?;:()[]\"'",
        "space": "\t\n\r",
        "lexicon": {},
    }
    (root / "norm.json").write_text(json.dumps(norm), encoding="utf-8")

    truth.present_token_fraction = present_tokens / total_tokens
    for f, file_id in enumerate(file_ids):
        truth.tokens_per_file[file_id] = sum(
            len(s) for sp in speeches if sp["file_idx"] == f for s in sp["sentences"]
        )
    return truth


def write_demo_config(root: str | Path, workers: int = 1) -> Path:
    """A ready-to-run pipeline config pointing at the generated inputs."""
    root = Path(root)
    path = root / "config.json"
    path.write_text(json.dumps({
        "paths": {
            "logits_dir": "logits", "segments_dir": "segments",
            "corpus": "corpus.jsonl", "norm_config": "norm.json",
            "output_dir": "out", "cache_dir": "cache",
        },
        "decoder": {"beam_width": 16, "token_min_logp": -7.0},
        "workers": workers,
    }, indent=1), encoding="utf-8")
    return path


def main(argv=None) -> int:
    import argparse

    parser = argparse.ArgumentParser(
        description="Generate a synthetic demo corpus with logits and segments."
    )
    parser.add_argument("root", help="output directory for the generated inputs")
    parser.add_argument("--speeches", type=int, default=30)
    parser.add_argument("--files", type=int, default=3)
    parser.add_argument("--seed", type=int, default=1234)
    args = parser.parse_args(argv)
    truth = build_synthetic_dataset(
        args.root, n_speeches=args.speeches, n_files=args.files, seed=args.seed
    )
    config = write_demo_config(args.root)
    print(f"wrote {args.files} logits files, corpus and segments under {args.root}")
    print(f"reference keeps {truth.present_token_fraction:.1%} of spoken tokens")
    print(f"run: longalign pipeline --config {config}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
