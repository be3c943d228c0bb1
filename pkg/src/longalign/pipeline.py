"""Stage orchestration over a directory tree of inputs.

Every stage writes its artifact atomically (temp file + rename) into the
cache directory, keyed by a content hash of its inputs and the config
subset it depends on, so stages are individually re-runnable and a
finished run is reused byte-for-byte unless ``--force``. Per-file stages
fan out over a process pool; reductions happen in sorted file order so
results do not depend on the worker count.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import filters as filt
from .ctc_decode import DecodedHypothesis, Word, beam_decode
from .errors import CorruptCache, MissingUpstream
from .lgts import read_lgts
from .matcher import (EditOp, MatchParams, MatchSpan, match_sequences,
                      pair_recordings)
from .ngram_lm import read_arpa, train, write_arpa
from .postproc import (FileRecord, RefStream, SpanAlignment, SpeechRef,
                       align_spans, assemble)
from .textnorm import NormConfig, normalize
from .vad import filter_segments, read_segments_json, read_wav_mono

CACHE_DIR_ENV = "LONGALIGN_CACHE_DIR"

STAGE_ORDER = ["decode", "pair", "match", "align", "assemble", "filter", "stats"]


@dataclass
class PipelineConfig:
    logits_dir: Path
    corpus_file: Path
    norm_config: Path
    output_dir: Path
    cache_dir: Path
    segments_dir: Path | None = None
    audio_dir: Path | None = None

    alpha: float = 0.5
    beta: float = 1.5
    beam_width: int = 100
    token_min_logp: float = -9.0
    lm_order: int = 3
    lm_discount: object = "estimate"

    matcher: MatchParams = field(default_factory=MatchParams)
    pair_ngram: int = 3
    pair_floor: float = 0.1

    speech_cer: float = filt.SPEECH_MAX_CER
    sentence_cer: float = filt.SENTENCE_MAX_CER
    ratio: float = filt.MAX_SECONDS_PER_CHAR
    chunk_min_s: float = filt.CHUNK_MIN_S
    chunk_max_s: float = filt.CHUNK_MAX_S
    vad_threshold_db: float = -45.0
    audio_suffix: str = ".wav"

    workers: int = 1

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "PipelineConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        paths = raw.get("paths", {})
        base = Path(path).parent

        def p(key, default=None):
            v = paths.get(key, default)
            return (base / v).resolve() if v is not None else None

        cfg = cls(
            logits_dir=p("logits_dir"),
            corpus_file=p("corpus"),
            norm_config=p("norm_config"),
            output_dir=p("output_dir", "out"),
            cache_dir=p("cache_dir", "cache"),
            segments_dir=p("segments_dir"),
            audio_dir=p("audio_dir"),
        )
        dec = raw.get("decoder", {})
        cfg.alpha = dec.get("alpha", cfg.alpha)
        cfg.beta = dec.get("beta", cfg.beta)
        cfg.beam_width = dec.get("beam_width", cfg.beam_width)
        cfg.token_min_logp = dec.get("token_min_logp", cfg.token_min_logp)
        lm = raw.get("lm", {})
        cfg.lm_order = lm.get("order", cfg.lm_order)
        cfg.lm_discount = lm.get("discount", cfg.lm_discount)
        mat = raw.get("matcher", {})
        cfg.matcher = MatchParams(**{**asdict(MatchParams()), **mat})
        pairing = raw.get("pairing", {})
        cfg.pair_ngram = pairing.get("ngram", cfg.pair_ngram)
        cfg.pair_floor = pairing.get("floor", cfg.pair_floor)
        f = raw.get("filters", {})
        cfg.speech_cer = f.get("speech_cer", cfg.speech_cer)
        cfg.sentence_cer = f.get("sentence_cer", cfg.sentence_cer)
        cfg.ratio = f.get("ratio", cfg.ratio)
        cfg.chunk_min_s = f.get("chunk_min_s", cfg.chunk_min_s)
        cfg.chunk_max_s = f.get("chunk_max_s", cfg.chunk_max_s)
        cfg.vad_threshold_db = raw.get("vad", {}).get("threshold_db", cfg.vad_threshold_db)
        cfg.audio_suffix = raw.get("audio_suffix", cfg.audio_suffix)
        cfg.workers = raw.get("workers", cfg.workers)
        for key, value in overrides.items():
            if value is not None:
                setattr(cfg, key, value)
        env_cache = os.environ.get(CACHE_DIR_ENV)
        if env_cache:
            cfg.cache_dir = Path(env_cache).resolve()
        if cfg.workers < 1:
            raise ValueError("workers must be >= 1")
        for name in ("logits_dir", "corpus_file", "norm_config"):
            value = getattr(cfg, name)
            if value is None or not Path(value).exists():
                raise FileNotFoundError(f"config path {name} missing: {value}")
        return cfg

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, Path):
                d[k] = str(v)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        d["matcher"] = MatchParams(**d["matcher"])
        for k in ("logits_dir", "corpus_file", "norm_config", "output_dir",
                  "cache_dir", "segments_dir", "audio_dir"):
            if d.get(k) is not None:
                d[k] = Path(d[k])
        return cls(**d)


# ---------------------------------------------------------------------------
# Artifact store: atomic writes, checksum sidecars
# ---------------------------------------------------------------------------

def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def write_artifact(path: Path, payload: dict | str) -> None:
    if isinstance(payload, str):
        data = payload.encode("utf-8")
    else:
        data = (json.dumps(payload, sort_keys=True, ensure_ascii=False,
                           separators=(",", ":")) + "\n").encode("utf-8")
    _atomic_write(path, data)
    digest = hashlib.sha256(data).hexdigest()
    _atomic_write(path.with_suffix(path.suffix + ".sha256"), digest.encode("ascii"))


def read_artifact(path: Path, parse_json: bool = True):
    """Checksum-verified read; raises CorruptCache on mismatch."""
    if not path.exists():
        return None
    sidecar = path.with_suffix(path.suffix + ".sha256")
    if not sidecar.exists():
        return None
    data = path.read_bytes()
    if hashlib.sha256(data).hexdigest() != sidecar.read_text("ascii").strip():
        raise CorruptCache(f"checksum mismatch for {path}")
    return json.loads(data) if parse_json else data.decode("utf-8")


def _cached(path: Path, force: bool, parse_json: bool = True):
    """Cached artifact or None; corrupt entries are dropped for recompute."""
    if force:
        return None
    try:
        return read_artifact(path, parse_json=parse_json)
    except CorruptCache:
        return None


def _hash_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _key(*parts: str) -> str:
    return hashlib.sha256("\x1f".join(parts).encode("utf-8")).hexdigest()[:12]


# ---------------------------------------------------------------------------
# Shared input loading
# ---------------------------------------------------------------------------

def list_audio_ids(config: PipelineConfig) -> list[str]:
    return sorted(p.stem for p in Path(config.logits_dir).glob("*.lgts"))


def load_corpus(config: PipelineConfig) -> list[dict]:
    lines = []
    with open(config.corpus_file, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                lines.append(json.loads(line))
    return lines


def _norm_config(config: PipelineConfig) -> NormConfig:
    return NormConfig.from_json(config.norm_config)


def _sections(corpus: list[dict], nc: NormConfig) -> dict[str, list[str]]:
    """Section id -> normalized token sequence, in corpus order."""
    out: dict[str, list[str]] = {}
    for speech in corpus:
        toks = normalize(speech["text"], nc).norm.split()
        out.setdefault(speech["section_id"], []).extend(toks)
    return out


def _ref_stream_for(corpus: list[dict], section_ids: list[str], nc: NormConfig) -> RefStream:
    wanted = set(section_ids)
    speeches = [
        SpeechRef(
            speech_id=s["speech_id"],
            text=s["text"],
            norm=normalize(s["text"], nc),
            sentences=[tuple(b) for b in s.get("sentences") or []] or None,
            speaker=s.get("speaker", {}),
        )
        for s in corpus
        if s["section_id"] in wanted
    ]
    return RefStream.build(speeches)


# ---------------------------------------------------------------------------
# Stage: language model (implicit upstream of decode)
# ---------------------------------------------------------------------------

def lm_artifact_path(config: PipelineConfig) -> Path:
    key = _key(
        "lm", _hash_file(config.corpus_file), _hash_file(config.norm_config),
        str(config.lm_order), str(config.lm_discount),
    )
    return config.cache_dir / f"lm.{key}.arpa"


def ensure_lm(config: PipelineConfig, force: bool = False) -> Path:
    path = lm_artifact_path(config)
    if _cached(path, force, parse_json=False) is None:
        nc = _norm_config(config)
        sentences = []
        for speech in load_corpus(config):
            for cs, ce in filt.split_sentences(speech["text"], speech.get("sentences")):
                sent_norm = normalize(speech["text"][cs:ce], nc).norm
                if sent_norm:
                    sentences.append(sent_norm)
        model = train(sentences, order=config.lm_order, discount=config.lm_discount)
        write_artifact(path, write_arpa(model))
    return path


# ---------------------------------------------------------------------------
# Stage: decode
# ---------------------------------------------------------------------------

def _decode_key(config: PipelineConfig, audio_id: str, lm_path: Path) -> str:
    seg = Path(config.segments_dir) / f"{audio_id}.json" if config.segments_dir else None
    wav = Path(config.audio_dir) / f"{audio_id}{config.audio_suffix}" if config.audio_dir else None
    return _key(
        "decode",
        _hash_file(config.logits_dir / f"{audio_id}.lgts"),
        _hash_file(seg) if seg and seg.exists() else "-",
        _hash_file(wav) if wav and wav.exists() else "-",
        _hash_file(lm_path),
        json.dumps([config.alpha, config.beta, config.beam_width,
                    config.token_min_logp, config.vad_threshold_db]),
    )


def decode_artifact_path(config: PipelineConfig, audio_id: str, lm_path: Path) -> Path:
    return config.cache_dir / "decode" / f"{audio_id}.{_decode_key(config, audio_id, lm_path)}.json"


def _decode_one(config_dict: dict, audio_id: str, lm_path_s: str, force: bool) -> str:
    config = PipelineConfig.from_dict(config_dict)
    lm_path = Path(lm_path_s)
    path = decode_artifact_path(config, audio_id, lm_path)
    if _cached(path, force) is not None:
        return str(path)
    logits = read_lgts(config.logits_dir / f"{audio_id}.lgts")
    segments = None
    if config.segments_dir:
        seg_path = Path(config.segments_dir) / f"{audio_id}.json"
        if seg_path.exists():
            segs = read_segments_json(seg_path)
            if config.audio_dir:
                wav_path = Path(config.audio_dir) / f"{audio_id}{config.audio_suffix}"
                if wav_path.exists():
                    audio, rate = read_wav_mono(wav_path)
                    segs = filter_segments(segs, audio, rate, config.vad_threshold_db)
            segments = [(s.start_ms, s.end_ms) for s in segs]
    lm = read_arpa(read_artifact(lm_path, parse_json=False))
    hyp = beam_decode(
        logits, lm=lm, alpha=config.alpha, beta=config.beta,
        beam_width=config.beam_width, segments=segments,
        token_min_logp=config.token_min_logp,
    )
    write_artifact(path, {
        "audio_id": audio_id,
        "text": hyp.text,
        "words": [{"w": w.word, "s": w.start_ms, "e": w.end_ms} for w in hyp.words],
        "score": hyp.score,
        "gated_segments": len(segments) if segments is not None else None,
    })
    return str(path)


def _load_hypothesis(payload: dict) -> DecodedHypothesis:
    words = [Word(w["w"], w["s"], w["e"]) for w in payload["words"]]
    return DecodedHypothesis(payload["text"], words, payload["score"])


# ---------------------------------------------------------------------------
# Stage: pair
# ---------------------------------------------------------------------------

def pair_artifact_path(config: PipelineConfig, decode_paths: dict[str, Path]) -> Path:
    key = _key(
        "pair",
        *[f"{a}:{_hash_file(p)}" for a, p in sorted(decode_paths.items())],
        _hash_file(config.corpus_file), _hash_file(config.norm_config),
        str(config.pair_ngram), str(config.pair_floor),
    )
    return config.cache_dir / f"pair.{key}.json"


def _run_pair(config: PipelineConfig, decode_paths: dict[str, Path], force: bool) -> Path:
    path = pair_artifact_path(config, decode_paths)
    if _cached(path, force) is not None:
        return path
    nc = _norm_config(config)
    corpus = load_corpus(config)
    sections = _sections(corpus, nc)
    asr_texts = {}
    for audio_id, p in decode_paths.items():
        payload = read_artifact(p)
        if payload is None:
            raise MissingUpstream(f"decode artifact missing for {audio_id}")
        asr_texts[audio_id] = payload["text"].split()
    pairs = pair_recordings(asr_texts, sections, config.pair_ngram, config.pair_floor)
    write_artifact(path, {"pairs": [[a, s, sc] for a, s, sc in pairs]})
    return path


# ---------------------------------------------------------------------------
# Stage: match / align / assemble (per file)
# ---------------------------------------------------------------------------

def _span_to_json(span: MatchSpan) -> dict:
    return {
        "asr": list(span.asr_range),
        "ref": list(span.ref_range),
        "edit_distance": span.edit_distance,
        "phase": span.phase,
        "ops": [[op.op, op.a_index, op.b_index] for op in span.ops],
    }


def _span_from_json(d: dict) -> MatchSpan:
    return MatchSpan(
        tuple(d["asr"]), tuple(d["ref"]), d["edit_distance"], d["phase"],
        tuple(EditOp(o[0], o[1], o[2]) for o in d["ops"]),
    )


def match_artifact_path(config: PipelineConfig, audio_id: str,
                        decode_path: Path, section_ids: list[str]) -> Path:
    key = _key(
        "match", _hash_file(decode_path), _hash_file(config.corpus_file),
        _hash_file(config.norm_config), json.dumps(section_ids),
        json.dumps(asdict(config.matcher)),
    )
    return config.cache_dir / "match" / f"{audio_id}.{key}.json"


def _match_one(config_dict: dict, audio_id: str, decode_path_s: str,
               section_ids: list[str], force: bool) -> str:
    config = PipelineConfig.from_dict(config_dict)
    decode_path = Path(decode_path_s)
    path = match_artifact_path(config, audio_id, decode_path, section_ids)
    if _cached(path, force) is None:
        payload = read_artifact(decode_path)
        if payload is None:
            raise MissingUpstream(f"decode artifact missing for {audio_id}")
        nc = _norm_config(config)
        corpus = load_corpus(config)
        ref = _ref_stream_for(corpus, section_ids, nc)
        asr_tokens = payload["text"].split()
        spans, coverage = match_sequences(asr_tokens, ref.tokens, config.matcher)
        write_artifact(path, {
            "audio_id": audio_id,
            "sections": section_ids,
            "spans": [_span_to_json(s) for s in spans],
            "coverage": coverage.to_json(),
        })
        report_dir = Path(config.output_dir) / "match_reports"
        write_artifact(report_dir / f"{audio_id}.json", {
            "audio_id": audio_id,
            "sections": section_ids,
            "spans": [_span_to_json(s) for s in spans],
            "coverage": coverage.to_json(),
        })
    return str(path)


def align_artifact_path(config: PipelineConfig, audio_id: str,
                        decode_path: Path, match_path: Path) -> Path:
    key = _key("align", _hash_file(decode_path), _hash_file(match_path),
               _hash_file(config.logits_dir / f"{audio_id}.lgts"))
    return config.cache_dir / "align" / f"{audio_id}.{key}.json"


def _align_one(config_dict: dict, audio_id: str, decode_path_s: str,
               match_path_s: str, force: bool) -> str:
    config = PipelineConfig.from_dict(config_dict)
    decode_path, match_path = Path(decode_path_s), Path(match_path_s)
    path = align_artifact_path(config, audio_id, decode_path, match_path)
    if _cached(path, force) is None:
        dec = read_artifact(decode_path)
        mat = read_artifact(match_path)
        if dec is None or mat is None:
            raise MissingUpstream(f"decode/match artifacts missing for {audio_id}")
        nc = _norm_config(config)
        corpus = load_corpus(config)
        ref = _ref_stream_for(corpus, mat["sections"], nc)
        logits = read_lgts(config.logits_dir / f"{audio_id}.lgts")
        hyp = _load_hypothesis(dec)
        spans = [_span_from_json(d) for d in mat["spans"]]
        alignments = align_spans(logits, hyp, spans, ref)
        write_artifact(path, {
            "audio_id": audio_id,
            "alignments": [a.to_json() for a in alignments],
        })
    return str(path)


def assemble_artifact_path(config: PipelineConfig, audio_id: str, decode_path: Path,
                           match_path: Path, align_path: Path) -> Path:
    key = _key("assemble", _hash_file(decode_path), _hash_file(match_path),
               _hash_file(align_path))
    return config.cache_dir / "assemble" / f"{audio_id}.{key}.json"


def _assemble_one(config_dict: dict, audio_id: str, decode_path_s: str,
                  match_path_s: str, align_path_s: str, force: bool) -> str:
    config = PipelineConfig.from_dict(config_dict)
    decode_path, match_path, align_path = map(Path, (decode_path_s, match_path_s, align_path_s))
    path = assemble_artifact_path(config, audio_id, decode_path, match_path, align_path)
    if _cached(path, force) is None:
        dec = read_artifact(decode_path)
        mat = read_artifact(match_path)
        ali = read_artifact(align_path)
        if dec is None or mat is None or ali is None:
            raise MissingUpstream(f"artifacts missing for {audio_id}")
        nc = _norm_config(config)
        corpus = load_corpus(config)
        ref = _ref_stream_for(corpus, mat["sections"], nc)
        logits = read_lgts(config.logits_dir / f"{audio_id}.lgts")
        hyp = _load_hypothesis(dec)
        spans = [_span_from_json(d) for d in mat["spans"]]
        alignments = [
            SpanAlignment(a["span_index"], [tuple(t) for t in a["word_times"]])
            for a in ali["alignments"]
        ]
        record = assemble(audio_id, hyp, spans, alignments, ref, logits.end_offset_ms)
        payload = record.to_json()
        payload["asr_tokens"] = [w.word for w in hyp.words]
        write_artifact(path, payload)
    return str(path)


# ---------------------------------------------------------------------------
# Stage: filter / stats
# ---------------------------------------------------------------------------

def _run_filter(config: PipelineConfig, assemble_paths: dict[str, Path], force: bool) -> dict:
    out_dir = Path(config.output_dir)
    dataset_path = out_dir / "dataset.jsonl"
    chunks_path = out_dir / "chunks.jsonl"
    summary_path = out_dir / "filter_summary.json"
    nc = _norm_config(config)
    corpus = load_corpus(config)
    meta = {s["speech_id"]: s for s in corpus}

    records: list[FileRecord] = []
    asr_tokens_by_audio: dict[str, list[str]] = {}
    for audio_id in sorted(assemble_paths):
        payload = read_artifact(assemble_paths[audio_id])
        if payload is None:
            raise MissingUpstream(f"assemble artifact missing for {audio_id}")
        records.append(FileRecord.from_json(payload))
        asr_tokens_by_audio[audio_id] = payload["asr_tokens"]

    retained: list[filt.SentenceRecord] = []
    sentence_rejects = {"cer": 0, "ratio": 0}
    for record, speech in filt.filter_speeches(records, config.speech_cer):
        info = meta.get(speech.speech_id, {})
        sentences = filt.build_sentence_records(
            record, speech, asr_tokens_by_audio[record.audio_id], nc,
            sentences=[tuple(b) for b in info.get("sentences") or []] or None,
            speaker=info.get("speaker", {}),
            audio_suffix=config.audio_suffix,
        )
        by_cer = filt.filter_sentence_cer(sentences, config.sentence_cer)
        sentence_rejects["cer"] += len(sentences) - len(by_cer)
        by_ratio = filt.filter_sentence_ratio(by_cer, config.ratio)
        sentence_rejects["ratio"] += len(by_cer) - len(by_ratio)
        retained.extend(by_ratio)

    dataset_lines = [json.dumps(s.to_json(), sort_keys=True, ensure_ascii=False,
                                separators=(",", ":")) for s in retained]
    write_artifact(dataset_path, "\n".join(dataset_lines) + ("\n" if dataset_lines else ""))
    chunk_lines = []
    for s in retained:
        for chunk in filt.resegment(s, config.chunk_min_s, config.chunk_max_s):
            chunk_lines.append(json.dumps(chunk, sort_keys=True, ensure_ascii=False,
                                          separators=(",", ":")))
    write_artifact(chunks_path, "\n".join(chunk_lines) + ("\n" if chunk_lines else ""))
    summary = {
        "files": len(records),
        "retained_sentences": len(retained),
        "sentence_rejects": sentence_rejects,
        "yield_rate": filt.yield_rate(records, retained),
    }
    write_artifact(summary_path, summary)
    return summary


def _run_stats(config: PipelineConfig) -> dict:
    out_dir = Path(config.output_dir)
    dataset_path = out_dir / "dataset.jsonl"
    summary_path = out_dir / "filter_summary.json"
    data = read_artifact(dataset_path, parse_json=False)
    summary = read_artifact(summary_path)
    if data is None or summary is None:
        raise MissingUpstream("filter outputs missing; run the filter stage first")
    records = [filt.SentenceRecord.from_json(json.loads(line))
               for line in data.splitlines() if line.strip()]
    stats = filt.dataset_stats(records, config.audio_dir)
    stats["yield_rate"] = summary["yield_rate"]
    write_artifact(out_dir / "stats.json", stats)
    return stats


# ---------------------------------------------------------------------------
# Stage runner
# ---------------------------------------------------------------------------

def _fan_out(config: PipelineConfig, tasks: list[tuple], fn) -> list[str]:
    if config.workers <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(fn, *zip(*tasks)))


def run_stage(stage: str, config: PipelineConfig, force: bool = False) -> dict:
    """Run one stage (or the whole pipeline); returns a small result dict."""
    if stage == "pipeline":
        result = {}
        for s in STAGE_ORDER:
            result = run_stage(s, config, force=force)
        return result

    audio_ids = list_audio_ids(config)
    if not audio_ids:
        raise MissingUpstream(f"no .lgts files under {config.logits_dir}")
    cd = config.to_dict()

    if stage == "decode":
        lm_path = ensure_lm(config, force=force)
        paths = _fan_out(config, [(cd, a, str(lm_path), force) for a in audio_ids],
                         _decode_one)
        return {"stage": "decode", "artifacts": paths}

    if stage == "stats":
        return {"stage": "stats", **_run_stats(config)}

    lm_path = ensure_lm(config, force=False)
    decode_paths = {a: decode_artifact_path(config, a, lm_path) for a in audio_ids}
    missing = [a for a, p in decode_paths.items() if not p.exists()]
    if missing:
        raise MissingUpstream(f"decode artifacts missing for {missing}; run decode")

    if stage == "pair":
        path = _run_pair(config, decode_paths, force)
        return {"stage": "pair", "artifacts": [str(path)]}

    pair_path = pair_artifact_path(config, decode_paths)
    pair_payload = _cached(pair_path, False)
    if pair_payload is None:
        raise MissingUpstream("pair artifact missing; run pair")
    sections_by_audio: dict[str, list[str]] = {a: [] for a in audio_ids}
    corpus_order = {s: i for i, s in enumerate(_section_order(config))}
    for a, s, _ in pair_payload["pairs"]:
        if a in sections_by_audio and s not in sections_by_audio[a]:
            sections_by_audio[a].append(s)
    for a in sections_by_audio:
        sections_by_audio[a].sort(key=lambda s: corpus_order.get(s, 1 << 30))

    match_tasks = [(cd, a, str(decode_paths[a]), sections_by_audio[a], force)
                   for a in audio_ids]
    if stage == "match":
        return {"stage": "match", "artifacts": _fan_out(config, match_tasks, _match_one)}

    match_paths = {
        a: match_artifact_path(config, a, decode_paths[a], sections_by_audio[a])
        for a in audio_ids
    }
    _require_all(match_paths, "match")

    align_tasks = [(cd, a, str(decode_paths[a]), str(match_paths[a]), force)
                   for a in audio_ids]
    if stage == "align":
        return {"stage": "align", "artifacts": _fan_out(config, align_tasks, _align_one)}

    align_paths = {
        a: align_artifact_path(config, a, decode_paths[a], match_paths[a])
        for a in audio_ids
    }
    _require_all(align_paths, "align")

    assemble_tasks = [(cd, a, str(decode_paths[a]), str(match_paths[a]),
                       str(align_paths[a]), force) for a in audio_ids]
    if stage == "assemble":
        return {"stage": "assemble",
                "artifacts": _fan_out(config, assemble_tasks, _assemble_one)}

    assemble_paths = {
        a: assemble_artifact_path(config, a, decode_paths[a], match_paths[a],
                                  align_paths[a])
        for a in audio_ids
    }
    _require_all(assemble_paths, "assemble")

    if stage == "filter":
        return {"stage": "filter", **_run_filter(config, assemble_paths, force)}

    raise ValueError(f"unknown stage {stage!r}")


def _require_all(paths: dict[str, Path], stage_name: str) -> None:
    missing = [a for a, p in paths.items() if not p.exists()]
    if missing:
        raise MissingUpstream(
            f"{stage_name} artifacts missing for {missing}; run {stage_name}"
        )


def _section_order(config: PipelineConfig) -> list[str]:
    seen: list[str] = []
    for speech in load_corpus(config):
        if speech["section_id"] not in seen:
            seen.append(speech["section_id"])
    return seen
