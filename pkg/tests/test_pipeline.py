import json

import pytest

from longalign.cli import main as cli_main
from longalign.errors import MissingUpstream
from longalign.pipeline import (PipelineConfig, read_artifact, run_stage,
                                write_artifact)
from longalign.synth import build_synthetic_dataset


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("inputs")
    build_synthetic_dataset(root, n_speeches=12, n_files=2, seed=31)
    return root


def make_config(root, tag, workers=1):
    cfg = {
        "paths": {
            "logits_dir": "logits", "segments_dir": "segments",
            "corpus": "corpus.jsonl", "norm_config": "norm.json",
            "output_dir": f"out_{tag}", "cache_dir": f"cache_{tag}",
        },
        "decoder": {"beam_width": 8, "token_min_logp": -7.0},
        "workers": workers,
    }
    path = root / f"config_{tag}.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


def snapshot(path):
    return {p.relative_to(path): p.read_bytes() for p in sorted(path.rglob("*"))
            if p.is_file()}


def test_pipeline_produces_outputs_and_caches(small_dataset):
    config_path = make_config(small_dataset, "base")
    config = PipelineConfig.from_file(config_path)
    run_stage("pipeline", config)
    out = small_dataset / "out_base"
    assert (out / "dataset.jsonl").exists()
    assert (out / "chunks.jsonl").exists()
    assert (out / "stats.json").exists()
    assert list((out / "match_reports").glob("*.json"))
    first = snapshot(out)

    # artifact mtimes: re-running reuses the cache and rewrites nothing
    cache = small_dataset / "cache_base"
    decode_mtimes = {p: p.stat().st_mtime_ns for p in cache.rglob("decode/*.json")}
    run_stage("pipeline", PipelineConfig.from_file(config_path))
    assert snapshot(out) == first
    for p, mtime in decode_mtimes.items():
        assert p.stat().st_mtime_ns == mtime


def test_deleting_one_decode_artifact_recomputes_only_it(small_dataset):
    config_path = make_config(small_dataset, "partial")
    config = PipelineConfig.from_file(config_path)
    run_stage("pipeline", config)
    cache = small_dataset / "cache_partial"
    decode_artifacts = sorted(cache.glob("decode/*.json"))
    victim = decode_artifacts[0]
    keeper = decode_artifacts[1]
    keeper_mtime = keeper.stat().st_mtime_ns
    victim.unlink()
    run_stage("decode", config)
    assert victim.exists()
    assert keeper.stat().st_mtime_ns == keeper_mtime


def test_corrupt_cache_recomputed(small_dataset):
    config_path = make_config(small_dataset, "corrupt")
    config = PipelineConfig.from_file(config_path)
    run_stage("pipeline", config)
    victim = sorted((small_dataset / "cache_corrupt").glob("decode/*.json"))[0]
    good = victim.read_bytes()
    victim.write_bytes(b'{"truncated": tru')
    run_stage("decode", config)
    assert victim.read_bytes() == good


def test_missing_upstream_raises(small_dataset):
    config_path = make_config(small_dataset, "upstream")
    config = PipelineConfig.from_file(config_path)
    with pytest.raises(MissingUpstream):
        run_stage("match", config)
    with pytest.raises(MissingUpstream):
        run_stage("stats", config)


def test_artifact_checksum_round_trip(tmp_path):
    path = tmp_path / "artifact.json"
    write_artifact(path, {"value": 3})
    assert read_artifact(path) == {"value": 3}
    assert path.with_suffix(".json.sha256").exists()
    assert read_artifact(tmp_path / "absent.json") is None


def test_cache_dir_env_override(small_dataset, monkeypatch):
    override = small_dataset / "env_cache"
    monkeypatch.setenv("LONGALIGN_CACHE_DIR", str(override))
    config = PipelineConfig.from_file(make_config(small_dataset, "envtag"))
    assert config.cache_dir == override


def test_cli_pipeline_and_overrides(small_dataset, capsys):
    config_path = make_config(small_dataset, "cli")
    rc = cli_main(["pipeline", "--config", str(config_path),
                   "--workers", "1", "--beam", "4", "--sentence-cer", "0.2"])
    assert rc == 0
    result = json.loads(capsys.readouterr().out)
    assert result["stage"] == "stats"
    assert (small_dataset / "out_cli" / "dataset.jsonl").exists()


def test_cli_single_stage_force(small_dataset, capsys):
    config_path = make_config(small_dataset, "cli")
    rc = cli_main(["decode", "--config", str(config_path), "--force"])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    assert out["stage"] == "decode"
    assert len(out["artifacts"]) == 2


def test_config_validation(tmp_path):
    bad = tmp_path / "config.json"
    bad.write_text(json.dumps({"paths": {"logits_dir": "nope",
                                         "corpus": "nope.jsonl",
                                         "norm_config": "nope.json"}}))
    with pytest.raises(FileNotFoundError):
        PipelineConfig.from_file(bad)


def test_workers_validation(small_dataset):
    path = make_config(small_dataset, "wv")
    raw = json.loads(path.read_text())
    raw["workers"] = 0
    path.write_text(json.dumps(raw))
    with pytest.raises(ValueError):
        PipelineConfig.from_file(path)
