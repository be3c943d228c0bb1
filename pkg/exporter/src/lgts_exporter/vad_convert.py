"""Convert external VAD output (RTTM or start/end CSV) to segment JSON.

The alignment engine consumes speech segments as
``[{"start_ms": ..., "end_ms": ...}]``; neural VAD tools typically emit
RTTM, so this bridges the two without running any VAD here.
"""

from __future__ import annotations

import json
from pathlib import Path


def parse_rttm(text: str) -> dict[str, list[tuple[float, float]]]:
    """RTTM SPEAKER lines -> per-recording (start_ms, end_ms) lists."""
    out: dict[str, list[tuple[float, float]]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith(";"):
            continue
        fields = line.split()
        if fields[0] != "SPEAKER":
            continue
        if len(fields) < 5:
            raise ValueError(f"RTTM line {lineno}: expected at least 5 fields")
        rec, start_s, dur_s = fields[1], float(fields[3]), float(fields[4])
        out.setdefault(rec, []).append((start_s * 1000.0, (start_s + dur_s) * 1000.0))
    for segments in out.values():
        segments.sort()
    return out


def parse_csv(text: str) -> list[tuple[float, float]]:
    """Lines of ``start_seconds,end_seconds`` -> (start_ms, end_ms)."""
    segments = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"CSV line {lineno}: expected start,end")
        start_s, end_s = float(parts[0]), float(parts[1])
        segments.append((start_s * 1000.0, end_s * 1000.0))
    segments.sort()
    return segments


def write_segments(path: str | Path, segments: list[tuple[float, float]]) -> None:
    payload = [{"start_ms": s, "end_ms": e} for s, e in segments]
    Path(path).write_text(json.dumps(payload, indent=1), encoding="utf-8")


def convert_rttm_file(rttm_path: str | Path, out_dir: str | Path) -> list[Path]:
    """One segments JSON per recording named in the RTTM file."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for rec, segments in sorted(parse_rttm(Path(rttm_path).read_text()).items()):
        target = out_dir / f"{rec}.json"
        write_segments(target, segments)
        written.append(target)
    return written
