"""Command line: export LGTS logits, convert VAD output to segment JSON."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .manifest import ExportManifest, export
from .vad_convert import convert_rttm_file, parse_csv, write_segments


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lgts-export",
        description="Export per-frame CTC character log-probabilities to LGTS files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("export", help="run a CTC model (or stub) over audio files")
    ex.add_argument("--model", required=True,
                    help="transformers CTC checkpoint id, or stub:<text>")
    ex.add_argument("--audio", required=True, help="directory of WAV files")
    ex.add_argument("--out", required=True, help="output directory for .lgts files")
    ex.add_argument("--frame-ms", type=float, default=20.0,
                    help="model stride in milliseconds (default 20)")

    vad = sub.add_parser("vad", help="convert external VAD output to segment JSON")
    vad.add_argument("--rttm", help="RTTM file with SPEAKER lines")
    vad.add_argument("--csv", help="CSV file of start_s,end_s lines")
    vad.add_argument("--name", help="recording name for --csv output")
    vad.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "export":
        audio_dir = Path(args.audio)
        files = sorted(audio_dir.glob("*.wav"))
        if not files:
            print(f"no .wav files under {audio_dir}", file=sys.stderr)
            return 1
        manifest = ExportManifest(
            audio_files=files,
            model_id=args.model,
            output_dir=Path(args.out),
            frame_duration_ms=args.frame_ms,
        )
        checksums = export(manifest)
        json.dump(checksums, sys.stdout, indent=1, sort_keys=True)
        sys.stdout.write("\n")
        return 0

    if args.command == "vad":
        if bool(args.rttm) == bool(args.csv):
            print("pass exactly one of --rttm or --csv", file=sys.stderr)
            return 1
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.rttm:
            written = convert_rttm_file(args.rttm, out_dir)
        else:
            if not args.name:
                print("--csv needs --name for the output file", file=sys.stderr)
                return 1
            target = out_dir / f"{args.name}.json"
            write_segments(target, parse_csv(Path(args.csv).read_text()))
            written = [target]
        for path in written:
            print(path)
        return 0
    return 1


if __name__ == "__main__":
    sys.exit(main())
