"""Command-line entry point: one subcommand per pipeline stage."""

from __future__ import annotations

import argparse
import json
import sys

from .pipeline import STAGE_ORDER, PipelineConfig, run_stage


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="longalign",
        description="Align long audio recordings (cached CTC logits) to long, "
                    "possibly reordered and incomplete reference transcripts.",
    )
    sub = parser.add_subparsers(dest="stage", required=True)
    for stage in STAGE_ORDER + ["pipeline"]:
        sp = sub.add_parser(stage, help=f"run the {stage} stage")
        sp.add_argument("--config", required=True, help="pipeline config JSON")
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--force", action="store_true",
                        help="recompute even when cached artifacts exist")
        sp.add_argument("--alpha", type=float, default=None, help="LM weight")
        sp.add_argument("--beta", type=float, default=None, help="word insertion bonus")
        sp.add_argument("--beam", type=int, default=None, help="beam width")
        sp.add_argument("--window", type=int, default=None, help="matcher window (tokens)")
        sp.add_argument("--stride", type=int, default=None, help="matcher window stride")
        sp.add_argument("--speech-cer", type=float, default=None,
                        help="drop aligned speeches at or above this CER")
        sp.add_argument("--sentence-cer", type=float, default=None,
                        help="drop sentences above this CER")
        sp.add_argument("--ratio", type=float, default=None,
                        help="drop sentences above this seconds-per-character ratio")
    return parser


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig.from_file(
        args.config,
        workers=args.workers,
        alpha=args.alpha,
        beta=args.beta,
        beam_width=args.beam,
        speech_cer=args.speech_cer,
        sentence_cer=args.sentence_cer,
        ratio=args.ratio,
    )
    if args.window is not None:
        config.matcher.window = args.window
    if args.stride is not None:
        config.matcher.stride = args.stride
    return config


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = config_from_args(args)
    result = run_stage(args.stage, config, force=args.force)
    json.dump(result, sys.stdout, indent=1, default=str)
    sys.stdout.write("\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
