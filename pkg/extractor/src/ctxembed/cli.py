"""CLI: ``ctxembed extract --annotations PATH --model NAME --window 50 --out PATH``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .extract import ExtractionError, ExtractionJob, extract, read_annotation_tokens


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctxembed",
        description="Per-token contextual embeddings for annotated discourse",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("extract", help="write the per-token embedding file")
    p.add_argument("--annotations", required=True, help="annotation TSV path")
    p.add_argument("--model", required=True, help="model name or local path")
    p.add_argument("--window", type=int, default=50, help="words per window")
    p.add_argument("--out", required=True, help="output per-token vector file")
    p.add_argument(
        "--layer",
        type=int,
        default=None,
        help="hidden-state index to pool (default: final layer)",
    )
    p.add_argument(
        "--debug-pieces",
        dest="debug_pieces",
        default=None,
        help="also dump per-piece vectors to this path",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.annotations).read_text(encoding="utf-8")
        job = ExtractionJob(
            tokens=read_annotation_tokens(text),
            model=args.model,
            out_path=args.out,
            window=args.window,
            layer=args.layer,
            debug_pieces_path=args.debug_pieces,
        )
        result = extract(job)
    except (ExtractionError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(
        f"wrote {args.out}: {result.token_count} tokens, "
        f"{result.window_count} windows, dim {result.dim}"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
