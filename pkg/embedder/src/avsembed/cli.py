"""The `embed` command line tool.

`embed videos --in DIR --out STORE [--interval 0.5] [--max-frames N]
[--model ID] [--format text|embs]` embeds every video file or frame-image
subdirectory of DIR. `embed queries --in TSV --out STORE ...` embeds a
`query_id<TAB>text` file as single-frame records. The default output is
the text interchange format; `--format embs` writes the binary store
directly.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import EmbedderError, ModelError
from .formats import write_embs, write_interchange
from .models import DEFAULT_MODEL, get_model
from .pipeline import embed_queries, embed_videos, read_query_tsv
from .sampling import SamplingSpec

log = logging.getLogger("avsembed")


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", default=DEFAULT_MODEL,
                   help=f"model id (default {DEFAULT_MODEL}; 'toy' runs offline)")
    p.add_argument("--format", choices=("text", "embs"), default="text",
                   help="output container (default: text interchange)")
    p.add_argument("--device", default="cpu")
    p.add_argument("--batch-size", type=int, default=16)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="embed", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("videos", help="embed videos or frame-image directories")
    _common_flags(p)
    p.add_argument("--interval", type=float, default=0.5,
                   help="frame sampling interval in seconds")
    p.add_argument("--max-frames", type=int, default=None)

    p = sub.add_parser("queries", help="embed a query_id<TAB>text file")
    _common_flags(p)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", force=True)
    args = build_parser().parse_args(argv)
    try:
        model = get_model(args.model, device=args.device, batch_size=args.batch_size)
    except ModelError as exc:
        print(f"embed: fatal: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "videos":
            spec = SamplingSpec(
                interval_seconds=args.interval, max_frames=args.max_frames
            )
            records = embed_videos(args.in_path, spec, model)
        else:
            with open(args.in_path, "r", encoding="utf-8") as fh:
                records = embed_queries(read_query_tsv(fh), model)
        if not records:
            print("embed: no inputs produced embeddings", file=sys.stderr)
            return 2
        if args.format == "embs":
            count = write_embs(records, args.out, normalized=True)
        else:
            count = write_interchange(records, args.out)
        log.info("wrote %d records to %s", count, args.out)
        return 0
    except (EmbedderError, OSError, ValueError) as exc:
        print(f"embed: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
