"""Extractor CLI: batch extraction and the embedding sidecar."""

from __future__ import annotations

import argparse
import sys

from .encoder import DEFAULT_MODEL, ClipEncoder
from .extract import ExtractionError, extract
from .sidecar import serve


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="georag-extract", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_extract = sub.add_parser("extract", help="embed a manifest of images into a binary file")
    p_extract.add_argument("--manifest", required=True, help="id,image[,lat,lon] lines")
    p_extract.add_argument("--output", required=True)
    p_extract.add_argument("--model", default=DEFAULT_MODEL)
    p_extract.add_argument("--device", default="cpu")
    p_extract.add_argument("--batch-size", type=int, default=16)

    p_serve = sub.add_parser("serve", help="run the /v1/embed sidecar")
    p_serve.add_argument("--model", default=DEFAULT_MODEL)
    p_serve.add_argument("--device", default="cpu")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8790)

    args = parser.parse_args(argv)
    encoder = ClipEncoder(model_name=args.model, device=args.device)
    if args.command == "serve":
        serve(encoder, host=args.host, port=args.port)
        return 0
    try:
        summary = extract(args.manifest, encoder, args.output, batch_size=args.batch_size)
    except ExtractionError as exc:
        print(f"georag-extract: error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {summary.count} x {summary.dim} embeddings to {summary.path}")
    for rid, reason in summary.failures:
        print(f"failed id {rid}: {reason}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
