"""Sidecar entry points: serve the HTTP API or dump an offline cache."""

from __future__ import annotations

import argparse
import sys

from .cachedump import MalformedQueryLine, dump_cache, parse_query_lines
from .model import MaskedLmModel, ServerConfig


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlm-server")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("serve", help="serve /distribution(s) and /health")
    p.add_argument("--model", required=True, help="model name or local path")
    p.add_argument("--backend-id", help="identifier reported to clients "
                                        "(default: the model argument)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8301)
    p.add_argument("--max-batch", type=int, default=32)
    p.add_argument("--device", default="cpu")

    p = commands.add_parser("dump-cache", help="precompute distributions into a "
                                               "cache file")
    p.add_argument("--model", required=True)
    p.add_argument("--backend-id")
    p.add_argument("--input", required=True,
                   help="query file: 'token ids<TAB>mask positions' per line")
    p.add_argument("--output", required=True, help="cache file to write")
    p.add_argument("--max-batch", type=int, default=32)
    p.add_argument("--device", default="cpu")
    return parser


def load_model(args) -> MaskedLmModel:
    config = ServerConfig(model_path=args.model, backend_id=args.backend_id,
                          max_batch_size=args.max_batch, device=args.device,
                          host=getattr(args, "host", "127.0.0.1"),
                          port=getattr(args, "port", 8301))
    return MaskedLmModel(config)


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        from .app import create_app

        model = load_model(args)
        uvicorn.run(create_app(model), host=args.host, port=args.port)
        return 0

    model = load_model(args)
    try:
        with open(args.input, encoding="utf-8") as fh:
            queries = parse_query_lines(fh)
    except MalformedQueryLine as exc:
        print(f"{args.input}: {exc}", file=sys.stderr)
        return 1
    written = dump_cache(model, queries, args.output)
    print(f"wrote {written} records to {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
