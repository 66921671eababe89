"""Command line: serve the embedding API or export a store file.

Exit codes follow the engine's convention: 0 success, 1 bad input or usage,
2 model load or I/O failure.
"""

from __future__ import annotations

import argparse
import sys

from cosetx import StoreIOError

from .backend import MaskedEncoder, ModelLoadError
from .export import ExportError, export_store, load_queries


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embedsvc",
        description="Serve mask-position embeddings over HTTP, or batch-export them.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--model", required=True, help="model id or local path")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8300)
    serve.add_argument("--device", default="cpu")
    serve.add_argument(
        "--layer",
        type=int,
        default=-1,
        help="hidden layer to read (0 = embedding output, -1 = final layer)",
    )

    export = sub.add_parser("export", help="embed a query file into a store file")
    export.add_argument("--model", required=True, help="model id or local path")
    export.add_argument("--in", dest="src", required=True, help="query file (JSON array)")
    export.add_argument("--out", required=True, help="store file to write")
    export.add_argument("--batch-size", type=int, default=16)
    export.add_argument("--device", default="cpu")
    export.add_argument("--layer", type=int, default=-1)
    return parser


def cmd_serve(args: argparse.Namespace) -> None:
    import uvicorn

    from .app import create_app

    app = create_app(
        lambda: MaskedEncoder(args.model, device=args.device, layer=args.layer)
    )
    uvicorn.run(app, host=args.host, port=args.port)


def cmd_export(args: argparse.Namespace) -> None:
    queries = load_queries(args.src)
    encoder = MaskedEncoder(args.model, device=args.device, layer=args.layer)
    written = export_store(encoder, queries, args.out, batch_size=args.batch_size)
    print(f"wrote {written} records to {args.out}")


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "serve":
            cmd_serve(args)
        else:
            cmd_export(args)
    except (ExportError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ModelLoadError, StoreIOError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
