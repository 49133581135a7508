"""Command line entry point: load a checkpoint and serve it."""

from __future__ import annotations

import argparse
import logging

import uvicorn

from .app import build_app
from .config import ServerConfig
from .engine import LogitEngine


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(
        prog="logitserve",
        description="Serve top-k next-token distributions of a causal LM over HTTP.",
    )
    parser.add_argument("--model", required=True, help="checkpoint id or local path")
    parser.add_argument("--device", default="cpu", help="torch device (default: cpu)")
    parser.add_argument(
        "--max-context",
        type=int,
        default=1024,
        help="reject requests longer than this many tokens (default: 1024)",
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8901)
    parser.add_argument("--log-level", default="info")
    args = parser.parse_args(argv)

    logging.basicConfig(level=args.log_level.upper())
    config = ServerConfig(
        model=args.model,
        device=args.device,
        max_context=args.max_context,
        port=args.port,
        host=args.host,
    )
    engine = LogitEngine(config)
    logging.getLogger(__name__).info(
        "serving %s (%d tokens) on %s:%d", config.model, engine.vocab_size,
        config.host, config.port,
    )
    uvicorn.run(build_app(engine), host=config.host, port=config.port,
                log_level=args.log_level)


if __name__ == "__main__":
    main()
