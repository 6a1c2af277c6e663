"""Command-line driver: ``msef generate|curate|train|evaluate|audit --config FILE``.

Exit status is 0 on success, 1 for user errors (bad config, missing or invalid
inputs) and 2 for anything unexpected.
"""

from __future__ import annotations

import argparse
import sys
import traceback
from typing import Sequence

import jsonschema

from ..errors import MsefError
from .commands import COMMANDS, cmd_audit, cmd_curate, cmd_evaluate, cmd_generate, cmd_train
from .config import RunConfig, load_config, parse_config

EXIT_OK, EXIT_USER, EXIT_INTERNAL = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="msef", description="Streetscape evaluation pipeline")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML or JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override this stage's output directory")
        p.add_argument("--create", action="store_true", help="create the output directory if missing")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    fn, stage = COMMANDS[args.command]
    try:
        cfg = load_config(args.config).with_seed(args.seed).with_path(stage, args.out)
        fn(cfg, create=args.create)
    except (MsefError, OSError, jsonschema.ValidationError) as exc:
        print(f"msef {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USER
    except Exception:  # noqa: BLE001
        traceback.print_exc()
        return EXIT_INTERNAL
    return EXIT_OK


__all__ = [
    "RunConfig", "build_parser", "cmd_audit", "cmd_curate", "cmd_evaluate", "cmd_generate", "cmd_train",
    "load_config", "main", "parse_config",
]
