#!/usr/bin/env python3
"""Single entry point: psw.py {analyze,simulate,diagnose} [options].

Each subcommand forwards its remaining arguments to the script of the same name.
"""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

# Ensure project root is on sys.path
PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from scripts import analyze, diagnose, simulate  # noqa: E402
from src.cli import UsageError, report_error  # noqa: E402

COMMANDS: Dict[str, Callable[[Optional[Sequence[str]]], int]] = {
    "analyze": analyze.main,
    "simulate": simulate.main,
    "diagnose": diagnose.main,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args: List[str] = list(sys.argv[1:] if argv is None else argv)
    if not args or args[0] in ("-h", "--help"):
        print(__doc__.strip())
        return 0 if args else report_error(UsageError("missing subcommand"))
    command = COMMANDS.get(args[0])
    if command is None:
        return report_error(
            UsageError(f"unknown subcommand '{args[0]}' (expected one of {', '.join(COMMANDS)})")
        )
    return command(args[1:])


if __name__ == "__main__":
    sys.exit(main())
