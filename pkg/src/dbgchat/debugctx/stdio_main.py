"""Run a simulated adapter over stdin/stdout.

Lets the stdio attachment path (`make_stdio_adapter`) talk to a real
subprocess speaking the framed protocol:

    python -m dbgchat.debugctx.stdio_main --scenario task1_serialization
"""

from __future__ import annotations

import argparse
import sys

from ..scenarios import load_scenario
from .adapter import SimulatedAdapterServer


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--scenario", required=True)
    args = parser.parse_args(argv)

    server = SimulatedAdapterServer(load_scenario(args.scenario))
    stdin = sys.stdin.buffer
    stdout = sys.stdout.buffer
    while True:
        chunk = stdin.read1(65536) if hasattr(stdin, "read1") else stdin.read(65536)
        if not chunk:
            return 0
        out = server.feed(chunk)
        if out:
            stdout.write(out)
            stdout.flush()


if __name__ == "__main__":
    sys.exit(main())
