"""Command-line interface.

`dbgchat --scenario task1` opens an interactive chat; it is a thin HTTP
client: by default it mounts the service in-process (ASGI transport), and
`--url` points it at a remote server instead. `dbgchat serve` runs the HTTP
service; `dbgchat eval` runs the scripted evaluation suite; `dbgchat replay`
verifies a persisted session log.
"""

from __future__ import annotations

import argparse
import sys

import httpx

from .config import EngineConfig
from .errors import DbgchatError, UnknownScenario
from .evalharness import EvalMode, SimulatedUserPolicy, rows_to_csv, rows_to_table, run_suite
from .orchestrator.engine import Orchestrator, verify_replay
from .orchestrator.store import SessionStore
from .scenarios import list_scenarios

COMMANDS = ("chat", "serve", "eval", "replay", "scenarios")


def resolve_scenario_id(name: str) -> str:
    ids = [s.id for s in list_scenarios()]
    if name in ids:
        return name
    matches = [i for i in ids if i.startswith(name)]
    if len(matches) == 1:
        return matches[0]
    raise UnknownScenario(f"{name} (bundled: {', '.join(ids)})")


def _client(args, config: EngineConfig) -> httpx.Client:
    if args.url:
        return httpx.Client(base_url=args.url, timeout=60.0)
    # In-process: mount the service over an ASGI test transport, so the CLI
    # stays a plain HTTP client either way.
    from fastapi.testclient import TestClient

    from .orchestrator.api import create_app

    engine = Orchestrator(config=config, sessions_dir=args.sessions_dir)
    return TestClient(create_app(engine))


def cmd_chat(args) -> int:
    config = EngineConfig.from_env()
    client = _client(args, config)
    body: dict = {"backend": args.backend}
    if args.scenario:
        body["scenario_id"] = resolve_scenario_id(args.scenario)
    if args.force_eager:
        body["mode_override"] = "ForceEager"
    elif args.force_collaborative:
        body["mode_override"] = "ForceCollaborative"
    created = client.post("/sessions", json=body)
    if created.status_code >= 400:
        print(f"error: {created.text}", file=sys.stderr)
        return 1
    session_id = created.json()["session_id"]
    print(f"session {session_id} ({body.get('scenario_id', 'no scenario')})")
    print("type your message; a number picks a follow-up; /quit exits\n")

    followups: list[dict] = []
    while True:
        try:
            raw = input("you> ").strip()
        except EOFError:
            return 0
        if not raw:
            continue
        if raw in ("/quit", "/q"):
            return 0
        origin = "Typed"
        if raw.isdigit() and followups and 1 <= int(raw) <= len(followups):
            chosen = followups[int(raw) - 1]
            raw, origin = chosen["text"], "FollowupClick"
            print(f"you> {raw}")
        reply = client.post(
            f"/sessions/{session_id}/messages", json={"text": raw, "origin": origin}
        )
        if reply.status_code >= 400:
            print(f"error: {reply.text}", file=sys.stderr)
            continue
        data = reply.json()
        view = data["state_view"]
        response = data["response"]
        if response is not None:
            print(f"\nassistant [{response['act']}]> {response['body']}\n")
            followups = response.get("followups", [])
            for i, chip in enumerate(followups, start=1):
                print(f"  {i}. ({chip['kind']}) {chip['text']}")
        else:
            followups = []
        print(f"-- phase={view['phase']} depth={view['depth']} done={view['done']}")
        if view["done"]:
            print("session closed.")
            return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .orchestrator.api import create_app

    config = EngineConfig.from_env()
    engine = Orchestrator(config=config, sessions_dir=args.sessions_dir)
    uvicorn.run(create_app(engine), host=args.host, port=args.port, log_level="info")
    return 0


def cmd_eval(args) -> int:
    if args.scenarios == "all":
        ids = [s.id for s in list_scenarios()]
    else:
        ids = [resolve_scenario_id(name) for name in args.scenarios.split(",")]
    modes = []
    for name in args.modes.split(","):
        name = name.strip().lower()
        if name == "full":
            modes.append(EvalMode.FULL)
        elif name in ("eager", "eageronly", "eager-only"):
            modes.append(EvalMode.EAGER_ONLY)
        else:
            print(f"error: unknown mode {name!r} (use full,eager)", file=sys.stderr)
            return 2
    policy = SimulatedUserPolicy(max_turns=args.max_turns)
    rows = run_suite(
        ids, modes, seed=args.seed, user_policy=policy, sessions_dir=args.sessions_dir
    )
    print(rows_to_table(rows))
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(rows_to_csv(rows))
        print(f"\nwrote {args.out}")
    return 0


def cmd_replay(args) -> int:
    record = SessionStore.load_file(args.file)
    for turn in record.turns:
        utterance = turn["utterance"]
        print(f"[{utterance['turn_index']}] {utterance['speaker']} ({utterance['act']}): "
              f"{utterance['text'][:100]}")
        response = turn.get("response")
        if response:
            print(f"[{utterance['turn_index'] + 1}] Assistant ({response['act']}): "
                  f"{response['body'][:100]}")
    if verify_replay(record):
        print(f"replay OK: {len(record.turns)} turns, all snapshot hashes match")
        return 0
    print("replay MISMATCH: recomputed snapshot hashes differ from the record", file=sys.stderr)
    return 1


def cmd_scenarios(_args) -> int:
    for scenario in list_scenarios():
        print(f"{scenario.id}: {scenario.title}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dbgchat", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    chat = sub.add_parser("chat", help="interactive debugging chat (default command)")
    chat.add_argument("--scenario", help="bundled scenario id (prefix ok, e.g. task1)")
    chat.add_argument("--backend", choices=("scripted", "live"), default="scripted")
    chat.add_argument("--force-eager", action="store_true")
    chat.add_argument("--force-collaborative", action="store_true")
    chat.add_argument("--url", help="talk to a remote server instead of in-process")
    chat.add_argument("--sessions-dir", default="sessions")

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--sessions-dir", default="sessions")

    ev = sub.add_parser("eval", help="run the scripted evaluation suite")
    ev.add_argument("--scenarios", default="all", help='"all" or comma-separated ids')
    ev.add_argument("--modes", default="full,eager")
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--max-turns", type=int, default=12)
    ev.add_argument("--out", help="write the CSV report here")
    ev.add_argument("--sessions-dir", default="sessions")

    replay = sub.add_parser("replay", help="verify and print a persisted session")
    replay.add_argument("file")

    sub.add_parser("scenarios", help="list bundled scenarios")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        build_parser().print_help()
        return 0
    # `dbgchat --scenario task1` is chat mode without the subcommand word.
    if argv[0] not in COMMANDS and argv[0].startswith("-"):
        argv = ["chat"] + argv
    args = build_parser().parse_args(argv)
    handlers = {
        "chat": cmd_chat,
        "serve": cmd_serve,
        "eval": cmd_eval,
        "replay": cmd_replay,
        "scenarios": cmd_scenarios,
    }
    if args.command is None:
        build_parser().print_help()
        return 0
    try:
        return handlers[args.command](args)
    except DbgchatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
