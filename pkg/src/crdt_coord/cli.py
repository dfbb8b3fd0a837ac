"""Command line: run, stats, replay and serve-relay."""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from .agents.script import BUNDLED, ScriptError, load_script
from .harness.experiment import ExperimentConfig, run_once
from .harness.replay import ReplayError, replay
from .harness.report import read_csv, summary_text, write_report

logger = logging.getLogger("crdt_coord")

LOG_ENV = "CRDT_COORD_LOG"


def _setup_logging() -> None:
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _bind(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}")
    return host or "127.0.0.1", int(port)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crdt-coord", description="CRDT coordination experiments and relay")
    sub = p.add_subparsers(dest="verb", required=True)

    run = sub.add_parser("run", help="run seeded experiments and write runs.csv plus summaries")
    run.add_argument("--script", action="append",
                     help=f"bundled name ({', '.join(BUNDLED)}), a script file, or 'all'; repeatable")
    run.add_argument("--mode", choices=("seq", "par", "both"), default="both")
    run.add_argument("--agents", type=int)
    run.add_argument("--runs", type=int)
    run.add_argument("--seed", type=int, help="base seed; run i uses seed+i")
    run.add_argument("--config", type=Path, help="JSON file of experiment settings; flags override it")
    run.add_argument("--out", type=Path, required=True)
    run.add_argument("--traces", action="store_true", help="also write one JSONL trace per run")

    st = sub.add_parser("stats", help="recompute summaries from a runs.csv directory")
    st.add_argument("--in", dest="in_dir", type=Path, required=True)

    rp = sub.add_parser("replay", help="re-run a trace from its header and compare")
    rp.add_argument("--trace", type=Path, required=True)

    sr = sub.add_parser("serve-relay", help="serve a persistent relay over TCP")
    sr.add_argument("--bind", type=_bind, default=("127.0.0.1", 4455), help="HOST:PORT")
    sr.add_argument("--data-dir", type=Path, required=True)
    sr.add_argument("--doc-id", default="default")
    return p


def _base_config(args) -> dict:
    base = {}
    if args.config is not None:
        base = json.loads(args.config.read_text(encoding="utf-8"))
        if not isinstance(base, dict):
            raise ValueError("config file must hold a JSON object")
    for flag, name in (("agents", "agents"), ("runs", "runs"), ("seed", "base_seed")):
        value = getattr(args, flag)
        if value is not None:
            base[name] = value
    return base


def cmd_run(args) -> int:
    base = _base_config(args)
    names = args.script or [base.get("script", "tic-tac-toe")]
    if "all" in names:
        names = list(BUNDLED)
    modes = ("sequential", "parallel") if args.mode == "both" else (args.mode,)
    records, hashes = [], {}
    args.out.mkdir(parents=True, exist_ok=True)
    for name in names:
        script = load_script(name)
        for mode in modes:
            cfg = ExperimentConfig.from_dict({**base, "script": str(name), "mode": mode})
            hashes[f"{script.name}/{cfg.mode}"] = cfg.config_hash()
            for i in range(cfg.runs):
                seed = cfg.base_seed + i
                result = run_once(cfg, seed, script, trace=args.traces)
                records.append(result.record)
                if args.traces:
                    result.trace.save(args.out / f"trace-{script.name}-{cfg.mode}-{seed}.jsonl")
                if not result.record.converged:
                    logger.warning("%s/%s seed %d did not converge", script.name, cfg.mode, seed)
    meta = {"configHashes": hashes, "baseConfig": base}
    (args.out / "config.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    summary = write_report(records, args.out, meta)
    sys.stdout.write(summary_text(summary))
    return 0


def cmd_stats(args) -> int:
    records = read_csv(args.in_dir / "runs.csv")
    meta_path = args.in_dir / "config.json"
    meta = json.loads(meta_path.read_text(encoding="utf-8")) if meta_path.exists() else {}
    summary = write_report(records, args.in_dir, meta)
    sys.stdout.write(summary_text(summary))
    return 0


def cmd_replay(args) -> int:
    out = replay(args.trace)
    if out.identical:
        print(f"identical: {out.recorded_lines} lines")
        return 0
    print(f"traces differ at line {out.first_difference} "
          f"(recorded {out.recorded_lines} lines, replayed {out.replayed_lines})")
    print(f"  recorded: {out.expected}")
    print(f"  replayed: {out.actual}")
    return 1


def cmd_serve_relay(args) -> int:
    from .sync.relay import Relay
    from .sync.store import FileStore
    from .sync.tcp import serve_relay

    host, port = args.bind
    store = FileStore(args.data_dir, args.doc_id)
    relay = Relay(args.doc_id, store)

    async def main() -> None:
        server = await serve_relay(relay, host, port)
        print(f"relay {args.doc_id!r} listening on {host}:{server.sockets[0].getsockname()[1]}", flush=True)
        async with server:
            await server.serve_forever()

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        pass
    finally:
        relay.shutdown()
        store.close()
    return 0


COMMANDS = {"run": cmd_run, "stats": cmd_stats, "replay": cmd_replay, "serve-relay": cmd_serve_relay}


def main(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.verb](args)
    except (ScriptError, ReplayError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
