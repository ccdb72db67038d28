"""Command line front end.

Four subcommands:

  bringup   start the simulator (bridge on by default, --headless for CI)
  replay    push a recorded session back through a fresh bus
  inspect   print what a recorded session contains
  graph     print the node/topic wiring a config would produce

Log verbosity comes from the MIR_LOG_LEVEL environment variable
(error, warn, info, debug); the default is info.
"""

from __future__ import annotations

import argparse
import logging
import os
import signal
import sys
from dataclasses import replace

from .bus import Bus
from .config import ConfigError, default_config, load_config
from .daq import load_session, replay as schedule_replay
from .errors import MirError
from .session import SimSession
from .sim import Scheduler

logger = logging.getLogger(__name__)

LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def _setup_logging() -> None:
    name = os.environ.get("MIR_LOG_LEVEL", "info").strip().lower()
    level = LOG_LEVELS.get(name)
    if level is None:
        print(
            f"warning: MIR_LOG_LEVEL={name!r} is not one of {sorted(LOG_LEVELS)}, using info",
            file=sys.stderr,
        )
        level = logging.INFO
    # force=True so repeated in-process invocations (tests) reconfigure.
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)-7s %(name)s: %(message)s",
        force=True,
    )


def _load(config_path: str | None):
    return load_config(config_path) if config_path else default_config()


# -- bringup -----------------------------------------------------------------


def _cmd_bringup(args: argparse.Namespace) -> int:
    cfg = _load(args.config)
    if args.world:
        cfg = replace(cfg, world_file=args.world)
    if args.realtime:
        cfg = replace(cfg, realtime=True)

    interactive = not args.headless
    if interactive and not cfg.realtime:
        logger.warning(
            "bridge is enabled but the clock is not realtime; "
            "pass --realtime (or set realtime: true) for interactive driving"
        )

    sess = SimSession(cfg, headless=args.headless, record=args.record)
    stop_requested = False

    def _on_signal(signum: int, frame: object) -> None:
        nonlocal stop_requested
        stop_requested = True
        sess.sched.stop()
        # A second signal falls through to the default handler.
        signal.signal(signal.SIGINT, signal.SIG_DFL)
        signal.signal(signal.SIGTERM, signal.SIG_DFL)

    old_int = signal.signal(signal.SIGINT, _on_signal)
    old_term = signal.signal(signal.SIGTERM, _on_signal)
    try:
        if interactive:
            logger.info("bridge ready on ws://127.0.0.1:%d", sess.bridge.port)
        if args.duration is not None:
            sess.run_for(args.duration)
        else:
            while not stop_requested:
                sess.run_for(3600.0)
        logger.info("stopped at t=%.3f", sess.now)
    finally:
        signal.signal(signal.SIGINT, old_int)
        signal.signal(signal.SIGTERM, old_term)
        sess.shutdown()
    if sess.session_dir is not None:
        print(f"recording written to {sess.session_dir}")
    return 0


# -- replay -------------------------------------------------------------------


def _cmd_replay(args: argparse.Namespace) -> int:
    if not args.rate > 0.0:
        print("error: --rate must be positive", file=sys.stderr)
        return 2
    session = load_session(args.session)
    bus = Bus()
    sched = Scheduler(realtime=args.realtime)
    handle = schedule_replay(session, bus, sched, rate=args.rate)
    span = session.records[-1].t - session.records[0].t if session.records else 0.0
    sched.run_for(span / args.rate + 1.0)
    if not handle.done:
        print("error: replay did not complete", file=sys.stderr)
        return 1
    s = handle.summary
    print(
        f"replayed {s['published']}/{s['total']} records "
        f"({s['skipped']} skipped) over {s['sim_duration']:.3f} s"
    )
    return 0


# -- inspect -------------------------------------------------------------------


def _cmd_inspect(args: argparse.Namespace) -> int:
    session = load_session(args.session)
    man = session.manifest
    print(f"session:   {man.get('session', os.path.basename(str(session.path)))}")
    print(f"path:      {session.path}")
    if session.records:
        t0 = session.records[0].t
        t1 = session.records[-1].t
        print(f"time:      {t0:.3f} .. {t1:.3f} s  (span {t1 - t0:.3f} s)")
    truncated = man.get("truncated", False)
    print(f"truncated: {'yes' if truncated else 'no'}")
    suffix = f"  ({session.corrupt_lines} corrupt lines skipped)" if session.corrupt_lines else ""
    print(f"records:   {len(session)}{suffix}")
    for topic in sorted(session.topics):
        print(f"  {topic:<20} {len(session.topic_records(topic))}")
    return 0


# -- graph ----------------------------------------------------------------------


def _cmd_graph(args: argparse.Namespace) -> int:
    cfg = _load(args.config)
    sess = SimSession(cfg, headless=True, record=args.record)
    try:
        g = sess.graph()
        print("nodes:")
        for name in sorted(g.nodes):
            pubs, subs = g.nodes[name]
            parts = []
            if pubs:
                parts.append("pub " + ", ".join(sorted(pubs)))
            if subs:
                parts.append("sub " + ", ".join(sorted(subs)))
            print(f"  {name:<18} {'; '.join(parts)}")
        print("topics:")
        for name in sorted(g.topics):
            schema = g.topics[name]
            print(f"  {name:<18} {schema.__name__ if schema else '(unadvertised)'}")
    finally:
        sess.shutdown()
    return 0


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mirsim",
        description="Software twin of a drive-by-wire ride-on car.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bringup", help="start the simulator")
    p.add_argument("--config", help="YAML config file (defaults apply without one)")
    p.add_argument("--world", help="override the world file from the config")
    p.add_argument("--record", action="store_true", help="record every topic to disk")
    p.add_argument(
        "--headless",
        action="store_true",
        help="run without the websocket bridge",
    )
    p.add_argument(
        "--realtime",
        action="store_true",
        help="pace the clock against wall time (implied by interactive configs)",
    )
    p.add_argument(
        "--duration",
        type=float,
        help="run for this many simulated seconds, then exit",
    )
    p.set_defaults(fn=_cmd_bringup)

    p = sub.add_parser("replay", help="play a recorded session back through a bus")
    p.add_argument("session", help="session directory (or its log file)")
    p.add_argument("--rate", type=float, default=1.0, help="time scale, 2.0 = twice as fast")
    p.add_argument("--realtime", action="store_true", help="pace the replay against wall time")
    p.set_defaults(fn=_cmd_replay)

    p = sub.add_parser("inspect", help="summarize a recorded session")
    p.add_argument("session", help="session directory (or its log file)")
    p.set_defaults(fn=_cmd_inspect)

    p = sub.add_parser("graph", help="print the node/topic wiring")
    p.add_argument("--config", help="YAML config file")
    p.add_argument("--record", action="store_true", help="include the recorder node")
    p.set_defaults(fn=_cmd_graph)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MirError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
