"""Data acquisition: record topics to disk, align records, replay them.

A session is a directory holding two files:

    log.jsonl       one record per line:
                    {"t": float, "topic": str, "seq": int,
                     "schema": int, "data": "<base64>"}
    manifest.json   {"session", "topics": {name: count},
                     "t_start", "t_end", "truncated"}

The payload bytes in "data" are exactly what the wire layer produces, so
a recorded stream can be replayed, re-recorded, and compared byte for
byte. JSONL was picked over a binary bag because a half-written session
is still readable up to the last complete line, and sessions diff and
grep like any text file.

t is the message's own stamp (every schema carries one), seq the
bus-assigned envelope sequence. Both must be non-decreasing per topic;
the writer asserts this rather than silently recording disorder.
"""

from __future__ import annotations

import base64
import bisect
import json
import logging
import math
import os
from dataclasses import dataclass, field

from .bus import Bus, NodeHandle, Subscription, TopicSpec
from .errors import ConfigError
from .msgs import Timestamp
from .sim import PRIORITY_INPUT, Scheduler
from .wire import DEFAULT_TOPICS, TopicRegistry, deserialize, serialize

log = logging.getLogger(__name__)

LOG_FILENAME = "log.jsonl"
MANIFEST_FILENAME = "manifest.json"

# Deep enough that a drain cadence of tens of hertz never sheds messages
# even with every standard topic recorded at once.
RECORDER_QUEUE_DEPTH = 4096

# Replay publishes in the input slot; its completion notice runs just after.
PRIORITY_REPLAY_DONE = PRIORITY_INPUT + 1


@dataclass(frozen=True)
class RecordingConfig:
    """What to record and where to put it."""

    topics: tuple[str, ...]
    output_dir: str
    session_name: str = "session"
    flush_interval_s: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "topics", tuple(self.topics))
        if not self.topics:
            raise ConfigError("recording topic list must not be empty")
        if not self.flush_interval_s > 0.0:
            raise ConfigError("flush_interval_s must be positive")

    @property
    def session_dir(self) -> str:
        return os.path.join(self.output_dir, self.session_name)


@dataclass(frozen=True)
class LogRecord:
    """One persisted message."""

    t: Timestamp
    topic: str
    seq: int
    schema: int
    data: bytes


class Recorder:
    """The data_acquisition node: persists configured topics as JSONL.

    Construction validates the config against the bus and registry and
    opens the log file, so an unwritable destination fails before any
    data is lost. on_tick() drains the subscriptions and appends; the
    caller schedules it (and is expected to schedule it behind the
    publishers at each instant, so a tick's messages land in this
    tick's drain).

    A disk error mid-run stops recording, keeps everything already
    written, and marks the manifest truncated; it never propagates into
    the simulation.
    """

    def __init__(
        self,
        bus: Bus,
        cfg: RecordingConfig,
        *,
        registry: TopicRegistry = DEFAULT_TOPICS,
        node_name: str = "data_acquisition",
        queue_depth: int = RECORDER_QUEUE_DEPTH,
    ) -> None:
        self.cfg = cfg
        self._registry = registry
        known = set(bus.graph().topics)
        for name in cfg.topics:
            try:
                registry.by_name(name)
            except KeyError:
                raise ConfigError(f"cannot record unknown topic {name!r}") from None
            if name not in known:
                raise ConfigError(
                    f"topic {name!r} is not present on the bus"
                )

        self.session_dir = cfg.session_dir
        os.makedirs(self.session_dir, exist_ok=True)
        self._log_path = os.path.join(self.session_dir, LOG_FILENAME)
        self._fh = open(self._log_path, "w", encoding="utf-8")

        self._node: NodeHandle = bus.node(node_name)
        self._subs: list[tuple[str, Subscription]] = [
            (name, self._node.subscribe(name, queue_depth=queue_depth))
            for name in cfg.topics
        ]
        self._counts: dict[str, int] = {name: 0 for name in cfg.topics}
        self._last: dict[str, tuple[float, int]] = {}
        self._t_start: float | None = None
        self._t_end: float | None = None
        self.truncated = False
        self._stopped = False

    # -- recording ---------------------------------------------------------

    def on_tick(self, now: float) -> None:
        """Drain everything that arrived since the last call and append it."""
        if self._stopped:
            return
        for name, sub in self._subs:
            for envelope in sub.drain():
                self._append(name, envelope.seq, envelope.msg)
                if self._stopped:
                    return

    def _append(self, topic: str, seq: int, msg) -> None:
        stamp = float(msg.stamp)
        prev = self._last.get(topic)
        if prev is not None:
            assert stamp >= prev[0] and seq >= prev[1], (
                f"disordered stream on {topic}: ({stamp}, {seq}) after {prev}"
            )
        self._last[topic] = (stamp, seq)

        entry = self._registry.by_name(topic)
        payload = serialize(msg)
        line = json.dumps(
            {
                "t": stamp,
                "topic": topic,
                "seq": seq,
                "schema": entry.topic_id,
                "data": base64.b64encode(payload).decode("ascii"),
            },
            separators=(",", ":"),
        )
        try:
            self._fh.write(line)
            self._fh.write("\n")
        except (OSError, ValueError) as exc:
            # ValueError covers writes against a handle the OS already
            # invalidated (closed under us); treat it like a disk error.
            log.error("recording stopped, write failed: %s", exc)
            self._abort()
            return
        self._counts[topic] += 1
        if self._t_start is None:
            self._t_start = stamp
        self._t_end = stamp

    def flush(self, now: float = 0.0) -> None:
        if self._stopped:
            return
        try:
            self._fh.flush()
        except (OSError, ValueError) as exc:
            log.error("recording stopped, flush failed: %s", exc)
            self._abort()

    def _abort(self) -> None:
        self.truncated = True
        self._stopped = True
        try:
            self._fh.close()
        except OSError:
            pass
        self._write_manifest()

    # -- teardown ----------------------------------------------------------

    def stop(self) -> str:
        """Flush, write the manifest, release the node; returns session dir."""
        if not self._stopped:
            self.on_tick(0.0)
            self._stopped = True
            try:
                self._fh.close()
            except OSError as exc:
                log.error("final flush failed: %s", exc)
                self.truncated = True
            self._write_manifest()
        self._node.shutdown()
        return self.session_dir

    def _write_manifest(self) -> None:
        manifest = {
            "session": self.cfg.session_name,
            "topics": dict(self._counts),
            "t_start": self._t_start,
            "t_end": self._t_end,
            "truncated": self.truncated,
        }
        path = os.path.join(self.session_dir, MANIFEST_FILENAME)
        try:
            with open(path, "w", encoding="utf-8") as fh:
                json.dump(manifest, fh, indent=2)
                fh.write("\n")
        except OSError as exc:
            log.error("could not write manifest: %s", exc)

    @property
    def counts(self) -> dict[str, int]:
        return dict(self._counts)


# --------------------------------------------------------------------------
# Reading sessions back


@dataclass
class Session:
    """A loaded session: manifest plus every parseable record, in file order."""

    path: str
    manifest: dict
    records: tuple[LogRecord, ...]
    corrupt_lines: int
    _by_topic: dict[str, list[LogRecord]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        for rec in self.records:
            self._by_topic.setdefault(rec.topic, []).append(rec)

    @property
    def topics(self) -> tuple[str, ...]:
        return tuple(self._by_topic)

    def topic_records(self, topic: str) -> tuple[LogRecord, ...]:
        return tuple(self._by_topic.get(topic, ()))

    def __len__(self) -> int:
        return len(self.records)


def _parse_line(line: str) -> LogRecord:
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValueError("not an object")
    return LogRecord(
        t=float(obj["t"]),
        topic=str(obj["topic"]),
        seq=int(obj["seq"]),
        schema=int(obj["schema"]),
        data=base64.b64decode(obj["data"], validate=True),
    )


def load_session(path: str) -> Session:
    """Read a session directory back; corrupt lines are counted, not fatal.

    path may be the session directory or the log file itself (the
    manifest is then looked for alongside).
    """
    if os.path.isdir(path):
        log_path = os.path.join(path, LOG_FILENAME)
        manifest_path = os.path.join(path, MANIFEST_FILENAME)
        session_dir = path
    else:
        log_path = path
        manifest_path = os.path.join(os.path.dirname(path), MANIFEST_FILENAME)
        session_dir = os.path.dirname(path)

    manifest: dict = {}
    if os.path.exists(manifest_path):
        try:
            with open(manifest_path, encoding="utf-8") as fh:
                loaded = json.load(fh)
            if isinstance(loaded, dict):
                manifest = loaded
        except (OSError, json.JSONDecodeError) as exc:
            log.warning("unreadable manifest %s: %s", manifest_path, exc)

    records: list[LogRecord] = []
    corrupt = 0
    with open(log_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(_parse_line(line))
            except (ValueError, KeyError, TypeError) as exc:
                corrupt += 1
                log.warning("%s:%d: skipping corrupt record: %s", log_path, lineno, exc)

    return Session(
        path=session_dir,
        manifest=manifest,
        records=tuple(records),
        corrupt_lines=corrupt,
    )


# --------------------------------------------------------------------------
# Alignment


def align(
    session: Session, t: float, tolerance: float
) -> dict[str, LogRecord]:
    """Nearest record per topic within tolerance of t; ties go earlier.

    Topics with no record inside the window are absent from the result.
    """
    if tolerance < 0.0 or not math.isfinite(t):
        raise ValueError("t must be finite and tolerance non-negative")
    out: dict[str, LogRecord] = {}
    for topic in session.topics:
        recs = session.topic_records(topic)
        stamps = [r.t for r in recs]
        idx = bisect.bisect_right(stamps, t)
        best: LogRecord | None = None
        if idx > 0:
            best = recs[idx - 1]
        if idx < len(recs):
            later = recs[idx]
            # Strictly closer wins; an exact tie keeps the earlier record.
            if best is None or abs(later.t - t) < abs(best.t - t):
                best = later
        if best is not None and abs(best.t - t) <= tolerance:
            out[topic] = best
    return out


# --------------------------------------------------------------------------
# Replay


class ReplayHandle:
    """Progress/outcome of a scheduled replay."""

    def __init__(self, total: int) -> None:
        self.total = total
        self.published = 0
        self.skipped = 0
        self.done = False
        self.summary: dict | None = None

    def _finish(self, sim_duration: float) -> None:
        self.done = True
        self.summary = {
            "published": self.published,
            "skipped": self.skipped,
            "total": self.total,
            "sim_duration": sim_duration,
        }


def replay(
    session: Session,
    bus: Bus,
    sched: Scheduler,
    *,
    rate: float = 1.0,
    registry: TopicRegistry = DEFAULT_TOPICS,
    node_name: str = "replay",
) -> ReplayHandle:
    """Schedule a session's messages back onto the bus.

    Message k lands at now + (t_k - t_first) / rate, so inter-message
    gaps shrink by the rate multiplier while per-topic order (and the
    file order of simultaneous records) is preserved. Records whose
    payload no longer deserializes are skipped and counted, mirroring
    the loader's treatment of corrupt lines.
    """
    if not rate > 0.0:
        raise ValueError("rate must be positive")

    handle = ReplayHandle(total=len(session.records))
    node = bus.node(node_name)
    publishers = {}
    for topic in session.topics:
        entry = registry.by_name(topic)
        publishers[topic] = node.advertise(TopicSpec(topic, entry.schema))

    if not session.records:
        def finish_empty(now: float) -> None:
            handle._finish(0.0)
            node.shutdown()
            log.info("replay complete: empty session")

        sched.call_at(sched.now, finish_empty, name="replay-done",
                      priority=PRIORITY_REPLAY_DONE)
        return handle

    t_first = session.records[0].t
    t_last = session.records[-1].t
    base = sched.now

    def publish_record(rec: LogRecord):
        def fire(now: float) -> None:
            entry = registry.by_name(rec.topic)
            try:
                msg = deserialize(rec.data, entry.schema)
            except Exception as exc:
                handle.skipped += 1
                log.warning("replay skipping bad %s record: %s", rec.topic, exc)
                return
            publishers[rec.topic].publish(msg)
            handle.published += 1
        return fire

    for rec in session.records:
        due = base + (rec.t - t_first) / rate
        sched.call_at(due, publish_record(rec), name=f"replay{rec.topic}",
                      priority=PRIORITY_INPUT)

    sim_duration = (t_last - t_first) / rate

    def finish(now: float) -> None:
        handle._finish(sim_duration)
        node.shutdown()
        log.info(
            "replay complete: %d/%d messages over %.3f s (sim)",
            handle.published, handle.total, sim_duration,
        )

    sched.call_at(base + sim_duration, finish, name="replay-done",
                  priority=PRIORITY_REPLAY_DONE)
    return handle


__all__ = [
    "LOG_FILENAME",
    "MANIFEST_FILENAME",
    "RECORDER_QUEUE_DEPTH",
    "RecordingConfig",
    "LogRecord",
    "Recorder",
    "Session",
    "load_session",
    "align",
    "ReplayHandle",
    "replay",
]
