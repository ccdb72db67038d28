"""In-process publish/subscribe node graph.

Nodes advertise and subscribe to named topics; every publish is fanned out
to all current subscriptions under one bus lock, so per-topic delivery order
is globally consistent no matter which thread publishes. Subscriber queues
are bounded and drop the oldest message on overflow (a stale teleop command
is worse than none), counting what they dropped.

The bus assigns each published message a per-topic sequence number and
delivers it wrapped in an Envelope, since not every schema carries its own
seq field. graph() exposes the bipartite node/topic topology; topic names
start with '/' and node names must not, so the two vertex sets cannot
collide in an edge list.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass
from typing import Any

from .errors import SchemaConflictError

DEFAULT_QUEUE_DEPTH = 10


@dataclass(frozen=True, slots=True)
class TopicSpec:
    """Declaration of a topic: name, carried schema, and latch behavior.

    A latched topic stores its most recent message and hands it to every
    new subscriber immediately.
    """

    name: str
    schema: type
    latch: bool = False

    def __post_init__(self) -> None:
        if not self.name.startswith("/"):
            raise ValueError(f"topic name must start with '/', got {self.name!r}")


@dataclass(frozen=True, slots=True)
class Envelope:
    """One delivered message plus its bus-assigned per-topic seq."""

    topic: str
    seq: int
    msg: Any


class _Topic:
    __slots__ = ("name", "schema", "latch", "next_seq", "subs", "publishers", "latched")

    def __init__(self, name: str) -> None:
        self.name = name
        self.schema: type | None = None
        self.latch = False
        self.next_seq = 0
        self.subs: list[Subscription] = []
        self.publishers: set[str] = set()  # node names
        self.latched: Envelope | None = None


class Subscription:
    """Bounded inbox for one (node, topic) pair.

    drain() empties the queue in delivery order. dropped counts messages
    evicted because the queue was full when a newer one arrived.
    """

    def __init__(self, bus: "Bus", node: str, topic: str, queue_depth: int) -> None:
        if queue_depth < 1:
            raise ValueError("queue_depth must be >= 1")
        self._bus = bus
        self.node = node
        self.topic = topic
        self.queue_depth = queue_depth
        self._queue: deque[Envelope] = deque()
        self.dropped = 0
        self.closed = False

    def _offer(self, env: Envelope) -> None:
        # Caller holds the bus lock.
        if len(self._queue) >= self.queue_depth:
            self._queue.popleft()
            self.dropped += 1
        self._queue.append(env)

    def drain(self) -> list[Envelope]:
        with self._bus._lock:
            out = list(self._queue)
            self._queue.clear()
        return out

    def latest(self) -> Envelope | None:
        """Drop everything but the newest queued message and return it."""
        with self._bus._lock:
            if not self._queue:
                return None
            env = self._queue[-1]
            self._queue.clear()
        return env

    def close(self) -> None:
        self._bus._close_subscription(self)


class Publisher:
    """Handle for publishing onto one topic from one node."""

    def __init__(self, bus: "Bus", node: str, topic: str, schema: type) -> None:
        self._bus = bus
        self.node = node
        self.topic = topic
        self.schema = schema
        self.closed = False

    def publish(self, msg: Any) -> int:
        """Deliver msg to every current subscriber; returns the assigned seq."""
        return self._bus._publish(self, msg)


class NodeHandle:
    """A named participant in the graph. Names are unique per bus."""

    def __init__(self, bus: "Bus", name: str) -> None:
        self.bus = bus
        self.name = name
        self._publishers: list[Publisher] = []
        self._subscriptions: list[Subscription] = []

    def advertise(self, spec: TopicSpec) -> Publisher:
        return self.bus._advertise(self, spec)

    def subscribe(self, topic: str, queue_depth: int = DEFAULT_QUEUE_DEPTH) -> Subscription:
        return self.bus._subscribe(self, topic, queue_depth)

    def shutdown(self) -> None:
        """Withdraw this node and all its graph edges."""
        self.bus._shutdown_node(self)


@dataclass(frozen=True)
class GraphView:
    """Snapshot of the bipartite node/topic graph.

    edges contains (node, topic) pairs for publications and (topic, node)
    pairs for subscriptions.
    """

    nodes: dict[str, tuple[frozenset[str], frozenset[str]]]  # name -> (pubs, subs)
    topics: dict[str, type | None]
    edges: frozenset[tuple[str, str]]

    def induced(self, vertices: set[str]) -> frozenset[tuple[str, str]]:
        """Edges with both endpoints inside the given vertex set."""
        return frozenset(e for e in self.edges if e[0] in vertices and e[1] in vertices)


class Bus:
    def __init__(self) -> None:
        self._lock = threading.RLock()
        self._nodes: dict[str, NodeHandle] = {}
        self._topics: dict[str, _Topic] = {}

    def node(self, name: str) -> NodeHandle:
        if name.startswith("/"):
            raise ValueError(f"node name must not start with '/', got {name!r}")
        with self._lock:
            if name in self._nodes:
                raise ValueError(f"node name {name!r} already registered")
            handle = NodeHandle(self, name)
            self._nodes[name] = handle
            return handle

    # -- registration ------------------------------------------------------

    def _topic(self, name: str) -> _Topic:
        t = self._topics.get(name)
        if t is None:
            t = _Topic(name)
            self._topics[name] = t
        return t

    def _advertise(self, node: NodeHandle, spec: TopicSpec) -> Publisher:
        with self._lock:
            t = self._topic(spec.name)
            if t.schema is not None and t.schema is not spec.schema:
                raise SchemaConflictError(
                    f"topic {spec.name!r} already carries "
                    f"{t.schema.__name__}, cannot advertise {spec.schema.__name__}"
                )
            t.schema = spec.schema
            t.latch = t.latch or spec.latch
            t.publishers.add(node.name)
            pub = Publisher(self, node.name, spec.name, spec.schema)
            node._publishers.append(pub)
            return pub

    def _subscribe(self, node: NodeHandle, topic: str, queue_depth: int) -> Subscription:
        with self._lock:
            t = self._topic(topic)
            sub = Subscription(self, node.name, topic, queue_depth)
            t.subs.append(sub)
            node._subscriptions.append(sub)
            if t.latched is not None:
                sub._offer(t.latched)
            return sub

    # -- data path ---------------------------------------------------------

    def _publish(self, pub: Publisher, msg: Any) -> int:
        with self._lock:
            if pub.closed:
                raise RuntimeError(f"publisher on {pub.topic!r} is closed")
            t = self._topics[pub.topic]
            if type(msg) is not t.schema:
                raise TypeError(
                    f"topic {pub.topic!r} carries {t.schema.__name__}, "
                    f"got {type(msg).__name__}"
                )
            env = Envelope(topic=pub.topic, seq=t.next_seq, msg=msg)
            t.next_seq += 1
            if t.latch:
                t.latched = env
            for sub in t.subs:
                sub._offer(env)
            return env.seq

    # -- teardown ----------------------------------------------------------

    def _close_subscription(self, sub: Subscription) -> None:
        with self._lock:
            sub.closed = True
            t = self._topics.get(sub.topic)
            if t and sub in t.subs:
                t.subs.remove(sub)
            owner = self._nodes.get(sub.node)
            if owner is not None and sub in owner._subscriptions:
                owner._subscriptions.remove(sub)
            self._gc_topic(sub.topic)

    def _shutdown_node(self, node: NodeHandle) -> None:
        with self._lock:
            for pub in node._publishers:
                pub.closed = True
                t = self._topics.get(pub.topic)
                if t:
                    t.publishers.discard(node.name)
            for sub in node._subscriptions:
                sub.closed = True
                t = self._topics.get(sub.topic)
                if t and sub in t.subs:
                    t.subs.remove(sub)
            touched = {p.topic for p in node._publishers} | {
                s.topic for s in node._subscriptions
            }
            node._publishers.clear()
            node._subscriptions.clear()
            self._nodes.pop(node.name, None)
            for name in touched:
                self._gc_topic(name)

    def _gc_topic(self, name: str) -> None:
        t = self._topics.get(name)
        if t and not t.subs and not t.publishers:
            del self._topics[name]

    # -- introspection -----------------------------------------------------

    def graph(self) -> GraphView:
        with self._lock:
            nodes: dict[str, tuple[frozenset[str], frozenset[str]]] = {}
            edges: set[tuple[str, str]] = set()
            for name, handle in self._nodes.items():
                pubs = frozenset(p.topic for p in handle._publishers)
                subs = frozenset(s.topic for s in handle._subscriptions)
                nodes[name] = (pubs, subs)
                edges.update((name, t) for t in pubs)
                edges.update((t, name) for t in subs)
            topics = {name: t.schema for name, t in self._topics.items()}
            return GraphView(nodes=nodes, topics=topics, edges=frozenset(edges))
