"""WebSocket bridge between the in-process bus and browser clients.

Speaks a small JSON protocol over RFC 6455 text frames:

  client -> server   {"op": "subscribe", "topic": "/scan"}
                     {"op": "unsubscribe", "topic": "/scan"}
                     {"op": "publish", "topic": "/joy", "msg": {"axes": [s, t]}}
  server -> client   {"topic": "/scan", "t": 1.25, "msg": {...}}
                     {"op": "error", "message": "..."}

Inbound publishing is restricted to /joy: the browser is an input device,
not a general bus participant. Outbound messages are drained from per-client
subscriptions by a pump thread at a fixed wall-clock cadence, so a fast
headless run does not flood the socket; the subscription queue drops oldest
when the browser cannot keep up.

The framing layer is written against the RFC rather than pulled in as a
dependency because the bridge needs only the server half of the protocol:
handshake, text/ping/close frames, and client-to-server masking.

The same port answers plain HTTP GETs so a built dashboard can be served
from `static_dir` without a second process.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import os
import socket
import threading
import urllib.parse
from typing import Any, Callable

from .bus import Bus, NodeHandle, Publisher, Subscription
from .msgs import (
    CameraFrameStub,
    EncoderPulse,
    Heartbeat,
    ImuSample,
    JoyState,
    LaserScan,
    Quaternion,
    Vector3,
    VehicleControl,
)
from .teleop import JOY_TOPIC

logger = logging.getLogger(__name__)

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_CONT = 0x0
OP_TEXT = 0x1
OP_BINARY = 0x2
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA

# Generous for JSON control traffic; a full scan message is ~8 KiB.
MAX_MESSAGE_BYTES = 1 << 20

# Per-topic inbox depth for browser subscriptions. Encoder traffic arrives at
# 50 Hz and the pump drains every 25 ms, so this never fills during normal
# realtime operation; in a faster-than-realtime run the oldest samples drop,
# which is the right behaviour for a live view.
SUBSCRIPTION_DEPTH = 64

_CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


class ProtocolError(Exception):
    """Peer violated the websocket framing rules."""


def handshake_accept(key: str) -> str:
    """Sec-WebSocket-Accept value for a client's Sec-WebSocket-Key."""
    digest = hashlib.sha1((key + WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def mask_payload(data: bytes, key: bytes) -> bytes:
    """XOR data with the 4-byte mask key (involutive, used both ways)."""
    n = len(data)
    if n == 0:
        return b""
    rep = (key * (n // 4 + 1))[:n]
    return (int.from_bytes(data, "little") ^ int.from_bytes(rep, "little")).to_bytes(n, "little")


def encode_frame(opcode: int, payload: bytes, *, mask: bool = False) -> bytes:
    """Build one complete frame with FIN set."""
    head = bytearray([0x80 | opcode])
    n = len(payload)
    mask_bit = 0x80 if mask else 0
    if n < 126:
        head.append(mask_bit | n)
    elif n < 1 << 16:
        head.append(mask_bit | 126)
        head += n.to_bytes(2, "big")
    else:
        head.append(mask_bit | 127)
        head += n.to_bytes(8, "big")
    if mask:
        key = os.urandom(4)
        return bytes(head) + key + mask_payload(payload, key)
    return bytes(head) + payload


class SocketStream:
    """Buffered blocking reads over a socket."""

    def __init__(self, sock: socket.socket, initial: bytes = b"") -> None:
        self._sock = sock
        self._buf = bytearray(initial)

    def read_exact(self, n: int) -> bytes:
        while len(self._buf) < n:
            chunk = self._sock.recv(65536)
            if not chunk:
                raise ConnectionError("peer closed the connection")
            self._buf += chunk
        out = bytes(self._buf[:n])
        del self._buf[:n]
        return out

    def read_until(self, sep: bytes, limit: int) -> bytes:
        """Read up to and including sep; everything after it stays buffered."""
        while sep not in self._buf:
            if len(self._buf) > limit:
                raise ProtocolError("header block too large")
            chunk = self._sock.recv(65536)
            if not chunk:
                raise ConnectionError("peer closed the connection")
            self._buf += chunk
        idx = self._buf.index(sep) + len(sep)
        out = bytes(self._buf[:idx])
        del self._buf[:idx]
        return out


def read_frame(stream: SocketStream) -> tuple[bool, int, bool, bytes]:
    """Read one frame; returns (fin, opcode, masked, unmasked payload)."""
    b0, b1 = stream.read_exact(2)
    if b0 & 0x70:
        raise ProtocolError("reserved frame bits set")
    fin = bool(b0 & 0x80)
    opcode = b0 & 0x0F
    masked = bool(b1 & 0x80)
    length = b1 & 0x7F
    if length == 126:
        length = int.from_bytes(stream.read_exact(2), "big")
    elif length == 127:
        length = int.from_bytes(stream.read_exact(8), "big")
    if length > MAX_MESSAGE_BYTES:
        raise ProtocolError(f"frame of {length} bytes exceeds limit")
    key = stream.read_exact(4) if masked else b""
    payload = stream.read_exact(length)
    if masked:
        payload = mask_payload(payload, key)
    return fin, opcode, masked, payload


# --------------------------------------------------------------------------
# JSON codecs. One explicit function per schema: the JSON shape is a contract
# with the dashboard, so it should not silently track dataclass refactors.


def _vec(v: Vector3) -> dict[str, float]:
    return {"x": v.x, "y": v.y, "z": v.z}


def _quat(q: Quaternion) -> dict[str, float]:
    return {"w": q.w, "x": q.x, "y": q.y, "z": q.z}


def _enc_vehicle_control(m: VehicleControl) -> dict[str, Any]:
    return {"steering": m.steering, "throttle": m.throttle, "stamp": m.stamp, "seq": m.seq}


def _enc_encoder_pulse(m: EncoderPulse) -> dict[str, Any]:
    return {"drive_count": m.drive_count, "steer_count": m.steer_count, "stamp": m.stamp, "seq": m.seq}


def _enc_imu(m: ImuSample) -> dict[str, Any]:
    return {
        "accel": _vec(m.accel),
        "gyro": _vec(m.gyro),
        "mag": _vec(m.mag),
        "orientation": _quat(m.orientation),
        "frame": int(m.frame),
        "stamp": m.stamp,
    }


def _enc_scan(m: LaserScan) -> dict[str, Any]:
    return {
        "angle_min": m.angle_min,
        "angle_increment": m.angle_increment,
        "range_max": m.range_max,
        "ranges": list(m.ranges),
        "valid": [1 if v else 0 for v in m.valid],
        "stamp": m.stamp,
    }


def _enc_heartbeat(m: Heartbeat) -> dict[str, Any]:
    return {
        "frames_ok": m.frames_ok,
        "frames_bad_checksum": m.frames_bad_checksum,
        "bytes_skipped": m.bytes_skipped,
        "invalid_transitions": m.invalid_transitions,
        "clamp_events": m.clamp_events,
        "stale_drops": m.stale_drops,
        "malformed_drops": m.malformed_drops,
        "stamp": m.stamp,
        "seq": m.seq,
    }


def _enc_joy(m: JoyState) -> dict[str, Any]:
    return {"axes": list(m.axes), "buttons": list(m.buttons), "stamp": m.stamp}


def _enc_camera(m: CameraFrameStub) -> dict[str, Any]:
    return {"frame_index": m.frame_index, "stamp": m.stamp}


_ENCODERS: dict[type, Callable[[Any], dict[str, Any]]] = {
    VehicleControl: _enc_vehicle_control,
    EncoderPulse: _enc_encoder_pulse,
    ImuSample: _enc_imu,
    LaserScan: _enc_scan,
    Heartbeat: _enc_heartbeat,
    JoyState: _enc_joy,
    CameraFrameStub: _enc_camera,
}


def msg_to_json(msg: Any) -> dict[str, Any]:
    enc = _ENCODERS.get(type(msg))
    if enc is None:
        raise TypeError(f"no JSON encoding for {type(msg).__name__}")
    return enc(msg)


def joy_from_json(obj: Any) -> JoyState:
    """Parse the msg body of an inbound /joy publish."""
    if not isinstance(obj, dict):
        raise ValueError("msg must be an object")
    axes = obj.get("axes")
    if not isinstance(axes, (list, tuple)) or not axes:
        raise ValueError("msg.axes must be a non-empty array")
    buttons = obj.get("buttons", [])
    if not isinstance(buttons, (list, tuple)):
        raise ValueError("msg.buttons must be an array")
    stamp = obj.get("stamp", 0.0)
    return JoyState(
        axes=tuple(float(a) for a in axes),
        buttons=tuple(int(b) for b in buttons),
        stamp=float(stamp),
    )


# --------------------------------------------------------------------------


class _Client:
    """One connected websocket peer."""

    def __init__(self, sock: socket.socket, addr: tuple) -> None:
        self.sock = sock
        self.addr = addr
        self.alive = True
        self._send_lock = threading.Lock()
        self._subs_lock = threading.Lock()
        self._subs: dict[str, Subscription] = {}

    def send_frame(self, opcode: int, payload: bytes) -> bool:
        data = encode_frame(opcode, payload)
        try:
            with self._send_lock:
                self.sock.sendall(data)
            return True
        except OSError:
            self.alive = False
            return False

    def send_text(self, text: str) -> bool:
        return self.send_frame(OP_TEXT, text.encode("utf-8"))

    def send_json(self, obj: dict) -> bool:
        return self.send_text(json.dumps(obj, separators=(",", ":")))

    def add_subscription(self, topic: str, sub: Subscription) -> bool:
        with self._subs_lock:
            if topic in self._subs:
                sub.close()
                return False
            self._subs[topic] = sub
            return True

    def drop_subscription(self, topic: str) -> None:
        with self._subs_lock:
            sub = self._subs.pop(topic, None)
        if sub is not None:
            sub.close()

    def subscriptions(self) -> list[tuple[str, Subscription]]:
        with self._subs_lock:
            return list(self._subs.items())

    def close(self) -> None:
        self.alive = False
        with self._subs_lock:
            subs = list(self._subs.values())
            self._subs.clear()
        for sub in subs:
            sub.close()
        try:
            with self._send_lock:
                self.sock.sendall(encode_frame(OP_CLOSE, (1001).to_bytes(2, "big")))
        except OSError:
            pass
        try:
            self.sock.close()
        except OSError:
            pass


class BridgeServer:
    """Threaded websocket endpoint for one bus.

    start() binds and spawns the accept and pump threads; stop() tears
    everything down and removes the bridge's node from the graph. The
    joy publisher is handed in by the owner so browser input enters the
    bus through the same handle as any other joystick source.
    """

    def __init__(
        self,
        bus: Bus,
        joy_pub: Publisher,
        *,
        port: int = 9090,
        host: str = "127.0.0.1",
        static_dir: str | None = None,
        pump_interval_s: float = 0.025,
        node_name: str = "bridge",
    ) -> None:
        self._bus = bus
        self._joy_pub = joy_pub
        self._host = host
        self._requested_port = port
        self._static_dir = os.path.realpath(static_dir) if static_dir else None
        self._pump_interval = pump_interval_s
        self._node_name = node_name

        self.port: int | None = None
        self.joy_received = 0
        self.pushed = 0

        self._node: NodeHandle | None = None
        self._listener: socket.socket | None = None
        self._accept_thread: threading.Thread | None = None
        self._pump_thread: threading.Thread | None = None
        self._stopping = threading.Event()
        self._clients: set[_Client] = set()
        self._clients_lock = threading.Lock()

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        if self._listener is not None:
            raise RuntimeError("bridge already started")
        self._listener = socket.create_server((self._host, self._requested_port))
        # Wake the accept loop periodically even if the shutdown() nudge in
        # stop() is lost; closing a socket does not interrupt a blocked accept.
        self._listener.settimeout(0.5)
        self.port = self._listener.getsockname()[1]
        self._node = self._bus.node(self._node_name)
        self._stopping.clear()
        self._accept_thread = threading.Thread(
            target=self._accept_loop, name="bridge-accept", daemon=True
        )
        self._pump_thread = threading.Thread(
            target=self._pump_loop, name="bridge-pump", daemon=True
        )
        self._accept_thread.start()
        self._pump_thread.start()
        logger.info("bridge listening on ws://%s:%d", self._host, self.port)

    def stop(self) -> None:
        if self._listener is None:
            return
        self._stopping.set()
        listener, self._listener = self._listener, None
        try:
            listener.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            listener.close()
        except OSError:
            pass
        with self._clients_lock:
            clients = list(self._clients)
            self._clients.clear()
        for client in clients:
            client.close()
        for thread in (self._accept_thread, self._pump_thread):
            if thread is not None:
                thread.join(timeout=2.0)
        self._accept_thread = self._pump_thread = None
        if self._node is not None:
            self._node.shutdown()
            self._node = None
        logger.info("bridge stopped")

    @property
    def client_count(self) -> int:
        with self._clients_lock:
            return len(self._clients)

    # -- accept / per-client ------------------------------------------------

    def _accept_loop(self) -> None:
        while not self._stopping.is_set():
            listener = self._listener
            if listener is None:
                return
            try:
                sock, addr = listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return  # listener closed by stop()
            threading.Thread(
                target=self._serve_connection,
                args=(sock, addr),
                name=f"bridge-client-{addr[1]}",
                daemon=True,
            ).start()

    def _serve_connection(self, sock: socket.socket, addr: tuple) -> None:
        client: _Client | None = None
        try:
            sock.settimeout(10.0)
            stream = SocketStream(sock)
            head = stream.read_until(b"\r\n\r\n", limit=16384)
            request_line, headers = _parse_request(head)
            if headers.get("upgrade", "").lower() != "websocket":
                self._serve_http(sock, request_line)
                return
            key = headers.get("sec-websocket-key")
            if key is None:
                sock.sendall(b"HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n")
                return
            sock.sendall(
                (
                    "HTTP/1.1 101 Switching Protocols\r\n"
                    "Upgrade: websocket\r\n"
                    "Connection: Upgrade\r\n"
                    f"Sec-WebSocket-Accept: {handshake_accept(key)}\r\n\r\n"
                ).encode("ascii")
            )
            sock.settimeout(None)
            client = _Client(sock, addr)
            with self._clients_lock:
                self._clients.add(client)
            logger.debug("client %s connected", addr)
            self._client_loop(client, stream)
        except (OSError, ConnectionError, ProtocolError, ValueError) as exc:
            logger.debug("client %s dropped: %s", addr, exc)
        finally:
            if client is not None:
                with self._clients_lock:
                    self._clients.discard(client)
                client.close()
            else:
                try:
                    sock.close()
                except OSError:
                    pass

    def _client_loop(self, client: _Client, stream: SocketStream) -> None:
        frag_opcode: int | None = None
        frag = bytearray()
        while client.alive and not self._stopping.is_set():
            fin, opcode, masked, payload = read_frame(stream)
            if opcode in (OP_TEXT, OP_BINARY, OP_CONT) and not masked:
                raise ProtocolError("client data frames must be masked")
            if opcode in (OP_TEXT, OP_BINARY):
                if frag_opcode is not None:
                    raise ProtocolError("new message started inside a fragment")
                if fin:
                    self._deliver(client, opcode, payload)
                else:
                    frag_opcode = opcode
                    frag = bytearray(payload)
            elif opcode == OP_CONT:
                if frag_opcode is None:
                    raise ProtocolError("continuation frame without a start")
                frag += payload
                if len(frag) > MAX_MESSAGE_BYTES:
                    raise ProtocolError("fragmented message exceeds limit")
                if fin:
                    self._deliver(client, frag_opcode, bytes(frag))
                    frag_opcode = None
                    frag = bytearray()
            elif opcode == OP_PING:
                client.send_frame(OP_PONG, payload)
            elif opcode == OP_PONG:
                pass
            elif opcode == OP_CLOSE:
                client.send_frame(OP_CLOSE, payload[:2])
                return
            else:
                raise ProtocolError(f"unsupported opcode {opcode:#x}")

    def _deliver(self, client: _Client, opcode: int, payload: bytes) -> None:
        if opcode == OP_BINARY:
            client.send_json({"op": "error", "message": "binary frames are not used"})
            return
        try:
            text = payload.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError("text frame is not valid UTF-8") from exc
        self._handle_op(client, text)

    # -- protocol ops --------------------------------------------------------

    def _handle_op(self, client: _Client, text: str) -> None:
        try:
            obj = json.loads(text)
        except ValueError:
            client.send_json({"op": "error", "message": "message is not valid JSON"})
            return
        if not isinstance(obj, dict) or not isinstance(obj.get("op"), str):
            client.send_json({"op": "error", "message": "expected an object with an 'op' field"})
            return
        op = obj["op"]
        topic = obj.get("topic")
        if op in ("subscribe", "unsubscribe", "publish") and not isinstance(topic, str):
            client.send_json({"op": "error", "message": f"{op} needs a string 'topic'"})
            return

        if op == "subscribe":
            node = self._node
            if node is None:
                return
            sub = node.subscribe(topic, queue_depth=SUBSCRIPTION_DEPTH)
            if not client.add_subscription(topic, sub):
                client.send_json({"op": "error", "message": f"already subscribed to {topic}"})
        elif op == "unsubscribe":
            client.drop_subscription(topic)
        elif op == "publish":
            if topic != JOY_TOPIC:
                client.send_json(
                    {"op": "error", "message": f"publishing is limited to {JOY_TOPIC}"}
                )
                return
            try:
                joy = joy_from_json(obj.get("msg"))
            except (ValueError, TypeError) as exc:
                client.send_json({"op": "error", "message": f"bad /joy message: {exc}"})
                return
            self._joy_pub.publish(joy)
            self.joy_received += 1
        else:
            client.send_json({"op": "error", "message": f"unknown op {op!r}"})

    # -- outbound pump -------------------------------------------------------

    def _pump_loop(self) -> None:
        while not self._stopping.wait(self._pump_interval):
            self._pump_once()

    def _pump_once(self) -> None:
        with self._clients_lock:
            clients = list(self._clients)
        for client in clients:
            if not client.alive:
                with self._clients_lock:
                    self._clients.discard(client)
                client.close()
                continue
            for topic, sub in client.subscriptions():
                for env in sub.drain():
                    try:
                        body = msg_to_json(env.msg)
                    except TypeError:
                        logger.warning("no JSON encoding for messages on %s", topic)
                        client.drop_subscription(topic)
                        break
                    text = json.dumps(
                        {"topic": topic, "t": env.msg.stamp, "msg": body},
                        separators=(",", ":"),
                    )
                    if not client.send_text(text):
                        break
                    self.pushed += 1

    # -- plain HTTP ----------------------------------------------------------

    def _serve_http(self, sock: socket.socket, request_line: str) -> None:
        parts = request_line.split()
        if len(parts) < 2 or parts[0] != "GET":
            _http_response(sock, 405, b"method not allowed")
            return
        if self._static_dir is None:
            _http_response(sock, 404, b"this port serves websocket clients only")
            return
        raw_path = urllib.parse.urlsplit(parts[1]).path
        path = urllib.parse.unquote(raw_path)
        if path.endswith("/"):
            path += "index.html"
        full = os.path.realpath(os.path.join(self._static_dir, path.lstrip("/")))
        if full != self._static_dir and not full.startswith(self._static_dir + os.sep):
            _http_response(sock, 404, b"not found")
            return
        try:
            with open(full, "rb") as fh:
                body = fh.read()
        except (OSError, IsADirectoryError):
            _http_response(sock, 404, b"not found")
            return
        ctype = _CONTENT_TYPES.get(os.path.splitext(full)[1].lower(), "application/octet-stream")
        _http_response(sock, 200, body, content_type=ctype)


def _parse_request(head: bytes) -> tuple[str, dict[str, str]]:
    lines = head.decode("latin-1").split("\r\n")
    headers: dict[str, str] = {}
    for line in lines[1:]:
        if ":" in line:
            name, _, value = line.partition(":")
            headers[name.strip().lower()] = value.strip()
    return lines[0], headers


_STATUS_TEXT = {200: "OK", 404: "Not Found", 405: "Method Not Allowed"}


def _http_response(
    sock: socket.socket, status: int, body: bytes, *, content_type: str = "text/plain; charset=utf-8"
) -> None:
    head = (
        f"HTTP/1.1 {status} {_STATUS_TEXT.get(status, 'Error')}\r\n"
        f"Content-Type: {content_type}\r\n"
        f"Content-Length: {len(body)}\r\n"
        "Connection: close\r\n\r\n"
    )
    try:
        sock.sendall(head.encode("ascii") + body)
    except OSError:
        pass
