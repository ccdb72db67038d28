"""WebSocket bridge: framing, JSON codecs, and a live server over loopback."""

import base64
import json
import math
import os
import socket
import threading
import time
from dataclasses import replace
from types import SimpleNamespace

import pytest

from mirsim import bridge
from mirsim.bridge import (
    OP_CLOSE,
    OP_CONT,
    OP_PING,
    OP_PONG,
    OP_TEXT,
    BridgeServer,
    SocketStream,
    encode_frame,
    handshake_accept,
    joy_from_json,
    mask_payload,
    msg_to_json,
    read_frame,
)
from mirsim.bus import Bus, TopicSpec
from mirsim.config import default_config
from mirsim.msgs import (
    CameraFrameStub,
    EncoderPulse,
    FrameId,
    Heartbeat,
    ImuSample,
    JoyState,
    LaserScan,
    Quaternion,
    Vector3,
    VehicleControl,
)
from mirsim.session import SimSession


def wait_for(pred, timeout=3.0, interval=0.005):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if pred():
            return True
        time.sleep(interval)
    return pred()


def make_frame(opcode, payload, *, fin=True, mask=True):
    """Build a frame by hand so tests can control the FIN bit."""
    head = bytearray([(0x80 if fin else 0) | opcode])
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


class WsTestClient:
    """Minimal client side of the protocol, enough to exercise the server."""

    def __init__(self, port, host="127.0.0.1", timeout=5.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        key = base64.b64encode(os.urandom(16)).decode("ascii")
        request = (
            f"GET / HTTP/1.1\r\n"
            f"Host: {host}:{port}\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\n"
            "Sec-WebSocket-Version: 13\r\n\r\n"
        )
        self.sock.sendall(request.encode("ascii"))
        buf = b""
        while b"\r\n\r\n" not in buf:
            chunk = self.sock.recv(65536)
            if not chunk:
                raise ConnectionError("server closed during handshake")
            buf += chunk
        head, _, rest = buf.partition(b"\r\n\r\n")
        status = head.split(b"\r\n", 1)[0]
        assert b"101" in status, status
        assert handshake_accept(key).encode() in head
        self.stream = SocketStream(self.sock, rest)

    def send_raw(self, data):
        self.sock.sendall(data)

    def send_text(self, text, *, mask=True):
        self.sock.sendall(make_frame(OP_TEXT, text.encode("utf-8"), mask=mask))

    def send_json(self, obj):
        self.send_text(json.dumps(obj))

    def recv_frame(self, timeout=3.0):
        self.sock.settimeout(timeout)
        return read_frame(self.stream)

    def recv_json(self, timeout=3.0):
        """Next text frame as parsed JSON; skips pongs."""
        deadline = time.monotonic() + timeout
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError("no text frame arrived")
            fin, opcode, _, payload = self.recv_frame(timeout=remaining)
            if opcode == OP_TEXT and fin:
                return json.loads(payload.decode("utf-8"))
            if opcode == OP_CLOSE:
                raise ConnectionError("server sent close")

    def expect_silence(self, duration=0.3):
        try:
            self.recv_frame(timeout=duration)
        except (socket.timeout, TimeoutError):
            return True
        return False

    def close(self):
        try:
            self.sock.close()
        except OSError:
            pass


# ---------------------------------------------------------------------------
# framing primitives


class TestFraming:
    def test_accept_key_rfc_sample(self):
        # Worked example from the protocol document.
        assert handshake_accept("dGhlIHNhbXBsZSBub25jZQ==") == "s3pPLMBiTxaQ9kYGzzhZRbK+xOo="

    def test_short_text_frame_golden(self):
        assert encode_frame(OP_TEXT, b"hi") == b"\x81\x02hi"

    def test_mask_is_involutive(self):
        data = os.urandom(777)
        key = os.urandom(4)
        assert mask_payload(mask_payload(data, key), key) == data
        assert mask_payload(b"", key) == b""

    def test_medium_frame_uses_u16_length(self):
        frame = encode_frame(OP_TEXT, b"a" * 300)
        assert frame[1] == 126
        assert int.from_bytes(frame[2:4], "big") == 300

    def test_large_frame_uses_u64_length(self):
        frame = encode_frame(OP_TEXT, b"a" * 70000)
        assert frame[1] == 127
        assert int.from_bytes(frame[2:10], "big") == 70000

    def test_round_trip_through_stream(self):
        a, b = socket.socketpair()
        try:
            payload = json.dumps({"op": "subscribe", "topic": "/scan"}).encode()
            a.sendall(encode_frame(OP_TEXT, payload, mask=True))
            fin, opcode, masked, out = read_frame(SocketStream(b))
            assert (fin, opcode, masked, out) == (True, OP_TEXT, True, payload)
        finally:
            a.close()
            b.close()

    def test_oversized_frame_rejected(self):
        a, b = socket.socketpair()
        try:
            header = bytes([0x81, 127]) + (bridge.MAX_MESSAGE_BYTES + 1).to_bytes(8, "big")
            a.sendall(header)
            with pytest.raises(bridge.ProtocolError):
                read_frame(SocketStream(b))
        finally:
            a.close()
            b.close()


# ---------------------------------------------------------------------------
# JSON codecs


class TestCodecs:
    def test_vehicle_control(self):
        m = VehicleControl(steering=-0.5, throttle=1.0, stamp=2.5, seq=7)
        assert msg_to_json(m) == {"steering": -0.5, "throttle": 1.0, "stamp": 2.5, "seq": 7}

    def test_encoder_pulse(self):
        m = EncoderPulse(drive_count=1234, steer_count=-9, stamp=0.25, seq=3)
        assert msg_to_json(m) == {
            "drive_count": 1234,
            "steer_count": -9,
            "stamp": 0.25,
            "seq": 3,
        }

    def test_imu_sample_is_json_serializable(self):
        m = ImuSample(
            accel=Vector3(0.1, 0.0, 9.81),
            gyro=Vector3(0.0, 0.0, 0.2),
            mag=Vector3(1.0, 2.0, 3.0),
            orientation=Quaternion(1.0, 0.0, 0.0, 0.0),
            frame=FrameId.REP103,
            stamp=1.5,
        )
        out = msg_to_json(m)
        json.dumps(out)  # no enum or dataclass leaks
        assert out["accel"] == {"x": 0.1, "y": 0.0, "z": 9.81}
        assert out["orientation"]["w"] == 1.0
        assert out["frame"] == int(FrameId.REP103)

    def test_scan_ranges_are_plain_arrays(self):
        valid = tuple(i % 2 == 0 for i in range(360))
        ranges = tuple(1.0 + i / 360.0 if ok else 0.0 for i, ok in enumerate(valid))
        m = LaserScan(ranges=ranges, valid=valid, stamp=0.7)
        out = msg_to_json(m)
        assert isinstance(out["ranges"], list) and len(out["ranges"]) == 360
        assert out["valid"][:4] == [1, 0, 1, 0]
        assert out["angle_increment"] == pytest.approx(2.0 * math.pi / 360.0)
        assert out["range_max"] == 5.0

    def test_heartbeat_and_camera_and_joy(self):
        hb = Heartbeat(frames_ok=5, clamp_events=2, stamp=3.0, seq=2)
        out = msg_to_json(hb)
        assert out["frames_ok"] == 5 and out["clamp_events"] == 2 and out["seq"] == 2
        cam = CameraFrameStub(frame_index=17, stamp=1.7)
        assert msg_to_json(cam) == {"frame_index": 17, "stamp": 1.7}
        joy = JoyState(axes=(0.5, -1.0), buttons=(1, 0), stamp=0.1)
        assert msg_to_json(joy) == {"axes": [0.5, -1.0], "buttons": [1, 0], "stamp": 0.1}

    def test_unknown_type_raises(self):
        with pytest.raises(TypeError, match="no JSON encoding"):
            msg_to_json(object())

    def test_joy_from_json_round_trip(self):
        joy = joy_from_json({"axes": [0.25, -1], "buttons": [1], "stamp": 2.0})
        assert joy == JoyState(axes=(0.25, -1.0), buttons=(1,), stamp=2.0)

    def test_joy_from_json_defaults(self):
        joy = joy_from_json({"axes": [0.0, 0.0]})
        assert joy.buttons == () and joy.stamp == 0.0

    @pytest.mark.parametrize(
        "body",
        [
            None,
            "axes",
            {},
            {"axes": []},
            {"axes": "nope"},
            {"axes": [0.0], "buttons": 3},
            {"axes": [3.0]},  # out of range, rejected by the message type
        ],
    )
    def test_joy_from_json_rejects(self, body):
        with pytest.raises((ValueError, TypeError)):
            joy_from_json(body)


# ---------------------------------------------------------------------------
# live server


@pytest.fixture
def rig():
    bus = Bus()
    src = bus.node("input")
    joy_pub = src.advertise(TopicSpec("/joy", JoyState))
    mcu = bus.node("mcu")
    enc_pub = mcu.advertise(TopicSpec("/encoder_pulse", EncoderPulse))
    scan_pub = mcu.advertise(TopicSpec("/scan", LaserScan))
    server = BridgeServer(bus, joy_pub, port=0, pump_interval_s=0.01)
    server.start()
    r = SimpleNamespace(
        bus=bus, src=src, joy_pub=joy_pub, enc_pub=enc_pub, scan_pub=scan_pub, server=server
    )
    yield r
    server.stop()


def subscribed(rig, topic):
    """True once the bridge's subscription edge is visible in the graph."""
    return (topic, "bridge") in rig.bus.graph().edges


class TestServer:
    def test_port_zero_gets_a_real_port(self, rig):
        assert rig.server.port not in (None, 0)

    def test_subscribe_receives_push(self, rig):
        client = WsTestClient(rig.server.port)
        try:
            client.send_json({"op": "subscribe", "topic": "/encoder_pulse"})
            assert wait_for(lambda: subscribed(rig, "/encoder_pulse"))
            rig.enc_pub.publish(EncoderPulse(drive_count=80, steer_count=-3, stamp=0.5))
            push = client.recv_json()
            assert push == {
                "topic": "/encoder_pulse",
                "t": 0.5,
                "msg": {"drive_count": 80, "steer_count": -3, "stamp": 0.5, "seq": 0},
            }
        finally:
            client.close()

    def test_scan_push_carries_full_beam_array(self, rig):
        client = WsTestClient(rig.server.port)
        try:
            client.send_json({"op": "subscribe", "topic": "/scan"})
            assert wait_for(lambda: subscribed(rig, "/scan"))
            scan = LaserScan(
                ranges=tuple(2.0 for _ in range(360)),
                valid=tuple(True for _ in range(360)),
                stamp=1.25,
            )
            rig.scan_pub.publish(scan)
            push = client.recv_json()
            assert push["topic"] == "/scan" and push["t"] == 1.25
            assert len(push["msg"]["ranges"]) == 360
            assert all(r == 2.0 for r in push["msg"]["ranges"])
        finally:
            client.close()

    def test_publish_joy_reaches_bus(self, rig):
        listener = rig.bus.node("listener").subscribe("/joy", queue_depth=8)
        client = WsTestClient(rig.server.port)
        try:
            client.send_json(
                {"op": "publish", "topic": "/joy", "msg": {"axes": [0.25, -1.0], "buttons": [1]}}
            )
            assert wait_for(lambda: rig.server.joy_received == 1)
            envs = listener.drain()
            assert len(envs) == 1
            assert envs[0].msg == JoyState(axes=(0.25, -1.0), buttons=(1,), stamp=0.0)
        finally:
            client.close()

    def test_publish_restricted_to_joy(self, rig):
        client = WsTestClient(rig.server.port)
        try:
            client.send_json(
                {"op": "publish", "topic": "/vehicle_control", "msg": {"steering": 0, "throttle": 1}}
            )
            err = client.recv_json()
            assert err["op"] == "error" and "/joy" in err["message"]
            # connection survives the rejection
            client.send_json({"op": "subscribe", "topic": "/encoder_pulse"})
            assert wait_for(lambda: subscribed(rig, "/encoder_pulse"))
        finally:
            client.close()

    @pytest.mark.parametrize(
        "raw,needle",
        [
            ("{not json", "valid JSON"),
            ('["array"]', "'op' field"),
            ('{"op": "teleport"}', "unknown op"),
            ('{"op": "subscribe"}', "topic"),
            ('{"op": "publish", "topic": "/joy", "msg": {"axes": [9]}}', "bad /joy"),
        ],
    )
    def test_bad_requests_get_error_replies(self, rig, raw, needle):
        client = WsTestClient(rig.server.port)
        try:
            client.send_text(raw)
            err = client.recv_json()
            assert err["op"] == "error"
            assert needle in err["message"]
        finally:
            client.close()

    def test_ping_gets_pong_with_payload(self, rig):
        client = WsTestClient(rig.server.port)
        try:
            client.send_raw(make_frame(OP_PING, b"tick"))
            fin, opcode, _, payload = client.recv_frame()
            assert (fin, opcode, payload) == (True, OP_PONG, b"tick")
        finally:
            client.close()

    def test_fragmented_message_is_reassembled(self, rig):
        client = WsTestClient(rig.server.port)
        try:
            text = json.dumps({"op": "subscribe", "topic": "/encoder_pulse"}).encode()
            client.send_raw(make_frame(OP_TEXT, text[:10], fin=False))
            client.send_raw(make_frame(OP_CONT, text[10:], fin=True))
            assert wait_for(lambda: subscribed(rig, "/encoder_pulse"))
        finally:
            client.close()

    def test_unmasked_data_frame_drops_connection(self, rig):
        client = WsTestClient(rig.server.port)
        try:
            client.send_text('{"op": "subscribe", "topic": "/scan"}', mask=False)
            with pytest.raises((ConnectionError, OSError)):
                # Server tears the socket down; depending on timing we see a
                # close frame first or a reset.
                for _ in range(3):
                    fin, opcode, _, _ = client.recv_frame(timeout=2.0)
                    if opcode == OP_CLOSE:
                        raise ConnectionError("closed")
        finally:
            client.close()

    def test_two_clients_both_receive(self, rig):
        c1 = WsTestClient(rig.server.port)
        c2 = WsTestClient(rig.server.port)
        try:
            c1.send_json({"op": "subscribe", "topic": "/encoder_pulse"})
            c2.send_json({"op": "subscribe", "topic": "/encoder_pulse"})
            assert wait_for(lambda: rig.server.client_count == 2)
            assert wait_for(lambda: subscribed(rig, "/encoder_pulse"))
            # Both clients must hold live subscriptions before publishing;
            # the graph edge alone collapses duplicates, so give the second
            # subscribe a moment to land.
            time.sleep(0.1)
            rig.enc_pub.publish(EncoderPulse(drive_count=1, steer_count=0, stamp=0.1))
            p1 = c1.recv_json()
            p2 = c2.recv_json()
            assert p1 == p2
            assert p1["msg"]["drive_count"] == 1
        finally:
            c1.close()
            c2.close()

    def test_unsubscribe_stops_pushes(self, rig):
        client = WsTestClient(rig.server.port)
        try:
            client.send_json({"op": "subscribe", "topic": "/encoder_pulse"})
            assert wait_for(lambda: subscribed(rig, "/encoder_pulse"))
            rig.enc_pub.publish(EncoderPulse(drive_count=1, steer_count=0, stamp=0.1))
            assert client.recv_json()["msg"]["drive_count"] == 1
            client.send_json({"op": "unsubscribe", "topic": "/encoder_pulse"})
            assert wait_for(lambda: not subscribed(rig, "/encoder_pulse"))
            rig.enc_pub.publish(EncoderPulse(drive_count=2, steer_count=0, stamp=0.2))
            assert client.expect_silence(0.3)
        finally:
            client.close()

    def test_disconnect_prunes_client_and_freezes_counters(self, rig):
        listener = rig.bus.node("listener").subscribe("/joy", queue_depth=32)
        client = WsTestClient(rig.server.port)
        client.send_json({"op": "publish", "topic": "/joy", "msg": {"axes": [0.0, 1.0]}})
        client.send_json({"op": "publish", "topic": "/joy", "msg": {"axes": [0.0, 0.5]}})
        assert wait_for(lambda: rig.server.joy_received == 2)
        client.close()
        assert wait_for(lambda: rig.server.client_count == 0)
        # Nothing arrives on /joy once the peer is gone.
        listener.drain()
        time.sleep(0.2)
        assert rig.server.joy_received == 2
        assert listener.drain() == []

    def test_stop_removes_node_and_closes_clients(self, rig):
        client = WsTestClient(rig.server.port)
        rig.server.stop()
        assert "bridge" not in rig.bus.graph().nodes
        with pytest.raises((ConnectionError, OSError)):
            for _ in range(3):
                fin, opcode, _, _ = client.recv_frame(timeout=2.0)
                if opcode == OP_CLOSE:
                    raise ConnectionError("closed")
        client.close()


# ---------------------------------------------------------------------------
# plain HTTP on the same port


def http_get(port, path, host="127.0.0.1"):
    sock = socket.create_connection((host, port), timeout=5.0)
    try:
        sock.sendall(f"GET {path} HTTP/1.1\r\nHost: {host}\r\n\r\n".encode())
        buf = b""
        while True:
            chunk = sock.recv(65536)
            if not chunk:
                break
            buf += chunk
        head, _, body = buf.partition(b"\r\n\r\n")
        status = int(head.split(b" ", 2)[1])
        headers = {}
        for line in head.split(b"\r\n")[1:]:
            name, _, value = line.partition(b":")
            headers[name.strip().lower().decode()] = value.strip().decode()
        return status, headers, body
    finally:
        sock.close()


class TestStaticServing:
    @pytest.fixture
    def static_rig(self, tmp_path):
        (tmp_path / "index.html").write_text("<h1>dash</h1>")
        (tmp_path / "app.js").write_text("console.log('hi')")
        bus = Bus()
        joy_pub = bus.node("input").advertise(TopicSpec("/joy", JoyState))
        server = BridgeServer(bus, joy_pub, port=0, static_dir=str(tmp_path))
        server.start()
        yield server
        server.stop()

    def test_root_serves_index(self, static_rig):
        status, headers, body = http_get(static_rig.port, "/")
        assert status == 200
        assert headers["content-type"].startswith("text/html")
        assert body == b"<h1>dash</h1>"

    def test_js_content_type(self, static_rig):
        status, headers, body = http_get(static_rig.port, "/app.js")
        assert status == 200
        assert headers["content-type"].startswith("text/javascript")

    def test_missing_file_404(self, static_rig):
        status, _, _ = http_get(static_rig.port, "/nope.html")
        assert status == 404

    def test_path_traversal_blocked(self, static_rig):
        status, _, _ = http_get(static_rig.port, "/../../etc/passwd")
        assert status == 404
        status, _, _ = http_get(static_rig.port, "/%2e%2e/%2e%2e/etc/passwd")
        assert status == 404

    def test_no_static_dir_is_404(self):
        bus = Bus()
        joy_pub = bus.node("input").advertise(TopicSpec("/joy", JoyState))
        server = BridgeServer(bus, joy_pub, port=0)
        server.start()
        try:
            status, _, body = http_get(server.port, "/")
            assert status == 404
        finally:
            server.stop()

    def test_non_get_rejected(self, static_rig):
        sock = socket.create_connection(("127.0.0.1", static_rig.port), timeout=5.0)
        try:
            sock.sendall(b"POST / HTTP/1.1\r\nHost: x\r\n\r\n")
            buf = sock.recv(65536)
            assert b"405" in buf.split(b"\r\n", 1)[0]
        finally:
            sock.close()


# ---------------------------------------------------------------------------
# end to end through a live session


def free_port():
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


class TestLiveSession:
    def test_browser_style_drive_loop(self):
        """Connect, stream telemetry, and drive the vehicle over the socket."""
        cfg = replace(default_config(), bridge_port=free_port(), realtime=True)
        sess = SimSession(cfg, headless=False)
        client = None
        try:
            client = WsTestClient(cfg.bridge_port)
            client.send_json({"op": "subscribe", "topic": "/encoder_pulse"})
            client.send_json({"op": "subscribe", "topic": "/scan"})
            assert wait_for(lambda: ("/scan", "bridge") in sess.bus.graph().edges)

            runner = threading.Thread(target=lambda: sess.run_for(1.2))
            runner.start()
            for _ in range(8):
                client.send_json(
                    {"op": "publish", "topic": "/joy", "msg": {"axes": [0.0, 1.0]}}
                )
                time.sleep(0.1)
            runner.join(timeout=10.0)
            assert not runner.is_alive()

            # Full throttle for most of the window: the vehicle must be moving.
            assert sess.plant.state.speed > 0.3

            counts = []
            saw_scan = False
            while True:
                try:
                    push = client.recv_json(timeout=0.3)
                except (TimeoutError, socket.timeout):
                    break
                if push.get("topic") == "/encoder_pulse":
                    counts.append(push["msg"]["drive_count"])
                elif push.get("topic") == "/scan":
                    saw_scan = True
                    assert len(push["msg"]["ranges"]) == 360
            assert counts and counts[-1] > 0
            assert counts == sorted(counts)
            assert saw_scan
            assert sess.bridge.joy_received == 8
        finally:
            if client is not None:
                client.close()
            sess.shutdown()

    def test_configured_static_dir_is_served(self, tmp_path):
        (tmp_path / "index.html").write_text("<h1>dashboard</h1>")
        cfg = replace(
            default_config(),
            bridge_port=free_port(),
            realtime=True,
            static_dir=str(tmp_path),
        )
        sess = SimSession(cfg, headless=False)
        try:
            status, headers, body = http_get(cfg.bridge_port, "/")
            assert status == 200
            assert b"dashboard" in body
        finally:
            sess.shutdown()
