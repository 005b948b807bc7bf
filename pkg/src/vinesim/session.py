"""Streaming operator sessions over TCP.

One listening port accepts two client dialects, sniffed from the first byte:

* raw newline-delimited JSON (telnet/netcat/tooling friendly), and
* RFC 6455 WebSocket text frames (browser consoles), one JSON message per
  frame, newline-terminated.

Each connection owns an isolated simulator: commands share the scenario
action vocabulary, every state-changing command is answered with an ack plus
a fresh snapshot, and an internal clock advances the machine at a fixed
simulated rate (default 20 Hz). Snapshot shapes are always solved from a cold
start so a `preview` request and a committed command produce bit-identical
payloads for the same pressure pattern. See docs/wire-protocol.md.
"""

from __future__ import annotations

import base64
import hashlib
import json
import socket
import struct
import threading
import time
from dataclasses import dataclass

from .config import RobotConfiguration, get_robot
from .errors import VinesimError
from .growth import GrowthEvent, GrowthPhase, GrowthState, phase_transition_events
from .growth import step_growth, step_retraction
from .mechanics import PressureLimits, PressureState, TendonState
from .solver import assemble_chain, solve_equilibrium

FORMAT_VERSION = 1
_TENDON_IDS = (1, 2, 3, 4)
_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


def _encode(message: dict) -> str:
    return json.dumps(message, sort_keys=True, separators=(",", ":")) + "\n"


class SessionEngine:
    """Simulator state behind one operator session. Single-owner, not thread-safe."""

    def __init__(self, config: RobotConfiguration, dt: float = 0.05):
        self.config = config
        self.dt = dt
        self.limits = PressureLimits()
        self.state = GrowthState.idle()
        self.pressures = PressureState(0.0, {jid: 0.0 for jid in config.joint_ids})
        self.tensions = {tid: 0.0 for tid in _TENDON_IDS}
        self.payload = 0.0
        self.pull_tension: float | None = None
        self.time_scale = 1
        self.fault: str | None = None
        self._pending_events: list[GrowthEvent] = []

    # -- commands ----------------------------------------------------------

    def apply_command(self, message: dict) -> tuple[dict, bool]:
        """Returns (reply, state_changed). Malformed input yields an error reply."""
        verb = message.get("verb")
        t = self.state.elapsed
        try:
            if verb == "ping":
                return {"type": "pong", "t": t}, False
            if verb == "set_time_scale":
                scale = int(self._value(message))
                if not 1 <= scale <= 1000:
                    raise VinesimError("time scale must lie in 1..1000")
                self.time_scale = scale
                return self._ack(verb), False
            if verb == "step":
                steps = int(message.get("value", 1))
                if not 1 <= steps <= 100_000:
                    raise VinesimError("step count must lie in 1..100000")
                self.advance(steps)
                return self._ack(verb), True
            if verb == "set_trunk_pressure":
                self.pressures = self.pressures.with_trunk(self._value(message))
                return self._ack(verb), True
            if verb == "set_joint_pressure":
                jid = int(message.get("target", -1))
                if jid not in self.config.joint_ids:
                    raise VinesimError(f"unknown joint {jid}")
                value = self._value(message)
                if value >= self.limits.burst_standalone:
                    raise VinesimError(
                        f"blocked: {value:.0f} Pa is at or above the "
                        f"{self.limits.burst_standalone:.0f} Pa burst limit"
                    )
                self.pressures = self.pressures.with_joint(jid, value)
                reply = self._ack(verb)
                if value > self.limits.operating:
                    reply["warning"] = (
                        f"joint {jid} above the {self.limits.operating:.0f} Pa operating limit"
                    )
                return reply, True
            if verb == "set_tendon_tension":
                tid = int(message.get("target", -1))
                if tid not in _TENDON_IDS:
                    raise VinesimError(f"unknown tendon {tid}")
                self.tensions[tid] = self._value(message)
                return self._ack(verb), True
            if verb == "pull_tail":
                self.pull_tension = self._value(message)
                return self._ack(verb), True
            if verb == "attach_payload":
                self.payload = self._value(message)
                return self._ack(verb), True
            if verb == "preview":
                return self.preview(message.get("value") or {}), False
            raise VinesimError(f"unknown verb {verb!r}")
        except (VinesimError, TypeError, ValueError) as exc:
            return {"type": "error", "verb": verb, "message": str(exc), "t": t}, False

    @staticmethod
    def _value(message: dict) -> float:
        value = float(message.get("value", 0.0))
        if value < 0:
            raise VinesimError("value must be non-negative")
        return value

    def _ack(self, verb: str) -> dict:
        return {"type": "ack", "verb": verb, "t": self.state.elapsed}

    # -- time --------------------------------------------------------------

    def advance(self, steps: int = 1):
        if self.fault is not None:
            return
        for _ in range(steps):
            previous = self.state
            try:
                if self.pull_tension is not None:
                    self.state = step_retraction(
                        previous,
                        self.config,
                        self.pull_tension,
                        self.pressures.trunk_pressure,
                        self.dt,
                        self.pressures.joint_pressures,
                    )
                else:
                    self.state = step_growth(
                        previous, self.config, self.pressures.trunk_pressure, self.dt
                    )
            except VinesimError as exc:
                self.fault = f"{type(exc).__name__}: {exc}"
                self._pending_events.append(
                    GrowthEvent(
                        t=previous.elapsed,
                        kind="fault",
                        detail=self.fault,
                        length=previous.deployed_length,
                        trunk_pressure=self.pressures.trunk_pressure,
                    )
                )
                return
            self._pending_events.extend(
                phase_transition_events(previous, self.state, self.pressures.trunk_pressure)
            )

    # -- snapshots ---------------------------------------------------------

    def _solve_payload(
        self,
        pressures: PressureState,
        tensions: dict,
        payload: float,
        deployed: float,
    ) -> dict:
        chain = assemble_chain(self.config, pressures, deployed)
        if chain.n == 0:
            return {
                "shape": None,
                "tip": {"x": 0.0, "y": self.config.base_height, "deflection_m": 0.0},
                "localization_index": 0.0,
                "buckling": False,
            }
        shape = solve_equilibrium(
            chain,
            tendons=TendonState(tensions, self.config.tendon_radial_offset),
            payload_mass=payload,
        )
        deflection = 0.0
        if payload > 0 or any(v > 0 for v in tensions.values()):
            reference = solve_equilibrium(chain)
            deflection = reference.tip_position[1] - shape.tip_position[1]
        return {
            "shape": {
                "s": list(shape.s),
                "x": list(shape.x),
                "y": list(shape.y),
                "heading": list(shape.heading),
                "kappa": list(shape.kappa),
                "element": list(shape.sub_element),
            },
            "tip": {
                "x": shape.tip_position[0],
                "y": shape.tip_position[1],
                "deflection_m": deflection,
            },
            "localization_index": shape.localization_index,
            "buckling": shape.buckling,
        }

    def snapshot(self) -> dict:
        solved = self._solve_payload(
            self.pressures, self.tensions, self.payload, self.state.deployed_length
        )
        events = [
            {
                "t": e.t,
                "kind": e.kind,
                "detail": e.detail,
                "length_m": e.length,
                "p_t_pa": e.trunk_pressure,
            }
            for e in self._pending_events
        ]
        self._pending_events = []
        return {
            "type": "snapshot",
            "t": self.state.elapsed,
            "phase": self.state.phase.value,
            "deployed_length_m": self.state.deployed_length,
            "active_joint": self.state.active_joint_index,
            "pressures": {
                "trunk_pa": self.pressures.trunk_pressure,
                "joints_pa": {str(j): self.pressures.joint(j) for j in self.config.joint_ids},
            },
            "tensions_n": {str(t): self.tensions[t] for t in _TENDON_IDS},
            "payload_kg": self.payload,
            "pull_tension_n": self.pull_tension,
            "flags": {
                "insufficient_tension": self.state.insufficient_tension,
                "stalled": self.state.phase == GrowthPhase.STALLED,
                "buckling": solved["buckling"],
                "fault": self.fault,
            },
            "shape": solved["shape"],
            "tip": solved["tip"],
            "localization_index": solved["localization_index"],
            "events": events,
        }

    def preview(self, pattern: dict) -> dict:
        """Non-committal solve of a hypothetical actuation pattern."""
        pressures = self.pressures
        if "trunk_pa" in pattern:
            pressures = pressures.with_trunk(float(pattern["trunk_pa"]))
        for key, value in (pattern.get("joints_pa") or {}).items():
            jid = int(key)
            if jid not in self.config.joint_ids:
                raise VinesimError(f"unknown joint {jid}")
            pressures = pressures.with_joint(jid, float(value))
        tensions = dict(self.tensions)
        for key, value in (pattern.get("tensions_n") or {}).items():
            tid = int(key)
            if tid not in _TENDON_IDS:
                raise VinesimError(f"unknown tendon {tid}")
            tensions[tid] = float(value)
        payload = float(pattern.get("payload_kg", self.payload))
        try:
            solved = self._solve_payload(
                pressures, tensions, payload, self.state.deployed_length
            )
        except VinesimError as exc:
            return {
                "type": "preview_error",
                "message": f"{type(exc).__name__}: {exc}",
                "t": self.state.elapsed,
            }
        return {
            "type": "preview",
            "t": self.state.elapsed,
            "shape": solved["shape"],
            "tip": solved["tip"],
            "localization_index": solved["localization_index"],
            "buckling": solved["buckling"],
        }

    def hello(self) -> dict:
        table = self.config.calibration_table
        return {
            "type": "hello",
            "format_version": FORMAT_VERSION,
            "t": 0.0,
            "robot": {
                "name": self.config.name,
                "construction": self.config.construction.value,
                "total_length_m": self.config.total_length,
                "base_height_m": self.config.base_height,
                "trunk_diameter_m": self.config.trunk_diameter,
                "joints": [
                    {"id": info.joint_id, "start_m": info.start, "end_m": info.end}
                    for info in self.config.joints()
                ],
            },
            "limits": {
                "operating_pa": self.limits.operating,
                "burst_standalone_pa": self.limits.burst_standalone,
                "burst_confined_pa": self.limits.burst_confined,
                "p_init_pa": table.p_init,
                "p_grow_pa": table.p_grow,
                "p_crossing_pa": table.p_crossing,
            },
            "dt_s": self.dt,
        }


# --------------------------------------------------------------------------
# Transports
# --------------------------------------------------------------------------


class _NdjsonTransport:
    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.buffer = b""

    def feed(self, data: bytes) -> list[str]:
        self.buffer += data
        messages = []
        while b"\n" in self.buffer:
            line, self.buffer = self.buffer.split(b"\n", 1)
            line = line.strip()
            if line:
                messages.append(line.decode("utf-8", errors="replace"))
        return messages

    def send(self, text: str):
        self.sock.sendall(text.encode("utf-8"))


class _WebSocketTransport:
    """Server side of RFC 6455 for small text messages (no fragmentation)."""

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.buffer = b""
        self.closed = False

    def handshake(self, initial: bytes):
        data = initial
        while b"\r\n\r\n" not in data:
            chunk = self.sock.recv(4096)
            if not chunk:
                raise ConnectionError("client closed during handshake")
            data += chunk
        head, _, rest = data.partition(b"\r\n\r\n")
        self.buffer = rest
        key = None
        for line in head.split(b"\r\n")[1:]:
            name, _, value = line.partition(b":")
            if name.strip().lower() == b"sec-websocket-key":
                key = value.strip().decode()
        if key is None:
            raise ConnectionError("missing Sec-WebSocket-Key")
        accept = base64.b64encode(
            hashlib.sha1((key + _WS_GUID).encode()).digest()
        ).decode()
        self.sock.sendall(
            (
                "HTTP/1.1 101 Switching Protocols\r\n"
                "Upgrade: websocket\r\n"
                "Connection: Upgrade\r\n"
                f"Sec-WebSocket-Accept: {accept}\r\n\r\n"
            ).encode()
        )

    def feed(self, data: bytes) -> list[str]:
        self.buffer += data
        messages = []
        while True:
            frame = self._try_parse_frame()
            if frame is None:
                break
            opcode, payload = frame
            if opcode == 0x8:  # close
                self.closed = True
                try:
                    self.sock.sendall(self._frame(0x8, b""))
                except OSError:
                    pass
                break
            if opcode == 0x9:  # ping
                self.sock.sendall(self._frame(0xA, payload))
                continue
            if opcode == 0x1:
                messages.append(payload.decode("utf-8", errors="replace").strip())
        return messages

    def _try_parse_frame(self):
        buf = self.buffer
        if len(buf) < 2:
            return None
        opcode = buf[0] & 0x0F
        masked = bool(buf[1] & 0x80)
        length = buf[1] & 0x7F
        offset = 2
        if length == 126:
            if len(buf) < 4:
                return None
            length = struct.unpack(">H", buf[2:4])[0]
            offset = 4
        elif length == 127:
            if len(buf) < 10:
                return None
            length = struct.unpack(">Q", buf[2:10])[0]
            offset = 10
        mask = b""
        if masked:
            if len(buf) < offset + 4:
                return None
            mask = buf[offset : offset + 4]
            offset += 4
        if len(buf) < offset + length:
            return None
        payload = buf[offset : offset + length]
        if masked:
            payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        self.buffer = buf[offset + length :]
        return opcode, payload

    @staticmethod
    def _frame(opcode: int, payload: bytes) -> bytes:
        header = bytes([0x80 | opcode])
        n = len(payload)
        if n < 126:
            header += bytes([n])
        elif n < 65536:
            header += bytes([126]) + struct.pack(">H", n)
        else:
            header += bytes([127]) + struct.pack(">Q", n)
        return header + payload

    def send(self, text: str):
        if not self.closed:
            self.sock.sendall(self._frame(0x1, text.encode("utf-8")))


# --------------------------------------------------------------------------
# Server
# --------------------------------------------------------------------------


@dataclass
class ServerOptions:
    robot: str = "shape_demo"
    host: str = "127.0.0.1"
    snapshot_hz: float = 20.0
    real_time: bool = True


class SessionServer:
    """Accepts any number of concurrent sessions, one isolated simulator each."""

    def __init__(self, port: int = 0, options: ServerOptions | None = None):
        self.options = options or ServerOptions()
        self._requested_port = port
        self._listener: socket.socket | None = None
        self._threads: list[threading.Thread] = []
        self._running = False

    @property
    def port(self) -> int:
        if self._listener is None:
            raise RuntimeError("server not started")
        return self._listener.getsockname()[1]

    def start(self) -> "SessionServer":
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self.options.host, self._requested_port))
        listener.listen(16)
        listener.settimeout(0.2)
        self._listener = listener
        self._running = True
        thread = threading.Thread(target=self._accept_loop, daemon=True)
        thread.start()
        self._threads.append(thread)
        return self

    def close(self):
        self._running = False
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass
        for thread in self._threads:
            thread.join(timeout=2.0)

    def _accept_loop(self):
        assert self._listener is not None
        while self._running:
            try:
                sock, _ = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            thread = threading.Thread(target=self._serve_client, args=(sock,), daemon=True)
            thread.start()
            self._threads.append(thread)

    def _serve_client(self, sock: socket.socket):
        try:
            # WebSocket clients speak first (the HTTP upgrade request); raw
            # NDJSON clients may silently wait for the hello. Sniff briefly,
            # then default to NDJSON.
            sock.settimeout(0.25)
            try:
                first = sock.recv(1, socket.MSG_PEEK)
                if not first:
                    return
            except socket.timeout:
                first = b""
            if first == b"G":
                sock.settimeout(10.0)
                transport = _WebSocketTransport(sock)
                transport.handshake(b"")
            else:
                transport = _NdjsonTransport(sock)
            engine = SessionEngine(get_robot(self.options.robot))
            transport.send(_encode(engine.hello()))
            transport.send(_encode(engine.snapshot()))
            interval = 1.0 / self.options.snapshot_hz
            next_tick = time.monotonic() + interval
            while self._running:
                if getattr(transport, "closed", False):
                    break
                timeout = max(0.01, next_tick - time.monotonic()) if self.options.real_time else 0.05
                sock.settimeout(timeout)
                data = b""
                try:
                    data = sock.recv(65536)
                    if not data:
                        break
                except socket.timeout:
                    pass
                except OSError:
                    break
                for text in transport.feed(data) if data else []:
                    try:
                        message = json.loads(text)
                    except json.JSONDecodeError as exc:
                        transport.send(
                            _encode({"type": "error", "message": f"malformed JSON: {exc.msg}"})
                        )
                        continue
                    reply, changed = engine.apply_command(message)
                    transport.send(_encode(reply))
                    if changed:
                        transport.send(_encode(engine.snapshot()))
                if self.options.real_time and time.monotonic() >= next_tick:
                    engine.advance(engine.time_scale)
                    transport.send(_encode(engine.snapshot()))
                    next_tick += interval
                    if next_tick < time.monotonic() - 1.0:
                        next_tick = time.monotonic() + interval
        except (ConnectionError, OSError):
            pass
        finally:
            try:
                sock.close()
            except OSError:
                pass


def serve_session(port: int, options: ServerOptions | None = None) -> SessionServer:
    """Start the session service; raises OSError if the port is taken."""
    return SessionServer(port, options).start()
