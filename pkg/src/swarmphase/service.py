"""Interactive lattice session over a WebSocket wire.

One simulation runs continuously inside a single asyncio loop; operator
commands are queued and applied between iterations, so the sequential
scheduler semantics are untouched.  Every applied command is logged with its
iteration, which makes a session replayable as a timed scenario schedule
through the exact same stepping code.

The wire is plain RFC 6455 text frames (one JSON message per frame), small
enough to implement here and reachable from any browser.
"""

from __future__ import annotations

import asyncio
import base64
import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .errors import ScenarioViolation
from .lattice import FoodEvent, apply_food_event, foraging_world, LatticeWorld, snapshot, snapshot_json
from .rng import RngStream, trial_seed
from .scenarios import Scenario

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


# ---------------------------------------------------------------------------
# Frame plumbing
# ---------------------------------------------------------------------------

async def _ws_handshake(reader, writer) -> bool:
    try:
        request = await reader.readuntil(b"\r\n\r\n")
    except (asyncio.IncompleteReadError, ConnectionResetError):
        return False  # probe connections may vanish before the handshake
    headers = {}
    for line in request.decode("latin-1").split("\r\n")[1:]:
        if ":" in line:
            k, v = line.split(":", 1)
            headers[k.strip().lower()] = v.strip()
    key = headers.get("sec-websocket-key")
    if key is None:
        writer.write(b"HTTP/1.1 400 Bad Request\r\n\r\n")
        await writer.drain()
        return False
    accept = base64.b64encode(
        hashlib.sha1((key + _WS_GUID).encode("latin-1")).digest()).decode("latin-1")
    writer.write(("HTTP/1.1 101 Switching Protocols\r\n"
                  "Upgrade: websocket\r\n"
                  "Connection: Upgrade\r\n"
                  f"Sec-WebSocket-Accept: {accept}\r\n\r\n").encode("latin-1"))
    await writer.drain()
    return True


def _encode_text_frame(payload: bytes) -> bytes:
    length = len(payload)
    if length < 126:
        header = struct.pack("!BB", 0x81, length)
    elif length < (1 << 16):
        header = struct.pack("!BBH", 0x81, 126, length)
    else:
        header = struct.pack("!BBQ", 0x81, 127, length)
    return header + payload


async def _read_frame(reader):
    """Returns (opcode, payload) or None on close/EOF."""
    try:
        head = await reader.readexactly(2)
    except (asyncio.IncompleteReadError, ConnectionResetError):
        return None
    opcode = head[0] & 0x0F
    masked = head[1] & 0x80
    length = head[1] & 0x7F
    if length == 126:
        length = struct.unpack("!H", await reader.readexactly(2))[0]
    elif length == 127:
        length = struct.unpack("!Q", await reader.readexactly(8))[0]
    mask = await reader.readexactly(4) if masked else b"\x00\x00\x00\x00"
    payload = bytearray(await reader.readexactly(length))
    if masked:
        for i in range(length):
            payload[i] ^= mask[i % 4]
    if opcode == 0x8:
        return None
    return opcode, bytes(payload)


# ---------------------------------------------------------------------------
# Session
# ---------------------------------------------------------------------------

@dataclass
class SessionState:
    scenario: Scenario
    stride: int = 1000
    speed_ips: float = 200_000.0
    paused: bool = False
    subscribers: list = field(default_factory=list)
    command_log: list = field(default_factory=list)
    seed: int = 0

    def __post_init__(self):
        self.reset(self.scenario.seed)

    def reset(self, seed: int) -> None:
        sc = self.scenario
        self.seed = seed
        self.rng = RngStream(trial_seed(seed, 0))
        self.lattice = LatticeWorld(sc.side, sc.n, sc.params, lam=sc.lam)
        if sc.init == "random":
            self.lattice.place_agents_random(self.rng)
        elif sc.init == "blob":
            self.lattice.place_agents_blob()
        else:
            self.lattice.place_agents_at(sc.init)
        self.world = foraging_world(self.lattice)
        self.rng_state = self.rng.state_array()
        self.counters = np.array([self.world.aware_count(), 0], dtype=np.int64)
        self.wz = np.zeros(sc.n, dtype=np.uint8)
        self.scratch = np.zeros(64, dtype=np.int32)
        self.tick = 0

    def current_snapshot(self) -> dict:
        return snapshot(self.lattice, self.world.states, self.tick)

    def run_chunk(self, iters: int) -> None:
        if iters <= 0:
            return
        used, _, _, _ = _accel.lattice_run(
            self.lattice.grid, self.lattice.pos, self.world.states,
            self.lattice.food, self.lattice.nbr,
            self.scenario.params.p, float(self.scenario.params.delta_max),
            self.lattice.lam_pow, self.rng_state, iters, 0,
            self.counters, self.wz, self.scratch, False)
        self.tick += int(used)
        self.world.iteration = self.tick

    def replay_schedule(self) -> list:
        """The logged command sequence as timed scenario schedule entries."""
        out = []
        for (tick, cmd) in self.command_log:
            kind = cmd["type"]
            if kind == "place_food":
                out.append({"t": tick, "action": "place", "site": [cmd["q"], cmd["r"]]})
            elif kind == "remove_food":
                out.append({"t": tick, "action": "remove", "site": [cmd["q"], cmd["r"]]})
            elif kind == "shift_food":
                out.append({"t": tick, "action": "shift",
                            "site": list(cmd["from"]), "to": list(cmd["to"])})
            elif kind == "set_lambda":
                out.append({"t": tick, "action": "set_lambda", "value": cmd["value"]})
        return out

    # -- command execution (between iterations only) --------------------------

    def apply_command(self, cmd: dict) -> dict:
        kind = cmd.get("type")
        side = self.scenario.side

        def check_site(q, r):
            if not (0 <= q < side and 0 <= r < side):
                raise ScenarioViolation(
                    f"site ({q},{r}) outside the {side}x{side} lattice")

        if kind == "place_food":
            q, r = int(cmd["q"]), int(cmd["r"])
            check_site(q, r)
            apply_food_event(self.lattice, FoodEvent(self.tick, "place", (q, r)))
        elif kind == "remove_food":
            q, r = int(cmd["q"]), int(cmd["r"])
            check_site(q, r)
            apply_food_event(self.lattice, FoodEvent(self.tick, "remove", (q, r)))
        elif kind == "shift_food":
            fq, fr = (int(x) for x in cmd["from"])
            tq, tr = (int(x) for x in cmd["to"])
            check_site(fq, fr)
            check_site(tq, tr)
            apply_food_event(self.lattice, FoodEvent(self.tick, "shift", (fq, fr), (tq, tr)))
        elif kind == "pause":
            self.paused = True
        elif kind == "resume":
            self.paused = False
        elif kind == "set_speed":
            ips = float(cmd["ips"])
            if ips <= 0:
                raise ScenarioViolation("ips must be positive")
            self.speed_ips = ips
        elif kind == "set_lambda":
            self.lattice.lam = float(cmd["value"])
        elif kind == "set_seed_reset":
            self.reset(int(cmd["seed"]))
            self.command_log.clear()
        else:
            raise ScenarioViolation(f"unknown command type {kind!r}")
        if kind in ("place_food", "remove_food", "shift_food", "set_lambda"):
            self.command_log.append((self.tick, dict(cmd)))
        return {"type": "ack", "cmd_id": cmd.get("cmd_id")}


class _Subscriber:
    """Bounded outgoing frame queue; oldest frames dropped when full."""

    def __init__(self, writer, capacity: int = 64):
        self.writer = writer
        self.queue: asyncio.Queue = asyncio.Queue(maxsize=capacity)

    def offer(self, text: str) -> None:
        while True:
            try:
                self.queue.put_nowait(text)
                return
            except asyncio.QueueFull:
                try:
                    self.queue.get_nowait()  # drop oldest, never block the sim
                except asyncio.QueueEmpty:
                    pass


class LiveService:
    def __init__(self, scenario: Scenario, port: int, host: str = "127.0.0.1",
                 stride: int = 1000, speed_ips: float = 200_000.0):
        if scenario.mode != "lattice":
            raise ScenarioViolation("the live service needs a lattice-mode scenario")
        self.session = SessionState(scenario, stride=stride, speed_ips=speed_ips)
        self.port = port
        self.host = host
        self._commands: asyncio.Queue = asyncio.Queue()
        self._server = None
        self._stop = asyncio.Event()

    # -- broadcasting -----------------------------------------------------------

    def _broadcast(self, obj_text: str) -> None:
        for sub in list(self.session.subscribers):
            sub.offer(obj_text)

    def broadcast_snapshot(self) -> None:
        self._broadcast(snapshot_json(self.session.current_snapshot()))

    # -- simulation task ---------------------------------------------------------

    async def _sim_task(self):
        session = self.session
        slice_seconds = 0.02
        while not self._stop.is_set():
            applied = False
            while not self._commands.empty():
                sub, cmd = self._commands.get_nowait()
                try:
                    reply = session.apply_command(cmd)
                except (ScenarioViolation, KeyError, TypeError, ValueError) as exc:
                    reply = {"type": "error", "msg": str(exc),
                             "cmd_id": cmd.get("cmd_id") if isinstance(cmd, dict) else None}
                if sub is not None:
                    sub.offer(json.dumps(reply, separators=(",", ":")))
                applied = True
            if applied:
                self.broadcast_snapshot()
            if session.paused:
                await asyncio.sleep(slice_seconds)
                continue
            budget = max(1, int(session.speed_ips * slice_seconds))
            until_snap = session.stride - (session.tick % session.stride)
            chunk = min(budget, until_snap)
            session.run_chunk(chunk)
            if session.tick % session.stride == 0:
                self.broadcast_snapshot()
            await asyncio.sleep(slice_seconds if chunk >= budget else 0)

    # -- connection handling --------------------------------------------------------

    async def _handle(self, reader, writer):
        if not await _ws_handshake(reader, writer):
            writer.close()
            return
        sub = _Subscriber(writer)
        self.session.subscribers.append(sub)
        sub.offer(snapshot_json(self.session.current_snapshot()))

        async def pump():
            try:
                while True:
                    text = await sub.queue.get()
                    writer.write(_encode_text_frame(text.encode("utf-8")))
                    await writer.drain()
            except (ConnectionResetError, asyncio.CancelledError):
                pass

        pump_task = asyncio.ensure_future(pump())
        try:
            while True:
                frame = await _read_frame(reader)
                if frame is None:
                    break
                opcode, payload = frame
                if opcode == 0x9:  # ping
                    writer.write(struct.pack("!BB", 0x8A, 0))
                    continue
                if opcode != 0x1:
                    continue
                try:
                    cmd = json.loads(payload.decode("utf-8"))
                except json.JSONDecodeError as exc:
                    sub.offer(json.dumps({"type": "error", "msg": f"bad JSON: {exc}"},
                                         separators=(",", ":")))
                    continue
                await self._commands.put((sub, cmd))
        finally:
            pump_task.cancel()
            if sub in self.session.subscribers:
                self.session.subscribers.remove(sub)
            try:
                writer.close()
            except Exception:
                pass

    async def start(self):
        self._server = await asyncio.start_server(self._handle, self.host, self.port)
        self._sim = asyncio.ensure_future(self._sim_task())

    async def stop(self):
        self._stop.set()
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
        self._sim.cancel()
        try:
            await self._sim
        except asyncio.CancelledError:
            pass

    async def run_forever(self):
        await self.start()
        try:
            await asyncio.Future()
        finally:
            await self.stop()


def serve(scenario: Scenario, port: int, host: str = "127.0.0.1",
          stride: int = 1000, speed_ips: float = 200_000.0) -> None:
    """Run the interactive session until interrupted."""
    service = LiveService(scenario, port, host=host, stride=stride, speed_ips=speed_ips)
    asyncio.run(service.run_forever())


# ---------------------------------------------------------------------------
# Minimal client (tests, headless drivers)
# ---------------------------------------------------------------------------

class WsClient:
    """Blocking WebSocket client for scripted sessions."""

    def __init__(self, host: str, port: int, timeout: float = 10.0):
        import socket

        self.sock = socket.create_connection((host, port), timeout=timeout)
        key = base64.b64encode(b"0123456789abcdef").decode()
        self.sock.sendall((f"GET / HTTP/1.1\r\nHost: {host}:{port}\r\n"
                           "Upgrade: websocket\r\nConnection: Upgrade\r\n"
                           f"Sec-WebSocket-Key: {key}\r\n"
                           "Sec-WebSocket-Version: 13\r\n\r\n").encode())
        buf = b""
        while b"\r\n\r\n" not in buf:
            buf += self.sock.recv(4096)
        self._rest = buf.split(b"\r\n\r\n", 1)[1]

    def _read_exact(self, count: int) -> bytes:
        while len(self._rest) < count:
            chunk = self.sock.recv(4096)
            if not chunk:
                raise ConnectionError("server closed")
            self._rest += chunk
        out, self._rest = self._rest[:count], self._rest[count:]
        return out

    def send_json(self, obj) -> None:
        payload = json.dumps(obj, separators=(",", ":")).encode()
        mask = b"\x12\x34\x56\x78"
        masked = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        length = len(payload)
        if length < 126:
            head = struct.pack("!BB", 0x81, 0x80 | length)
        elif length < (1 << 16):
            head = struct.pack("!BBH", 0x81, 0x80 | 126, length)
        else:
            head = struct.pack("!BBQ", 0x81, 0x80 | 127, length)
        self.sock.sendall(head + mask + masked)

    def recv_json(self):
        head = self._read_exact(2)
        length = head[1] & 0x7F
        if length == 126:
            length = struct.unpack("!H", self._read_exact(2))[0]
        elif length == 127:
            length = struct.unpack("!Q", self._read_exact(8))[0]
        payload = self._read_exact(length)
        if (head[0] & 0x0F) == 0x8:
            raise ConnectionError("server sent close")
        return json.loads(payload.decode("utf-8"))

    def close(self):
        try:
            self.sock.close()
        except Exception:
            pass
