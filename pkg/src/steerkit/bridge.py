"""Wire-protocol client for external denoiser/codec servers, plus an
in-process loopback server for tests and handshake checks.

Frame layout (little-endian): magic ``SMBR`` (4 bytes) | version u16 = 1 |
msg_type u16 | payload_len u64 | payload.  Message types: 1 INIT, 2
INIT_ACK, 3 ENCODE, 4 DECODE, 5 PREDICT, 6 RESPONSE, 7 ERROR (UTF-8
message), 8 SHUTDOWN.  A tensor is ndim u32 | dims u32 x ndim | f32 data,
row-major.  INIT carries the image dims block; INIT_ACK answers with T u32
| beta f64 x T | latent dims block, so the server dictates the schedule and
latent geometry.  PREDICT carries timestep u32 | x_t tensor | rgb latent
tensor and the server answers with a v-parameterized prediction tensor.
SHUTDOWN is acknowledged with an empty RESPONSE, then the connection ends.

Sessions are strictly one request in flight; the client never interprets a
partial frame (a short read is a connection error, a malformed frame is a
protocol error and closes the session).
"""

from __future__ import annotations

import shlex
import socket
import struct
import subprocess
import sys
import threading
from typing import Callable

import numpy as np

from .codec import LatentCodec
from .ddpm import NoiseSchedule
from .errors import (
    BridgeConnectionError,
    BridgeError,
    DimensionError,
    ProtocolError,
    RemoteError,
)
from .types import LatentSample

__all__ = [
    "MSG_INIT",
    "MSG_INIT_ACK",
    "MSG_ENCODE",
    "MSG_DECODE",
    "MSG_PREDICT",
    "MSG_RESPONSE",
    "MSG_ERROR",
    "MSG_SHUTDOWN",
    "pack_frame",
    "pack_tensor",
    "unpack_tensor",
    "BridgeSession",
    "BridgeDenoiser",
    "BridgeCodec",
    "LoopbackBridgeServer",
    "serve_stream",
    "connect_tcp",
    "connect_stdio",
    "open_session",
]

MAGIC = b"SMBR"
VERSION = 1
_HEADER = struct.Struct("<4sHHQ")

MSG_INIT = 1
MSG_INIT_ACK = 2
MSG_ENCODE = 3
MSG_DECODE = 4
MSG_PREDICT = 5
MSG_RESPONSE = 6
MSG_ERROR = 7
MSG_SHUTDOWN = 8

_MAX_PAYLOAD = 1 << 32  # refuse absurd allocations from corrupt headers
_MAX_NDIM = 8


def pack_frame(msg_type: int, payload: bytes = b"") -> bytes:
    return _HEADER.pack(MAGIC, VERSION, msg_type, len(payload)) + payload


def pack_tensor(arr: np.ndarray) -> bytes:
    arr32 = np.ascontiguousarray(arr, dtype="<f4")
    dims = arr32.shape
    return struct.pack(f"<I{len(dims)}I", len(dims), *dims) + arr32.tobytes()


def unpack_tensor(payload: bytes, offset: int = 0) -> tuple[np.ndarray, int]:
    """Parse one tensor block; returns (array, next offset)."""
    if len(payload) - offset < 4:
        raise ProtocolError("truncated tensor header")
    (ndim,) = struct.unpack_from("<I", payload, offset)
    offset += 4
    if ndim > _MAX_NDIM:
        raise ProtocolError(f"implausible tensor rank {ndim}")
    if len(payload) - offset < 4 * ndim:
        raise ProtocolError("truncated tensor dims")
    dims = struct.unpack_from(f"<{ndim}I", payload, offset)
    offset += 4 * ndim
    count = int(np.prod(dims, dtype=np.int64)) if ndim else 1
    nbytes = 4 * count
    if len(payload) - offset < nbytes:
        raise ProtocolError("truncated tensor data")
    arr = np.frombuffer(payload, "<f4", count, offset).reshape(dims)
    return arr.astype(np.float32), offset + nbytes


def _pack_dims(dims: tuple[int, ...]) -> bytes:
    return struct.pack(f"<I{len(dims)}I", len(dims), *dims)


def _unpack_dims(payload: bytes, offset: int) -> tuple[tuple[int, ...], int]:
    if len(payload) - offset < 4:
        raise ProtocolError("truncated dims block")
    (ndim,) = struct.unpack_from("<I", payload, offset)
    offset += 4
    if ndim > _MAX_NDIM or len(payload) - offset < 4 * ndim:
        raise ProtocolError("truncated dims block")
    dims = struct.unpack_from(f"<{ndim}I", payload, offset)
    return tuple(int(d) for d in dims), offset + 4 * ndim


class _SocketTransport:
    def __init__(self, sock: socket.socket):
        self.sock = sock

    def send(self, data: bytes) -> None:
        try:
            self.sock.sendall(data)
        except OSError as exc:
            raise BridgeConnectionError(f"send failed: {exc}") from exc

    def recv_exact(self, n: int) -> bytes:
        chunks = []
        remaining = n
        while remaining:
            try:
                chunk = self.sock.recv(remaining)
            except OSError as exc:
                raise BridgeConnectionError(f"recv failed: {exc}") from exc
            if not chunk:
                raise BridgeConnectionError("connection closed mid-frame")
            chunks.append(chunk)
            remaining -= len(chunk)
        return b"".join(chunks)

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


class _StdioTransport:
    """Talks the protocol to a child process over its stdin/stdout."""

    def __init__(self, command: str):
        argv = shlex.split(command)
        if not argv:
            raise BridgeConnectionError("empty bridge command")
        try:
            self.proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE
            )
        except OSError as exc:
            raise BridgeConnectionError(f"cannot start {argv[0]!r}: {exc}") from exc

    def send(self, data: bytes) -> None:
        try:
            self.proc.stdin.write(data)
            self.proc.stdin.flush()
        except (OSError, ValueError) as exc:
            raise BridgeConnectionError(f"send failed: {exc}") from exc

    def recv_exact(self, n: int) -> bytes:
        data = self.proc.stdout.read(n)
        if data is None or len(data) < n:
            raise BridgeConnectionError("bridge process closed mid-frame")
        return data

    def close(self) -> None:
        for stream in (self.proc.stdin, self.proc.stdout):
            try:
                stream.close()
            except OSError:
                pass
        try:
            self.proc.terminate()
            self.proc.wait(timeout=5)
        except (OSError, subprocess.TimeoutExpired):
            self.proc.kill()


def connect_tcp(host: str, port: int) -> "_SocketTransport":
    try:
        sock = socket.create_connection((host, port), timeout=30)
    except OSError as exc:
        raise BridgeConnectionError(f"cannot connect to {host}:{port}: {exc}") from exc
    return _SocketTransport(sock)


def connect_stdio(command: str) -> "_StdioTransport":
    return _StdioTransport(command)


def open_session(spec: str) -> "BridgeSession":
    """Build a session from ``host:port`` or ``stdio:<command>``."""
    if spec.startswith("stdio:"):
        return BridgeSession(connect_stdio(spec[len("stdio:"):]))
    host, sep, port = spec.rpartition(":")
    if not sep or not port.isdigit():
        raise BridgeConnectionError(
            f"bad bridge spec {spec!r}; expected host:port or stdio:<command>"
        )
    return BridgeSession(connect_tcp(host or "127.0.0.1", int(port)))


class BridgeSession:
    """One protocol connection; INIT must complete before anything else."""

    def __init__(self, transport):
        self.transport = transport
        self.schedule: NoiseSchedule | None = None
        self.image_shape: tuple[int, ...] | None = None
        self.latent_shape: tuple[int, ...] | None = None
        self._busy = False
        self._closed = False

    # -- plumbing ---------------------------------------------------------

    def _fail_protocol(self, message: str) -> ProtocolError:
        self.close()
        return ProtocolError(message)

    def _read_frame(self) -> tuple[int, bytes]:
        header = self.transport.recv_exact(_HEADER.size)
        magic, version, msg_type, length = _HEADER.unpack(header)
        if magic != MAGIC:
            raise self._fail_protocol(f"bad magic {magic!r}")
        if version != VERSION:
            raise self._fail_protocol(f"unsupported protocol version {version}")
        if length > _MAX_PAYLOAD:
            raise self._fail_protocol(f"implausible payload length {length}")
        payload = self.transport.recv_exact(length) if length else b""
        return msg_type, payload

    def _request(self, msg_type: int, payload: bytes, expect: int) -> bytes:
        if self._closed:
            raise BridgeConnectionError("session is closed")
        if self._busy:
            raise BridgeError("session already has a request in flight")
        self._busy = True
        try:
            self.transport.send(pack_frame(msg_type, payload))
            got, body = self._read_frame()
            if got == MSG_ERROR:
                raise RemoteError(body.decode("utf-8", errors="replace"))
            if got != expect:
                raise self._fail_protocol(f"expected msg type {expect}, got {got}")
            return body
        finally:
            self._busy = False

    # -- protocol operations ----------------------------------------------

    def handshake(self, image_shape: tuple[int, ...]) -> None:
        body = self._request(MSG_INIT, _pack_dims(tuple(image_shape)), MSG_INIT_ACK)
        if len(body) < 4:
            raise self._fail_protocol("truncated INIT_ACK")
        (t_steps,) = struct.unpack_from("<I", body, 0)
        offset = 4
        if t_steps < 1 or len(body) - offset < 8 * t_steps:
            raise self._fail_protocol("truncated INIT_ACK beta table")
        betas = np.frombuffer(body, "<f8", t_steps, offset)
        offset += 8 * t_steps
        latent_shape, offset = _unpack_dims(body, offset)
        try:
            self.schedule = NoiseSchedule.from_betas(betas)
        except Exception as exc:
            raise self._fail_protocol(f"server sent invalid beta table: {exc}") from exc
        self.image_shape = tuple(image_shape)
        self.latent_shape = latent_shape

    def _check_ready(self) -> None:
        if self.schedule is None:
            raise BridgeError("session not initialized; call handshake first")

    def predict(self, x_t: LatentSample, rgb_latent: np.ndarray | None) -> LatentSample:
        self._check_ready()
        if x_t.shape != self.latent_shape:
            raise DimensionError(
                f"latent shape {x_t.shape} does not match negotiated {self.latent_shape}"
            )
        rgb = rgb_latent if rgb_latent is not None else np.zeros(x_t.shape, np.float32)
        payload = struct.pack("<I", x_t.timestep) + pack_tensor(x_t.values) + pack_tensor(rgb)
        body = self._request(MSG_PREDICT, payload, MSG_RESPONSE)
        out, _ = unpack_tensor(body)
        if out.shape != x_t.shape:
            raise self._fail_protocol(
                f"prediction shape {out.shape} does not match latent {x_t.shape}"
            )
        return x_t.with_values(out.astype(x_t.values.dtype))

    def _roundtrip_tensor(self, msg_type: int, arr: np.ndarray) -> np.ndarray:
        self._check_ready()
        body = self._request(msg_type, pack_tensor(arr), MSG_RESPONSE)
        out, _ = unpack_tensor(body)
        return out

    def encode(self, image: np.ndarray) -> np.ndarray:
        out = self._roundtrip_tensor(MSG_ENCODE, image)
        if out.shape != self.latent_shape:
            raise self._fail_protocol(
                f"encoded shape {out.shape} does not match negotiated {self.latent_shape}"
            )
        return out

    def decode(self, latent: np.ndarray) -> np.ndarray:
        return self._roundtrip_tensor(MSG_DECODE, latent)

    def shutdown(self) -> None:
        if self._closed or self.schedule is None:
            self.close()
            return
        try:
            self._request(MSG_SHUTDOWN, b"", MSG_RESPONSE)
        finally:
            self.close()

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self.transport.close()

    def __enter__(self) -> "BridgeSession":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()


class BridgeDenoiser:
    """Denoiser backed by a bridge session; predictions are v-parameterized
    per the protocol contract."""

    kind = "v"

    def __init__(self, session: BridgeSession):
        session._check_ready()
        self.session = session

    def predict(
        self, x_t: LatentSample, rgb_latent: np.ndarray | None = None
    ) -> LatentSample:
        return self.session.predict(x_t, rgb_latent)


class BridgeCodec(LatentCodec):
    """Codec backed by a bridge session's ENCODE/DECODE."""

    tolerance = 0.05

    def __init__(self, session: BridgeSession):
        session._check_ready()
        if len(session.image_shape) != 3 or len(session.latent_shape) != 3:
            raise ProtocolError("bridge codec needs 3D image and latent shapes")
        _, img_h, img_w = session.image_shape
        c, lat_h, lat_w = session.latent_shape
        if lat_h == 0 or img_h % lat_h or img_w % lat_w or img_h // lat_h != img_w // lat_w:
            raise ProtocolError(
                f"latent dims {session.latent_shape} are not an integer scale of "
                f"image dims {session.image_shape}"
            )
        self.session = session
        self.scale_factor = img_h // lat_h
        self.latent_channels = c

    def check_dims(self, height: int, width: int) -> None:
        _, img_h, img_w = self.session.image_shape
        if (height, width) != (img_h, img_w):
            raise DimensionError(
                f"dims ({height}, {width}) do not match negotiated ({img_h}, {img_w})"
            )

    def encode(self, image: np.ndarray) -> LatentSample:
        return LatentSample(self.session.encode(np.asarray(image)), timestep=0)

    def decode(self, latent: LatentSample) -> np.ndarray:
        return self.session.decode(latent.values)


# -- loopback server -------------------------------------------------------


class _ServerState:
    """Per-connection protocol handler shared by TCP and stdio servers."""

    def __init__(
        self,
        sched: NoiseSchedule,
        predict_fn: Callable[[np.ndarray, int, np.ndarray], np.ndarray] | None,
        fault: str | None,
        fault_on: str,
    ):
        self.sched = sched
        self.predict_fn = predict_fn
        self.fault = fault
        self.fault_on = fault_on
        self.image_shape: tuple[int, ...] | None = None
        self.requests = 0

    def _corrupt(self, frame: bytes) -> bytes:
        if self.fault == "bad-magic":
            return b"XXXX" + frame[4:]
        if self.fault == "bad-version":
            return frame[:4] + struct.pack("<H", 99) + frame[6:]
        if self.fault == "truncated":
            return frame[: max(1, len(frame) // 2)]
        if self.fault == "garbage-type":
            return frame[:6] + struct.pack("<H", 999) + frame[8:]
        return frame

    def handle(self, msg_type: int, payload: bytes) -> tuple[bytes | None, bool]:
        """Returns (reply bytes or None to hang up, keep-going flag)."""
        self.requests += 1
        try:
            reply, alive = self._reply(msg_type, payload)
        except ProtocolError as exc:
            reply, alive = pack_frame(MSG_ERROR, str(exc).encode()), True
        stage = {
            MSG_INIT: "init", MSG_ENCODE: "encode",
            MSG_DECODE: "decode", MSG_PREDICT: "predict",
        }.get(msg_type)
        if self.fault is not None and stage == self.fault_on:
            reply = self._corrupt(reply)
            if self.fault == "truncated":
                alive = False  # hang up, or the client would wait forever
        return reply, alive

    def _reply(self, msg_type: int, payload: bytes) -> tuple[bytes, bool]:
        if msg_type == MSG_INIT:
            dims, _ = _unpack_dims(payload, 0)
            self.image_shape = dims
            betas = np.asarray(self.sched.beta[1:], dtype="<f8")
            ack = struct.pack("<I", self.sched.T) + betas.tobytes() + _pack_dims(dims)
            return pack_frame(MSG_INIT_ACK, ack), True
        if msg_type == MSG_SHUTDOWN:
            return pack_frame(MSG_RESPONSE, b""), False
        if self.image_shape is None:
            return pack_frame(MSG_ERROR, b"INIT required before this request"), True
        if msg_type in (MSG_ENCODE, MSG_DECODE):
            arr, _ = unpack_tensor(payload)
            return pack_frame(MSG_RESPONSE, pack_tensor(arr)), True
        if msg_type == MSG_PREDICT:
            if len(payload) < 4:
                raise ProtocolError("truncated PREDICT payload")
            (t,) = struct.unpack_from("<I", payload, 0)
            x_t, offset = unpack_tensor(payload, 4)
            rgb, _ = unpack_tensor(payload, offset)
            if self.fault == "wrong-shape" and self.fault_on == "predict":
                out = np.zeros((1, 1, 1), np.float32)
            elif self.predict_fn is None:
                out = np.zeros_like(x_t)
            else:
                out = np.asarray(self.predict_fn(x_t, int(t), rgb), dtype=np.float32)
            return pack_frame(MSG_RESPONSE, pack_tensor(out)), True
        return pack_frame(MSG_ERROR, f"unknown msg type {msg_type}".encode()), True


def _read_frame_stream(recv_exact) -> tuple[int, bytes] | None:
    try:
        header = recv_exact(_HEADER.size)
    except BridgeConnectionError:
        return None
    magic, version, msg_type, length = _HEADER.unpack(header)
    if magic != MAGIC or version != VERSION or length > _MAX_PAYLOAD:
        return None
    payload = recv_exact(length) if length else b""
    return msg_type, payload


class LoopbackBridgeServer:
    """In-process TCP server speaking the protocol, for tests and pings.

    Identity encode/decode; PREDICT answers zeros unless ``predict_fn`` is
    given.  ``fault``/``fault_on`` corrupt the reply of a chosen stage to
    exercise client error paths.
    """

    def __init__(
        self,
        sched: NoiseSchedule,
        predict_fn=None,
        fault: str | None = None,
        fault_on: str = "predict",
    ):
        self.state = _ServerState(sched, predict_fn, fault, fault_on)
        self._listener = socket.create_server(("127.0.0.1", 0))
        self._listener.settimeout(0.2)
        self.address = self._listener.getsockname()
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._serve, daemon=True)
        self._thread.start()

    @property
    def spec(self) -> str:
        return f"{self.address[0]}:{self.address[1]}"

    def _serve(self) -> None:
        while not self._stop.is_set():
            try:
                conn, _ = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            with conn:
                transport = _SocketTransport(conn)
                while not self._stop.is_set():
                    frame = _read_frame_stream(transport.recv_exact)
                    if frame is None:
                        break
                    reply, alive = self.state.handle(*frame)
                    if reply is not None:
                        try:
                            transport.send(reply)
                        except BridgeConnectionError:
                            break
                    if not alive:
                        break

    def close(self) -> None:
        self._stop.set()
        try:
            self._listener.close()
        except OSError:
            pass
        self._thread.join(timeout=5)

    def __enter__(self) -> "LoopbackBridgeServer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def serve_stream(stdin, stdout, sched: NoiseSchedule, predict_fn=None) -> None:
    """Serve the protocol over a byte-stream pair until EOF or SHUTDOWN."""
    state = _ServerState(sched, predict_fn, None, "predict")

    def recv_exact(n: int) -> bytes:
        data = stdin.read(n)
        if data is None or len(data) < n:
            raise BridgeConnectionError("stream closed")
        return data

    while True:
        frame = _read_frame_stream(recv_exact)
        if frame is None:
            return
        reply, alive = state.handle(*frame)
        if reply is not None:
            stdout.write(reply)
            stdout.flush()
        if not alive:
            return


def _main() -> None:
    from .ddpm import build_schedule

    steps = 50
    args = sys.argv[1:]
    if args and args[0] == "--steps":
        steps = int(args[1])
    serve_stream(sys.stdin.buffer, sys.stdout.buffer, build_schedule(steps))


if __name__ == "__main__":
    _main()
