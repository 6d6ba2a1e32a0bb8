"""The session protocol: newline-delimited JSON messages over a transport.

Server to client, one JSON object per line:

    {"type":"choice_request","choice_id":N,"alternatives":[...]}
    {"type":"user_resolved","choice_id":N,"index":K}      (trace only)
    {"type":"machine_move","branch_index":K,"guard_text":...}  (trace only)
    {"type":"state","bindings":{...}}                     (trace only)
    {"type":"output","text":...}
    {"type":"warning","message":...}
    {"type":"error","code":...,"message":...}
    {"type":"done","status":"success"|"failure"[,"reason":...]}

Client to server:

    {"type":"choice_response","choice_id":N,"index":K}
    {"type":"abort"}

Exactly one choice_request is outstanding at a time.  A response with the
wrong choice_id or an out-of-range index gets an error message and the
same request again.  After done the server sends nothing further and
closes the transport.

Transports: stdio and plain TCP carry one JSON object per line; the TCP
listener upgrades connections that start with an HTTP GET to WebSocket
and then carries one JSON object per text frame.
"""

from __future__ import annotations

import base64
import hashlib
import json
import socket
import struct
import threading
from dataclasses import dataclass
from typing import IO, Callable, Protocol

from .engine import ExecOutcome, Success, run_program
from .events import (
    Done,
    Event,
    MachineMove,
    Output,
    StateSnapshot,
    UserPrompt,
    UserResolved,
    WarningNote,
)
from .interaction import CHOICE_SOURCE_EXHAUSTED, ChoicePrompt, InteractionError
from .syntax import SourceProgram


def encode_json(payload: dict) -> str:
    """The canonical wire rendering: no spaces, keys in insertion order."""
    return json.dumps(payload, separators=(",", ":"))


def encode_event(event: Event) -> dict:
    match event:
        case UserPrompt(choice_id, alternatives):
            return {"type": "choice_request", "choice_id": choice_id,
                    "alternatives": list(alternatives)}
        case UserResolved(choice_id, index):
            return {"type": "user_resolved", "choice_id": choice_id, "index": index}
        case MachineMove(branch_index, guard_text):
            return {"type": "machine_move", "branch_index": branch_index,
                    "guard_text": guard_text}
        case Output(text):
            return {"type": "output", "text": text}
        case StateSnapshot(bindings):
            return {"type": "state", "bindings": {name: text for name, text in bindings}}
        case WarningNote(message):
            return {"type": "warning", "message": message}
        case Done(status, reason):
            payload: dict = {"type": "done", "status": status}
            if reason is not None:
                payload["reason"] = reason
            return payload
    raise TypeError(f"not an event: {event!r}")


@dataclass(frozen=True)
class ChoiceResponse:
    choice_id: int
    index: int


@dataclass(frozen=True)
class AbortCommand:
    pass


class CommandError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


def decode_command(text: str) -> ChoiceResponse | AbortCommand:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError:
        raise CommandError("bad_message", "message is not valid JSON")
    if not isinstance(payload, dict):
        raise CommandError("bad_message", "message is not an object")
    kind = payload.get("type")
    if kind == "abort":
        return AbortCommand()
    if kind == "choice_response":
        choice_id = payload.get("choice_id")
        index = payload.get("index")
        if not isinstance(choice_id, int) or isinstance(choice_id, bool):
            raise CommandError("bad_message", "choice_id must be an integer")
        if not isinstance(index, int) or isinstance(index, bool):
            raise CommandError("bad_message", "index must be an integer")
        return ChoiceResponse(choice_id, index)
    raise CommandError("bad_message", f"unknown command type {kind!r}")


# --- transports ------------------------------------------------------------


class Transport(Protocol):
    def send(self, payload: dict) -> None: ...

    def recv(self) -> str | None:
        """Next raw client message, or None once the peer is gone."""
        ...

    def close(self) -> None: ...


class StreamTransport:
    """One JSON object per line over a pair of text streams."""

    def __init__(self, in_stream: IO[str], out_stream: IO[str]):
        self._in = in_stream
        self._out = out_stream

    def send(self, payload: dict) -> None:
        self._out.write(encode_json(payload) + "\n")
        self._out.flush()

    def recv(self) -> str | None:
        line = self._in.readline()
        if line == "":
            return None
        return line.rstrip("\n")

    def close(self) -> None:
        pass  # stdio does not belong to us


class SocketLineTransport:
    """One JSON object per line over a TCP socket."""

    def __init__(self, conn: socket.socket):
        self._conn = conn
        self._reader = conn.makefile("r", encoding="utf-8", newline="\n")

    def send(self, payload: dict) -> None:
        self._conn.sendall((encode_json(payload) + "\n").encode("utf-8"))

    def recv(self) -> str | None:
        line = self._reader.readline()
        if line == "":
            return None
        return line.rstrip("\n")

    def close(self) -> None:
        try:
            self._reader.close()
        except OSError:
            pass
        try:
            self._conn.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._conn.close()


# --- websocket support ------------------------------------------------------

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


def _read_http_request(conn: socket.socket) -> bytes:
    data = b""
    while b"\r\n\r\n" not in data:
        chunk = conn.recv(4096)
        if not chunk:
            return data
        data += chunk
        if len(data) > 65536:
            break
    return data


def _websocket_accept(conn: socket.socket) -> bool:
    """Perform the server side of the opening handshake.  Returns False and
    sends a 400 when the request is not a proper upgrade."""
    request = _read_http_request(conn)
    headers: dict[str, str] = {}
    for raw in request.split(b"\r\n")[1:]:
        if b":" in raw:
            name, _, value = raw.partition(b":")
            headers[name.decode("latin-1").strip().lower()] = value.decode("latin-1").strip()
    key = headers.get("sec-websocket-key")
    upgrade = headers.get("upgrade", "").lower()
    if key is None or upgrade != "websocket":
        conn.sendall(b"HTTP/1.1 400 Bad Request\r\nConnection: close\r\n\r\n")
        return False
    accept = base64.b64encode(hashlib.sha1((key + _WS_GUID).encode("ascii")).digest()).decode()
    conn.sendall(
        (
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {accept}\r\n"
            "\r\n"
        ).encode("latin-1")
    )
    return True


class WebSocketTransport:
    """One JSON object per text frame.  Handles masking, close, ping."""

    def __init__(self, conn: socket.socket):
        self._conn = conn
        self._closed = False

    def send(self, payload: dict) -> None:
        self._send_frame(0x1, encode_json(payload).encode("utf-8"))

    def recv(self) -> str | None:
        buffer = b""
        while True:
            frame = self._recv_frame()
            if frame is None:
                return None
            opcode, fin, data = frame
            if opcode == 0x8:  # close
                self._send_frame(0x8, b"")
                return None
            if opcode == 0x9:  # ping
                self._send_frame(0xA, data)
                continue
            if opcode == 0xA:  # pong
                continue
            buffer += data
            if fin:
                return buffer.decode("utf-8")

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            try:
                self._send_frame(0x8, b"")
            except OSError:
                pass
        try:
            self._conn.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._conn.close()

    def _send_frame(self, opcode: int, data: bytes) -> None:
        header = bytes([0x80 | opcode])
        length = len(data)
        if length < 126:
            header += bytes([length])
        elif length < 65536:
            header += bytes([126]) + struct.pack("!H", length)
        else:
            header += bytes([127]) + struct.pack("!Q", length)
        self._conn.sendall(header + data)

    def _recv_exact(self, count: int) -> bytes | None:
        data = b""
        while len(data) < count:
            try:
                chunk = self._conn.recv(count - len(data))
            except OSError:
                return None
            if not chunk:
                return None
            data += chunk
        return data

    def _recv_frame(self) -> tuple[int, bool, bytes] | None:
        head = self._recv_exact(2)
        if head is None:
            return None
        fin = bool(head[0] & 0x80)
        opcode = head[0] & 0x0F
        masked = bool(head[1] & 0x80)
        length = head[1] & 0x7F
        if length == 126:
            ext = self._recv_exact(2)
            if ext is None:
                return None
            length = struct.unpack("!H", ext)[0]
        elif length == 127:
            ext = self._recv_exact(8)
            if ext is None:
                return None
            length = struct.unpack("!Q", ext)[0]
        mask = b""
        if masked:
            got = self._recv_exact(4)
            if got is None:
                return None
            mask = got
        data = self._recv_exact(length) if length else b""
        if data is None:
            return None
        if masked:
            data = bytes(b ^ mask[i % 4] for i, b in enumerate(data))
        return opcode, fin, data


# --- session driver ----------------------------------------------------------


class AbortSession(Exception):
    """Client asked to stop; the session ends as a failure."""


@dataclass(frozen=True)
class SessionResult:
    status: str  # "success" or "failure"
    outcome: ExecOutcome | None  # None when the client aborted


class _ProtocolSource:
    """Feeds user moves from choice_response messages, re-issuing the
    outstanding request after a bad choice_id or an out-of-range index."""

    def __init__(self, transport: Transport):
        self._transport = transport

    def next_choice(self, prompt: ChoicePrompt) -> int:
        while True:
            raw = self._transport.recv()
            if raw is None:
                raise InteractionError(CHOICE_SOURCE_EXHAUSTED, "client disconnected")
            try:
                command = decode_command(raw)
            except CommandError as err:
                self._transport.send({"type": "error", "code": err.code, "message": err.message})
                continue
            if isinstance(command, AbortCommand):
                raise AbortSession()
            if command.choice_id != prompt.choice_id:
                self._transport.send(
                    {
                        "type": "error",
                        "code": "bad_choice_id",
                        "message": f"expected choice_id {prompt.choice_id}, "
                        f"got {command.choice_id}",
                    }
                )
                self._resend(prompt)
                continue
            if not 0 <= command.index < len(prompt.alternatives):
                self._transport.send(
                    {
                        "type": "error",
                        "code": "index_out_of_range",
                        "message": f"requested index {command.index} of "
                        f"{len(prompt.alternatives)} alternatives",
                    }
                )
                self._resend(prompt)
                continue
            return command.index

    def _resend(self, prompt: ChoicePrompt) -> None:
        self._transport.send(
            {
                "type": "choice_request",
                "choice_id": prompt.choice_id,
                "alternatives": list(prompt.alternatives),
            }
        )


def run_session(
    program: SourceProgram,
    transport: Transport,
    *,
    trace: bool = False,
    first_match: bool = False,
) -> SessionResult:
    """Drive one program run over a transport and close it afterwards.

    Without trace, user_resolved, machine_move, and state events stay
    server-side; choice_request, output, warning, and done always go out.
    """

    def emit(event: Event) -> None:
        if not trace and isinstance(event, (UserResolved, MachineMove, StateSnapshot)):
            return
        try:
            transport.send(encode_event(event))
        except (OSError, ValueError):
            pass  # peer went away; the engine outcome still stands

    source = _ProtocolSource(transport)
    try:
        outcome = run_program(program, source, emit, first_match=first_match)
    except AbortSession:
        try:
            transport.send({"type": "done", "status": "failure", "reason": "aborted"})
        except (OSError, ValueError):
            pass
        return SessionResult("failure", None)
    finally:
        transport.close()
    status = "success" if isinstance(outcome, Success) else "failure"
    return SessionResult(status, outcome)


def serve_stdio(
    program: SourceProgram,
    in_stream: IO[str],
    out_stream: IO[str],
    *,
    trace: bool = False,
    first_match: bool = False,
) -> SessionResult:
    """One session over a pair of text streams (normally stdin/stdout)."""
    return run_session(
        program, StreamTransport(in_stream, out_stream), trace=trace, first_match=first_match
    )


def serve_forever(
    program: SourceProgram,
    host: str,
    port: int,
    *,
    trace: bool = False,
    first_match: bool = False,
    ready: Callable[[int], None] | None = None,
    stop: threading.Event | None = None,
    max_sessions: int | None = None,
    log: Callable[[str], None] | None = None,
) -> None:
    """Accept connections and run one session per connection, each on its
    own thread.  `ready` receives the bound port (useful with port 0);
    `stop` and `max_sessions` exist so tests and embedders can wind down."""
    note = log or (lambda _line: None)
    listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        listener.bind((host, port))
        listener.listen()
        listener.settimeout(0.2)
        bound = listener.getsockname()[1]
        note(f"listening on {host}:{bound}")
        if ready is not None:
            ready(bound)
        served = 0
        workers: list[threading.Thread] = []
        while (stop is None or not stop.is_set()) and (
            max_sessions is None or served < max_sessions
        ):
            try:
                conn, addr = listener.accept()
            except socket.timeout:
                continue
            served += 1
            worker = threading.Thread(
                target=_serve_connection,
                args=(program, conn, addr, trace, first_match, note),
                daemon=True,
            )
            worker.start()
            workers.append(worker)
        for worker in workers:
            worker.join(timeout=5)
    finally:
        listener.close()


def _serve_connection(
    program: SourceProgram,
    conn: socket.socket,
    addr: tuple,
    trace: bool,
    first_match: bool,
    note: Callable[[str], None],
) -> None:
    note(f"session from {addr[0]}:{addr[1]}")
    transport: Transport
    # A WebSocket client talks first (its HTTP upgrade); a line client waits
    # for the server's opening message.  So a short silence means lines.
    try:
        conn.settimeout(0.3)
        try:
            first = conn.recv(4, socket.MSG_PEEK)
        except socket.timeout:
            first = b""
        conn.settimeout(None)
    except OSError:
        conn.close()
        return
    if first.startswith(b"GET"):
        if not _websocket_accept(conn):
            conn.close()
            note(f"rejected non-websocket HTTP request from {addr[0]}:{addr[1]}")
            return
        transport = WebSocketTransport(conn)
    else:
        transport = SocketLineTransport(conn)
    try:
        result = run_session(program, transport, trace=trace, first_match=first_match)
        note(f"session from {addr[0]}:{addr[1]} finished: {result.status}")
    except Exception as err:  # keep the listener alive whatever happens
        note(f"session from {addr[0]}:{addr[1]} crashed: {err}")
