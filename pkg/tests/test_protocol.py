import base64
import hashlib
import json
import os
import socket
import struct
import threading
from collections import deque

import pytest
from conftest import CORPUS

from choo.engine import Success
from choo.events import Done, MachineMove, Output, StateSnapshot, UserPrompt, UserResolved, WarningNote
from choo.protocol import (
    AbortCommand,
    ChoiceResponse,
    CommandError,
    SessionResult,
    decode_command,
    encode_event,
    encode_json,
    run_session,
    serve_forever,
    serve_stdio,
)
from choo.state import IntVal
from choo.syntax import parse_program

EX2 = parse_program((CORPUS / "example2.choo").read_text(encoding="utf-8"))

GOLDEN_REQUEST = (
    '{"type":"choice_request","choice_id":0,"alternatives":'
    '["const major == \\"english\\"","const major == \\"medical\\"",'
    '"const major == \\"liberal\\""]}'
)
GOLDEN_RESPONSE = '{"type":"choice_response","choice_id":0,"index":1}'
GOLDEN_OUTPUT = '{"type":"output","text":"4000"}'
GOLDEN_DONE = '{"type":"done","status":"success"}'


class FakeTransport:
    """In-memory transport recording the full exchange in temporal order."""

    def __init__(self, replies):
        self.replies = deque(replies)
        self.log: list[tuple[str, str]] = []
        self.closed = False

    def send(self, payload):
        self.log.append(("S", encode_json(payload)))

    def recv(self):
        if not self.replies:
            return None
        message = self.replies.popleft()
        self.log.append(("C", message))
        return message

    def close(self):
        self.closed = True


# --- wire encoding -----------------------------------------------------------


def test_encoded_messages_are_bit_exact():
    prompt = UserPrompt(
        0, ('const major == "english"', 'const major == "medical"', 'const major == "liberal"')
    )
    assert encode_json(encode_event(prompt)) == GOLDEN_REQUEST
    assert encode_json(encode_event(Output("4000"))) == GOLDEN_OUTPUT
    assert encode_json(encode_event(Done("success"))) == GOLDEN_DONE
    assert encode_json(encode_event(Done("failure", "aborted"))) == (
        '{"type":"done","status":"failure","reason":"aborted"}'
    )
    assert encode_json(encode_event(UserResolved(0, 1))) == (
        '{"type":"user_resolved","choice_id":0,"index":1}'
    )
    assert encode_json(encode_event(MachineMove(1, 'major == "medical"'))) == (
        '{"type":"machine_move","branch_index":1,"guard_text":"major == \\"medical\\""}'
    )
    assert encode_json(encode_event(StateSnapshot((("tuition", "4000"),)))) == (
        '{"type":"state","bindings":{"tuition":"4000"}}'
    )
    assert encode_json(encode_event(WarningNote("overlap"))) == (
        '{"type":"warning","message":"overlap"}'
    )


def test_decode_command_accepts_the_two_commands():
    assert decode_command(GOLDEN_RESPONSE) == ChoiceResponse(0, 1)
    assert decode_command('{"type":"abort"}') == AbortCommand()


@pytest.mark.parametrize(
    "raw",
    [
        "not json",
        "[1,2]",
        '{"no_type":1}',
        '{"type":"mystery"}',
        '{"type":"choice_response","choice_id":"0","index":1}',
        '{"type":"choice_response","choice_id":0,"index":true}',
        '{"type":"choice_response","choice_id":0}',
    ],
)
def test_decode_command_rejects_malformed(raw):
    with pytest.raises(CommandError) as err:
        decode_command(raw)
    assert err.value.code == "bad_message"


# --- session driver ----------------------------------------------------------


def test_golden_session_transcript():
    transport = FakeTransport([GOLDEN_RESPONSE])
    result = run_session(EX2, transport)
    assert transport.log == [
        ("S", GOLDEN_REQUEST),
        ("C", GOLDEN_RESPONSE),
        ("S", GOLDEN_OUTPUT),
        ("S", GOLDEN_DONE),
    ]
    assert result.status == "success"
    assert isinstance(result.outcome, Success)
    assert result.outcome.store.theta.get("tuition") == IntVal(4000)
    assert transport.closed


def test_trace_session_adds_server_side_events():
    transport = FakeTransport([GOLDEN_RESPONSE])
    run_session(EX2, transport, trace=True)
    kinds = [json.loads(m)["type"] for side, m in transport.log if side == "S"]
    assert kinds == ["choice_request", "user_resolved", "machine_move", "state", "output", "done"]


def test_bad_choice_id_reissues_request():
    transport = FakeTransport(
        ['{"type":"choice_response","choice_id":7,"index":1}', GOLDEN_RESPONSE]
    )
    result = run_session(EX2, transport)
    server = [m for side, m in transport.log if side == "S"]
    assert server[0] == GOLDEN_REQUEST
    assert json.loads(server[1]) == {
        "type": "error",
        "code": "bad_choice_id",
        "message": "expected choice_id 0, got 7",
    }
    assert server[2] == GOLDEN_REQUEST
    assert server[3] == GOLDEN_OUTPUT
    assert result.status == "success"


def test_out_of_range_index_reissues_request():
    transport = FakeTransport(
        ['{"type":"choice_response","choice_id":0,"index":9}', GOLDEN_RESPONSE]
    )
    result = run_session(EX2, transport)
    server = [json.loads(m) for side, m in transport.log if side == "S"]
    assert server[1] == {
        "type": "error",
        "code": "index_out_of_range",
        "message": "requested index 9 of 3 alternatives",
    }
    assert server[2] == json.loads(GOLDEN_REQUEST)
    assert result.status == "success"


def test_malformed_message_gets_error_without_reissue():
    transport = FakeTransport(["garbage", GOLDEN_RESPONSE])
    result = run_session(EX2, transport)
    server = [json.loads(m) for side, m in transport.log if side == "S"]
    assert server[1]["type"] == "error"
    assert server[1]["code"] == "bad_message"
    # the outstanding request is not repeated for malformed chatter
    assert server[2]["type"] == "output"
    assert result.status == "success"


def test_abort_ends_with_failure_done_and_nothing_after():
    transport = FakeTransport(['{"type":"abort"}'])
    result = run_session(EX2, transport)
    assert result == SessionResult("failure", None)
    server = [m for side, m in transport.log if side == "S"]
    assert server[-1] == '{"type":"done","status":"failure","reason":"aborted"}'
    assert [m for m in server if json.loads(m)["type"] == "done"] == [server[-1]]
    assert transport.closed


def test_client_disconnect_is_reported_as_failure():
    transport = FakeTransport([])
    result = run_session(EX2, transport)
    assert result.status == "failure"
    last = json.loads(transport.log[-1][1])
    assert last["type"] == "done"
    assert last["status"] == "failure"
    assert "choice_source_exhausted" in last["reason"]


def test_session_result_matches_scripted_run():
    from choo.engine import run_program
    from choo.events import EventLog
    from choo.interaction import ScriptedSource

    transport = FakeTransport([GOLDEN_RESPONSE])
    via_protocol = run_session(EX2, transport)
    log = EventLog()
    via_script = run_program(EX2, ScriptedSource([1]), log)
    assert via_protocol.outcome == via_script


def test_no_interaction_session_needs_no_client_messages():
    program = parse_program((CORPUS / "example1.choo").read_text(encoding="utf-8"))
    transport = FakeTransport([])
    result = run_session(program, transport)
    assert result.status == "success"
    assert transport.log == [("S", GOLDEN_OUTPUT), ("S", GOLDEN_DONE)]


# --- stdio framing -------------------------------------------------------------


def test_serve_stdio_speaks_lines():
    import io

    stdin = io.StringIO(GOLDEN_RESPONSE + "\n")
    stdout = io.StringIO()
    result = serve_stdio(EX2, stdin, stdout)
    assert result.status == "success"
    assert stdout.getvalue() == f"{GOLDEN_REQUEST}\n{GOLDEN_OUTPUT}\n{GOLDEN_DONE}\n"


# --- tcp and websocket ----------------------------------------------------------


def _start_server(program, **kwargs):
    ready = {}
    ready_event = threading.Event()

    def on_ready(port):
        ready["port"] = port
        ready_event.set()

    thread = threading.Thread(
        target=serve_forever,
        args=(program, "127.0.0.1", 0),
        kwargs={"ready": on_ready, "max_sessions": 1, **kwargs},
        daemon=True,
    )
    thread.start()
    assert ready_event.wait(5)
    return ready["port"], thread


def test_tcp_session_round_trip():
    port, thread = _start_server(EX2)
    with socket.create_connection(("127.0.0.1", port), timeout=5) as conn:
        reader = conn.makefile("r", encoding="utf-8")
        assert reader.readline().rstrip("\n") == GOLDEN_REQUEST
        conn.sendall((GOLDEN_RESPONSE + "\n").encode("utf-8"))
        assert reader.readline().rstrip("\n") == GOLDEN_OUTPUT
        assert reader.readline().rstrip("\n") == GOLDEN_DONE
        # after done the server closes; nothing further arrives
        assert reader.readline() == ""
    thread.join(timeout=5)
    assert not thread.is_alive()


def _ws_handshake(conn: socket.socket) -> None:
    key = base64.b64encode(os.urandom(16)).decode("ascii")
    conn.sendall(
        (
            "GET / HTTP/1.1\r\n"
            "Host: 127.0.0.1\r\n"
            "Upgrade: websocket\r\n"
            "Connection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\n"
            "Sec-WebSocket-Version: 13\r\n"
            "\r\n"
        ).encode("latin-1")
    )
    # Read one byte at a time so nothing past the blank line is consumed:
    # the server's first frame may ride in the same segment as the 101.
    response = b""
    while not response.endswith(b"\r\n\r\n"):
        chunk = conn.recv(1)
        assert chunk, "server closed during handshake"
        response += chunk
    head = response[:-4].decode("latin-1")
    assert "101" in head.split("\r\n")[0]
    guid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
    expected = base64.b64encode(hashlib.sha1((key + guid).encode("ascii")).digest()).decode()
    assert f"Sec-WebSocket-Accept: {expected}" in head


def _ws_send_text(conn: socket.socket, text: str) -> None:
    payload = text.encode("utf-8")
    mask = os.urandom(4)
    header = bytes([0x81])
    if len(payload) < 126:
        header += bytes([0x80 | len(payload)])
    else:
        header += bytes([0x80 | 126]) + struct.pack("!H", len(payload))
    masked = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    conn.sendall(header + mask + masked)


def _ws_recv_text(conn: socket.socket) -> str | None:
    def exact(count):
        data = b""
        while len(data) < count:
            chunk = conn.recv(count - len(data))
            if not chunk:
                return None
            data += chunk
        return data

    head = exact(2)
    if head is None:
        return None
    opcode = head[0] & 0x0F
    length = head[1] & 0x7F
    if length == 126:
        length = struct.unpack("!H", exact(2))[0]
    elif length == 127:
        length = struct.unpack("!Q", exact(8))[0]
    data = exact(length) if length else b""
    if opcode == 0x8:
        return None
    return data.decode("utf-8")


def test_websocket_session_round_trip():
    port, thread = _start_server(EX2)
    with socket.create_connection(("127.0.0.1", port), timeout=5) as conn:
        _ws_handshake(conn)
        assert _ws_recv_text(conn) == GOLDEN_REQUEST
        _ws_send_text(conn, GOLDEN_RESPONSE)
        assert _ws_recv_text(conn) == GOLDEN_OUTPUT
        assert _ws_recv_text(conn) == GOLDEN_DONE
        assert _ws_recv_text(conn) is None  # close frame
    thread.join(timeout=5)


def test_websocket_error_reissue_over_frames():
    port, thread = _start_server(EX2)
    with socket.create_connection(("127.0.0.1", port), timeout=5) as conn:
        _ws_handshake(conn)
        assert _ws_recv_text(conn) == GOLDEN_REQUEST
        _ws_send_text(conn, '{"type":"choice_response","choice_id":0,"index":9}')
        error = json.loads(_ws_recv_text(conn))
        assert error["code"] == "index_out_of_range"
        assert _ws_recv_text(conn) == GOLDEN_REQUEST
        _ws_send_text(conn, GOLDEN_RESPONSE)
        assert _ws_recv_text(conn) == GOLDEN_OUTPUT
        assert _ws_recv_text(conn) == GOLDEN_DONE
    thread.join(timeout=5)


def test_non_websocket_http_request_is_rejected():
    port, thread = _start_server(EX2)
    with socket.create_connection(("127.0.0.1", port), timeout=5) as conn:
        conn.sendall(b"GET / HTTP/1.1\r\nHost: x\r\n\r\n")
        response = conn.recv(4096)
        assert response.startswith(b"HTTP/1.1 400")
    thread.join(timeout=5)
