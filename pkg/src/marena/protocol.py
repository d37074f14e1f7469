"""Framed binary wire protocol (documented in docs/wire-protocol.md).

Envelope: ``[length u32 BE][msgType u8][requestId u32 BE][body]`` where
``length`` counts everything after itself (5 + len(body)). Bodies carry a
length-prefixed canonical key-value document, optionally followed by raw
frame bytes: ``[docLen u32 BE][doc][frame bytes]``.

The protocol is versioned through the HELLO exchange; replies reuse the
request's requestId. All message and error codes here are frozen.
"""

from __future__ import annotations

import struct

from . import kvdoc
from .errors import MalformedEnvelope

PROTOCOL_VERSION = 1
DEFAULT_PORT = 9431
MAX_PAYLOAD = 16 * 1024 * 1024
HEADER_LEN = 9  # length + msgType + requestId

# request message types
MSG_HELLO = 0x00
MSG_MAKE = 0x01
MSG_RESET = 0x02
MSG_STEP = 0x03
MSG_RENDER = 0x04
MSG_RECORD_START = 0x05
MSG_RECORD_STOP = 0x06
MSG_BOUNDS = 0x07
MSG_CLOSE = 0x08

# reply message types
MSG_OK = 0x40
MSG_OBS = 0x41
MSG_STEPRESULT = 0x42
MSG_FRAME = 0x43
MSG_ERROR = 0x7F

REQUEST_NAMES = {
    MSG_HELLO: "HELLO",
    MSG_MAKE: "MAKE",
    MSG_RESET: "RESET",
    MSG_STEP: "STEP",
    MSG_RENDER: "RENDER",
    MSG_RECORD_START: "RECORD_START",
    MSG_RECORD_STOP: "RECORD_STOP",
    MSG_BOUNDS: "BOUNDS",
    MSG_CLOSE: "CLOSE",
}


def encode_envelope(msg_type: int, request_id: int, body: bytes = b"") -> bytes:
    if len(body) + 5 > MAX_PAYLOAD:
        raise MalformedEnvelope(f"payload {len(body) + 5} exceeds {MAX_PAYLOAD} bytes")
    return struct.pack(">IBI", 5 + len(body), msg_type, request_id) + body


def decode_envelope(data: bytes) -> tuple[int, int, bytes]:
    """Decode one complete envelope; returns (msgType, requestId, body)."""
    if len(data) < HEADER_LEN:
        raise MalformedEnvelope("envelope shorter than its header")
    length, msg_type, request_id = struct.unpack_from(">IBI", data)
    if length != len(data) - 4:
        raise MalformedEnvelope(f"envelope length field {length} != {len(data) - 4}")
    return msg_type, request_id, data[HEADER_LEN:]


def encode_body(doc, frame: bytes = b"") -> bytes:
    doc_bytes = kvdoc.encode(doc)
    return struct.pack(">I", len(doc_bytes)) + doc_bytes + frame


def decode_body(body: bytes):
    """Split a body into (document, trailing frame bytes)."""
    if len(body) < 4:
        raise MalformedEnvelope("body missing document length prefix")
    (doc_len,) = struct.unpack_from(">I", body)
    if 4 + doc_len > len(body):
        raise MalformedEnvelope("document overruns body")
    try:
        doc = kvdoc.decode(body[4 : 4 + doc_len])
    except ValueError as exc:
        raise MalformedEnvelope(f"body document is not valid: {exc}") from exc
    return doc, body[4 + doc_len :]


def read_envelope(sock) -> tuple[int, int, bytes]:
    """Read exactly one envelope from a socket; returns (msgType, requestId, body).

    Raises ConnectionError on EOF at a message boundary and
    MalformedEnvelope on framing violations.
    """
    header = _read_exact(sock, 4, eof_ok=True)
    (length,) = struct.unpack(">I", header)
    if length < 5 or length + 4 > MAX_PAYLOAD + 9:
        raise MalformedEnvelope(f"envelope length {length} out of range")
    rest = _read_exact(sock, length)
    msg_type = rest[0]
    (request_id,) = struct.unpack_from(">I", rest, 1)
    return msg_type, request_id, rest[5:]


def write_envelope(sock, msg_type: int, request_id: int, body: bytes = b"") -> None:
    sock.sendall(encode_envelope(msg_type, request_id, body))


def _read_exact(sock, n: int, eof_ok: bool = False) -> bytes:
    chunks = []
    remaining = n
    while remaining:
        chunk = sock.recv(remaining)
        if not chunk:
            if eof_ok and remaining == n:
                raise ConnectionError("peer closed the connection")
            raise MalformedEnvelope("connection closed mid-envelope")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)
