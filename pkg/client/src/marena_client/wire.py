"""Client-side implementation of the engine wire format.

Independent of the engine package on purpose: the protocol document
(docs/wire-protocol.md in the engine repo) is the contract. Envelopes are
``[length u32 BE][msgType u8][requestId u32 BE][body]`` with
``length = 5 + len(body)``; bodies are a length-prefixed canonical JSON
document plus optional raw frame bytes.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .errors import ProtocolError

PROTOCOL_VERSION = 1
DEFAULT_PORT = 9431
MAX_PAYLOAD = 16 * 1024 * 1024

MSG_HELLO = 0x00
MSG_MAKE = 0x01
MSG_RESET = 0x02
MSG_STEP = 0x03
MSG_RENDER = 0x04
MSG_RECORD_START = 0x05
MSG_RECORD_STOP = 0x06
MSG_BOUNDS = 0x07
MSG_CLOSE = 0x08

MSG_OK = 0x40
MSG_OBS = 0x41
MSG_STEPRESULT = 0x42
MSG_FRAME = 0x43
MSG_ERROR = 0x7F

_DTYPES = {"uint8": np.uint8, "float32": np.dtype("<f4")}


def encode_doc(doc) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def encode_body(doc, frame: bytes = b"") -> bytes:
    blob = encode_doc(doc)
    return struct.pack(">I", len(blob)) + blob + frame


def decode_body(body: bytes):
    if len(body) < 4:
        raise ProtocolError("body missing document length prefix")
    (doc_len,) = struct.unpack_from(">I", body)
    if 4 + doc_len > len(body):
        raise ProtocolError("document overruns body")
    return json.loads(body[4 : 4 + doc_len].decode("utf-8")), body[4 + doc_len :]


def encode_envelope(msg_type: int, request_id: int, body: bytes = b"") -> bytes:
    return struct.pack(">IBI", 5 + len(body), msg_type, request_id) + body


def read_envelope(sock) -> tuple[int, int, bytes]:
    header = _read_exact(sock, 4)
    (length,) = struct.unpack(">I", header)
    if length < 5 or length > MAX_PAYLOAD + 5:
        raise ProtocolError(f"envelope length {length} out of range")
    rest = _read_exact(sock, length)
    return rest[0], struct.unpack_from(">I", rest, 1)[0], rest[5:]


def write_envelope(sock, msg_type: int, request_id: int, body: bytes = b"") -> None:
    sock.sendall(encode_envelope(msg_type, request_id, body))


def _read_exact(sock, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining:
        chunk = sock.recv(remaining)
        if not chunk:
            raise ConnectionError("server closed the connection")
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


# -- observation frame reassembly -------------------------------------------

def decode_frame(meta: dict, frame_bytes: bytes) -> np.ndarray:
    shape = tuple(meta["shape"])
    dtype = _DTYPES.get(meta["dtype"])
    if dtype is None:
        raise ProtocolError(f"unsupported frame dtype {meta['dtype']!r}")
    expected = int(np.prod(shape)) * np.dtype(dtype).itemsize
    if len(frame_bytes) != expected:
        raise ProtocolError(f"frame payload {len(frame_bytes)} bytes, expected {expected}")
    arr = np.frombuffer(frame_bytes, dtype=dtype).reshape(shape)
    return arr.astype(np.float32) if meta["dtype"] == "float32" else arr.copy()


def join_observation(doc, frame_bytes: bytes):
    """Rebuild an observation from its wire document and trailing bytes."""
    if isinstance(doc, dict) and set(doc) == {"__frame__"}:
        return decode_frame(doc["__frame__"], frame_bytes)
    if isinstance(doc, dict) and isinstance(doc.get("frame"), dict) and "__frame__" in doc["frame"]:
        out = dict(doc)
        out["frame"] = decode_frame(doc["frame"]["__frame__"], frame_bytes)
        return out
    return doc


def split_observation(obs):
    """Inverse of ``join_observation`` (used to re-serialize streams)."""
    if isinstance(obs, np.ndarray):
        return {"__frame__": _frame_meta(obs)}, _frame_bytes(obs)
    if isinstance(obs, dict) and isinstance(obs.get("frame"), np.ndarray):
        frame = obs["frame"]
        doc = {k: v for k, v in obs.items() if k != "frame"}
        doc["frame"] = {"__frame__": _frame_meta(frame)}
        return doc, _frame_bytes(frame)
    return obs, b""


def _frame_meta(frame: np.ndarray) -> dict:
    if frame.dtype == np.uint8:
        dtype = "uint8"
    elif frame.dtype == np.float32:
        dtype = "float32"
    else:
        raise ProtocolError(f"unsupported frame dtype {frame.dtype}")
    return {"shape": list(frame.shape), "dtype": dtype}


def _frame_bytes(frame: np.ndarray) -> bytes:
    if frame.dtype == np.float32:
        return np.ascontiguousarray(frame, dtype="<f4").tobytes()
    return np.ascontiguousarray(frame).tobytes()
