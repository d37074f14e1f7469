"""Observation serialization shared by trajectory files and the wire protocol.

An observation splits into a JSON-safe document plus raw frame bytes: the
frame leaf is replaced by ``{"__frame__": {"shape": [...], "dtype": ...}}``
and its pixels ride separately (row-major, uint8 or little-endian float32).
A hardcore observation is the frame itself, so its document is just the
placeholder. Encoding then decoding then re-encoding is byte-stable, which
is what stream-equality checks rely on.
"""

from __future__ import annotations

import numpy as np

from .errors import TrajectoryFormatError

_DTYPES = {"uint8": np.uint8, "float32": np.dtype("<f4")}


def _frame_meta(frame: np.ndarray) -> dict:
    if frame.dtype == np.uint8:
        dtype = "uint8"
    elif frame.dtype == np.float32:
        dtype = "float32"
    else:
        raise TrajectoryFormatError(f"unsupported frame dtype {frame.dtype}")
    return {"__frame__": {"shape": list(frame.shape), "dtype": dtype}}


def _frame_bytes(frame: np.ndarray) -> bytes:
    if frame.dtype == np.float32:
        return np.ascontiguousarray(frame, dtype="<f4").tobytes()
    return np.ascontiguousarray(frame).tobytes()


def split_frame(obs):
    """Return (document, frame bytes); frame bytes are b"" when absent."""
    if isinstance(obs, np.ndarray):
        return _frame_meta(obs), _frame_bytes(obs)
    if isinstance(obs, dict) and isinstance(obs.get("frame"), np.ndarray):
        frame = obs["frame"]
        doc = {k: v for k, v in obs.items() if k != "frame"}
        doc["frame"] = _frame_meta(frame)
        return doc, _frame_bytes(frame)
    return obs, b""


def join_frame(doc, frame_bytes: bytes):
    """Inverse of ``split_frame``."""
    if isinstance(doc, dict) and "__frame__" in doc and len(doc) == 1:
        return _decode_frame(doc["__frame__"], frame_bytes)
    if isinstance(doc, dict) and isinstance(doc.get("frame"), dict) and "__frame__" in doc["frame"]:
        out = dict(doc)
        out["frame"] = _decode_frame(doc["frame"]["__frame__"], frame_bytes)
        return out
    return doc


def _decode_frame(meta: dict, frame_bytes: bytes) -> np.ndarray:
    shape = tuple(meta["shape"])
    dtype = _DTYPES.get(meta["dtype"])
    if dtype is None:
        raise TrajectoryFormatError(f"unsupported frame dtype {meta['dtype']!r}")
    expected = int(np.prod(shape)) * np.dtype(dtype).itemsize
    if len(frame_bytes) != expected:
        raise TrajectoryFormatError(
            f"frame payload is {len(frame_bytes)} bytes, expected {expected} for {shape} {meta['dtype']}"
        )
    arr = np.frombuffer(frame_bytes, dtype=dtype).reshape(shape)
    if meta["dtype"] == "float32":
        arr = arr.astype(np.float32, copy=False)
    return arr.copy()  # writable, owned
