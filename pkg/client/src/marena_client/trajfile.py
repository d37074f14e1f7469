"""Reader for MARN trajectory recordings (format version 1).

Implemented against the published file format (docs/trajectory-format.md in
the engine repo): magic, big-endian u16 version, length-prefixed canonical
header document, length-prefixed step records, trailing BLAKE2b-64
checksum. This module never talks to the engine package.
"""

from __future__ import annotations

import hashlib
import json
import struct

from .errors import TrajectoryFormatError
from .wire import join_observation

MAGIC = b"MARN"
FORMAT_VERSION = 1
CHECKSUM_BYTES = 8


def _checksum(data: bytes) -> bytes:
    return hashlib.blake2b(data, digest_size=CHECKSUM_BYTES).digest()


def decode_record(body: bytes):
    """Decode one stored record body: (kind, obs, action, reward, done, info)."""
    if len(body) < 4:
        raise TrajectoryFormatError("truncated step record")
    (doc_len,) = struct.unpack_from(">I", body)
    if 4 + doc_len > len(body):
        raise TrajectoryFormatError("step document overruns its block")
    doc = json.loads(body[4 : 4 + doc_len].decode("utf-8"))
    obs = join_observation(doc["obs"], body[4 + doc_len :])
    return doc["kind"], obs, doc["action"], doc["reward"], doc["done"], doc["info"]


class TrajectoryFile:
    """A parsed, checksum-verified recording."""

    def __init__(self, path: str):
        self.path = path
        with open(path, "rb") as fh:
            blob = fh.read()
        if len(blob) < len(MAGIC) + 2 + 4 + CHECKSUM_BYTES:
            raise TrajectoryFormatError(f"{path}: file too short")
        if blob[:4] != MAGIC:
            raise TrajectoryFormatError(f"{path}: bad magic {blob[:4]!r}")
        (version,) = struct.unpack_from(">H", blob, 4)
        if version != FORMAT_VERSION:
            raise TrajectoryFormatError(f"{path}: unsupported format version {version}")
        if _checksum(blob[:-CHECKSUM_BYTES]) != blob[-CHECKSUM_BYTES:]:
            raise TrajectoryFormatError(f"{path}: checksum mismatch")
        self.checksum = int.from_bytes(blob[-CHECKSUM_BYTES:], "big")

        (header_len,) = struct.unpack_from(">I", blob, 6)
        offset = 10
        self.header = json.loads(blob[offset : offset + header_len].decode("utf-8"))
        offset += header_len

        records: list[bytes] = []
        end = len(blob) - CHECKSUM_BYTES
        while offset < end:
            (block_len,) = struct.unpack_from(">I", blob, offset)
            offset += 4
            if offset + block_len > end:
                raise TrajectoryFormatError(f"{path}: step block overruns file")
            records.append(blob[offset : offset + block_len])
            offset += block_len

        self.episodes: list[list[bytes]] = []
        cursor = 0
        for count in self.header["stepCounts"]:
            episode = records[cursor : cursor + count + 1]
            if len(episode) != count + 1:
                raise TrajectoryFormatError(f"{path}: header step counts exceed stored records")
            self.episodes.append(episode)
            cursor += count + 1
        if cursor != len(records) or self.header["episodeCount"] != len(self.episodes):
            raise TrajectoryFormatError(f"{path}: episode bookkeeping disagrees with records")

    def compat_key(self) -> bytes:
        doc = {
            "gameId": self.header["gameId"],
            "settings": self.header["settings"],
            "wrapperConfig": self.header["wrapperConfig"],
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")

    def record_digest(self, episode: int, record: int) -> str:
        """BLAKE2b-64 hex digest of a stored record (matches validate --dump)."""
        return hashlib.blake2b(self.episodes[episode][record], digest_size=8).hexdigest()
