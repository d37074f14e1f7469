"""Demonstration recording and replay.

File layout (bit-exact, see docs/trajectory-format.md and the conformance
fixture): magic ``MARN``, big-endian u16 format version, a length-prefixed
canonical header document, the episode step records (each a length-prefixed
block holding a step document plus raw frame bytes), and a trailing 64-bit
checksum (BLAKE2b-64) over all preceding bytes.

Observations are stored post-wrapper: exactly what the recorded agent saw.
The header carries the full settings + wrapper configuration, so spaces are
reconstructible and a raw re-simulation remains possible.
"""

from __future__ import annotations

import hashlib
import struct
import warnings

from . import kvdoc
from .errors import (
    BadShard,
    ExhaustedTrajectories,
    IncompatibleRecordings,
    NoCompleteEpisode,
    NotReset,
    PathNotWritable,
    TrajectoryFormatError,
)
from .obscodec import join_frame, split_frame
from .wrappers import Wrapper

MAGIC = b"MARN"
FORMAT_VERSION = 1
CHECKSUM_BYTES = 8


def _checksum(data: bytes) -> bytes:
    return hashlib.blake2b(data, digest_size=CHECKSUM_BYTES).digest()


def encode_record(kind: str, obs, action, reward, done, info) -> bytes:
    """One length-prefixed step block: [u32 total][u32 docLen][doc][frame]."""
    obs_doc, frame = split_frame(obs)
    doc = kvdoc.encode(
        {"kind": kind, "obs": obs_doc, "action": action, "reward": reward, "done": done, "info": info}
    )
    body = struct.pack(">I", len(doc)) + doc + frame
    return struct.pack(">I", len(body)) + body


def decode_record(body: bytes):
    """Inverse of ``encode_record`` given the block body (without the outer length)."""
    if len(body) < 4:
        raise TrajectoryFormatError("truncated step record")
    (doc_len,) = struct.unpack_from(">I", body)
    if 4 + doc_len > len(body):
        raise TrajectoryFormatError("step document overruns its block")
    doc = kvdoc.decode(body[4 : 4 + doc_len])
    obs = join_frame(doc["obs"], body[4 + doc_len :])
    return doc["kind"], obs, doc["action"], doc["reward"], doc["done"], doc["info"]


class TrajectoryRecorder(Wrapper):
    """Wraps a configured env and appends every transition to a file buffer.

    ``finalize`` writes the file; a partially recorded episode at finalize
    (or at a mid-episode reset) is dropped with a warning.
    """

    def __init__(self, env, file_path: str, user_name: str):
        super().__init__(env)
        self.file_path = file_path
        self.user_name = user_name
        try:
            self._fh = open(file_path, "wb")
        except OSError as exc:
            raise PathNotWritable(f"cannot write {file_path!r}: {exc}") from exc
        self._episodes: list[list[bytes]] = []
        self._current: list[bytes] | None = None
        self._finalized = False

    def reset(self):
        if self._current is not None:
            warnings.warn("trajectory recorder: mid-episode reset, dropping partial episode")
        obs = self.env.reset()
        self._current = [encode_record("reset", obs, None, 0.0, False, {})]
        return obs

    def step(self, action):
        obs, reward, done, info = self.env.step(action)
        if self._current is not None and not self._finalized:
            self._current.append(encode_record("step", obs, action, reward, done, info))
            if done:
                self._episodes.append(self._current)
                self._current = None
        return obs, reward, done, info

    def finalize(self) -> dict:
        """Write the trajectory file; returns the header document."""
        if self._current is not None:
            warnings.warn("trajectory recorder: dropping unfinished episode at finalize")
            self._current = None
        if not self._episodes:
            self._fh.close()
            raise NoCompleteEpisode("no completed episode to write")
        header = {
            "formatVersion": FORMAT_VERSION,
            "gameId": self.env.settings.game_id,
            "settings": self.env.settings.to_doc(),
            "wrapperConfig": self._wrapper_doc(),
            "userName": self.user_name,
            "episodeCount": len(self._episodes),
            "stepCounts": [len(ep) - 1 for ep in self._episodes],  # reset record excluded
        }
        header_bytes = kvdoc.encode(header)
        payload = bytearray()
        payload += MAGIC
        payload += struct.pack(">H", FORMAT_VERSION)
        payload += struct.pack(">I", len(header_bytes))
        payload += header_bytes
        for episode in self._episodes:
            for record in episode:
                payload += record
        payload += _checksum(bytes(payload))
        self._fh.write(payload)
        self._fh.close()
        self._finalized = True
        header["checksum"] = int.from_bytes(payload[-CHECKSUM_BYTES:], "big")
        return header

    def _wrapper_doc(self) -> dict:
        return getattr(self.env, "config_doc", {})


def open_recorder(env, file_path: str, user_name: str) -> TrajectoryRecorder:
    return TrajectoryRecorder(env, file_path, user_name)


class TrajectoryFile:
    """Parsed, checksum-verified recording."""

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
        self.header = kvdoc.decode(blob[offset : offset + header_len])
        offset += header_len

        records = []
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
            episode = records[cursor : cursor + count + 1]  # reset record + steps
            if len(episode) != count + 1:
                raise TrajectoryFormatError(f"{path}: header step counts exceed stored records")
            self.episodes.append(episode)
            cursor += count + 1
        if cursor != len(records):
            raise TrajectoryFormatError(f"{path}: {len(records) - cursor} trailing records not in header")
        if self.header["episodeCount"] != len(self.episodes):
            raise TrajectoryFormatError(f"{path}: episodeCount disagrees with stepCounts")

    def compat_key(self):
        return kvdoc.encode(
            {
                "gameId": self.header["gameId"],
                "settings": self.header["settings"],
                "wrapperConfig": self.header["wrapperConfig"],
            }
        )


class ReplayEnv:
    """Steps through recorded episodes, ignoring submitted actions.

    Episodes from all files are indexed globally in list order and dealt
    round-robin: this instance serves episode indices congruent to ``rank``
    modulo ``total_cpus``. The executed human action is surfaced in
    ``info["replayAction"]``.
    """

    def __init__(self, traj_files_list: list[str], total_cpus: int = 1, rank: int = 0):
        if total_cpus < 1 or not 0 <= rank < total_cpus:
            raise BadShard(f"rank must satisfy 0 <= rank < total_cpus, got {rank}/{total_cpus}")
        if not traj_files_list:
            raise TrajectoryFormatError("no trajectory files given")
        self.files = [TrajectoryFile(p) for p in traj_files_list]
        key = self.files[0].compat_key()
        for f in self.files[1:]:
            if f.compat_key() != key:
                raise IncompatibleRecordings(
                    f"{f.path} was recorded with different settings than {self.files[0].path}"
                )
        all_episodes = [ep for f in self.files for ep in f.episodes]
        self.episodes = all_episodes[rank::total_cpus]
        self.header = self.files[0].header
        self._episode_cursor = -1
        self._step_cursor = 0
        self._in_episode = False

    @property
    def episodes_remaining(self) -> int:
        return len(self.episodes) - self._episode_cursor - 1

    def reset(self):
        self._episode_cursor += 1
        if self._episode_cursor >= len(self.episodes):
            raise ExhaustedTrajectories("no recorded episodes remaining")
        kind, obs, _, _, _, _ = decode_record(self.episodes[self._episode_cursor][0])
        if kind != "reset":
            raise TrajectoryFormatError("episode does not start with a reset record")
        self._step_cursor = 1
        self._in_episode = True
        return obs

    def step(self, action=0):
        del action  # the stream is already written; submitted actions are ignored
        if self._episode_cursor >= len(self.episodes):
            raise ExhaustedTrajectories("no recorded episodes remaining")
        if not self._in_episode or self._step_cursor >= len(self.episodes[self._episode_cursor]):
            if self._episode_cursor + 1 >= len(self.episodes):
                raise ExhaustedTrajectories("no recorded episodes remaining")
            raise NotReset("episode finished; call reset()")
        episode = self.episodes[self._episode_cursor]
        kind, obs, action_rec, reward, done, info = decode_record(episode[self._step_cursor])
        if kind != "step":
            raise TrajectoryFormatError("unexpected record kind inside episode")
        self._step_cursor += 1
        info = dict(info)
        info["replayAction"] = action_rec
        if done:
            self._in_episode = False
        return obs, reward, done, info

    def close(self) -> None:
        self.episodes = []
        self._episode_cursor = 0
        self._in_episode = False

    # reconstruct spaces exactly as the recording env reported them
    def _spaces(self):
        from .env import make
        from .wrappers import WrapperConfig

        env = make(
            self.header["gameId"],
            dict(self.header["settings"]),
            WrapperConfig.from_doc(self.header["wrapperConfig"]),
        )
        try:
            return env.action_space, env.observation_space
        finally:
            env.close()

    @property
    def action_space(self):
        return self._spaces()[0]

    @property
    def observation_space(self):
        return self._spaces()[1]
