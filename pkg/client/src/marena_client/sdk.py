"""Remote environment client: the standard episodic loop over the wire.

    import marena_client

    env = marena_client.make("duel")
    obs = env.reset()
    while True:
        env.render()
        obs, rew, done, info = env.step(env.action_space.sample())
        if done:
            break
    env.close()

Calls are blocking and strictly serial, matching the server's session
contract. Reconnection is the caller's job.
"""

from __future__ import annotations

import os
import random
import socket

from . import wire
from .errors import (
    CODE_USE_AFTER_CLOSE,
    ConnectionFailed,
    ProtocolError,
    ServerError,
    UseAfterClose,
)


class DiscreteSpace:
    """Mirror of a discrete action space: integers in [0, n)."""

    def __init__(self, n: int, rng: random.Random):
        self.n = n
        self._rng = rng

    def sample(self) -> int:
        return self._rng.randrange(self.n)

    def contains(self, action) -> bool:
        return isinstance(action, int) and 0 <= action < self.n


class MultiDiscreteSpace:
    """Mirror of a multi-discrete action space: one index per component."""

    def __init__(self, sizes, rng: random.Random):
        self.sizes = list(sizes)
        self._rng = rng

    def sample(self) -> list[int]:
        return [self._rng.randrange(n) for n in self.sizes]

    def contains(self, action) -> bool:
        try:
            return len(action) == len(self.sizes) and all(
                0 <= a < n for a, n in zip(action, self.sizes)
            )
        except TypeError:
            return False


class KeyedSpace:
    """2P action space: one sub-space per player key."""

    def __init__(self, keys, per_player):
        self.keys = list(keys)
        self.per_player = per_player

    def __getitem__(self, key):
        if key not in self.keys:
            raise KeyError(key)
        return self.per_player

    def sample(self) -> dict:
        return {key: self.per_player.sample() for key in self.keys}


def _build_action_space(desc: dict, rng: random.Random):
    if "keys" in desc:
        return KeyedSpace(desc["keys"], _build_action_space(desc["perPlayer"], rng))
    if desc["variant"] == "discrete":
        return DiscreteSpace(desc["discreteSize"], rng)
    return MultiDiscreteSpace(desc["multiDiscreteSizes"], rng)


class RemoteEnv:
    """One environment session on a remote engine server."""

    def __init__(self, game_id: str, settings: dict | None, wrappers: dict | None,
                 address: tuple[str, int], sample_seed: int | None = None):
        try:
            self._sock = socket.create_connection(address, timeout=60)
        except OSError as exc:
            raise ConnectionFailed(
                f"cannot reach engine server at {address[0]}:{address[1]} "
                f"({exc}); is `marena serve` running?"
            ) from exc
        self._request_id = 0
        self._closed = False
        self._call(wire.MSG_HELLO, {"protocol": wire.PROTOCOL_VERSION})
        make_doc: dict = {"gameId": game_id}
        if settings:
            make_doc["settings"] = dict(settings)
        if wrappers:
            make_doc["wrappers"] = dict(wrappers)
        reply, _ = self._call(wire.MSG_MAKE, make_doc)
        self.action_space_desc = reply["actionSpace"]
        self.observation_space = reply["observationSpace"]
        seed = sample_seed if sample_seed is not None else (settings or {}).get("seed", 0)
        self.action_space = _build_action_space(self.action_space_desc, random.Random(seed))

    # -- protocol plumbing ---------------------------------------------------

    def _call(self, msg_type: int, doc) -> tuple[dict, bytes]:
        if self._closed:
            raise UseAfterClose("client environment is closed")
        self._request_id += 1
        wire.write_envelope(self._sock, msg_type, self._request_id, wire.encode_body(doc))
        reply_type, reply_id, body = wire.read_envelope(self._sock)
        if reply_id != self._request_id:
            raise ProtocolError(f"reply id {reply_id} for request {self._request_id}")
        reply_doc, frame = wire.decode_body(body)
        if reply_type == wire.MSG_ERROR:
            code = reply_doc.get("code", 99)
            if code == CODE_USE_AFTER_CLOSE:
                raise UseAfterClose(reply_doc.get("message", ""))
            raise ServerError(code, reply_doc.get("message", ""))
        return reply_doc, frame

    # -- episodic API ----------------------------------------------------------

    def reset(self):
        doc, frame = self._call(wire.MSG_RESET, {})
        return wire.join_observation(doc["observation"], frame)

    def step(self, action):
        doc, frame = self._call(wire.MSG_STEP, {"action": action})
        obs = wire.join_observation(doc["observation"], frame)
        return obs, doc["reward"], doc["done"], doc["info"]

    def render(self):
        meta, frame = self._call(wire.MSG_RENDER, {})
        return wire.decode_frame(meta, frame)

    def bounds(self) -> tuple[float, float]:
        doc, _ = self._call(wire.MSG_BOUNDS, {})
        return doc["min"], doc["max"]

    def record_start(self, file_path: str, user_name: str) -> None:
        self._call(wire.MSG_RECORD_START, {"filePath": file_path, "userName": user_name})

    def record_stop(self) -> dict:
        doc, _ = self._call(wire.MSG_RECORD_STOP, {})
        return doc

    def close(self) -> None:
        if self._closed:
            return
        try:
            self._call(wire.MSG_CLOSE, {})
        except (ConnectionError, OSError, ProtocolError):
            pass
        self._closed = True
        try:
            self._sock.close()
        except OSError:
            pass


def default_address() -> tuple[str, int]:
    return ("127.0.0.1", int(os.environ.get("ARENA_PORT", wire.DEFAULT_PORT)))


def make(game_id: str, settings: dict | None = None, wrappers: dict | None = None,
         address: tuple[str, int] | None = None) -> RemoteEnv:
    """Connect to an engine server and create an environment session."""
    return RemoteEnv(game_id, settings, wrappers, address or default_address())
