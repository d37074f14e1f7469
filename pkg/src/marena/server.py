"""Engine server: hosts environment sessions over the wire protocol.

One connection owns at most one session; sessions are fully isolated (no
shared state beyond read-only game definitions) and handled strictly
serially within a connection. Idle connections are reaped via a socket
timeout. See docs/wire-protocol.md for the message catalogue.
"""

from __future__ import annotations

import logging
import socket
import threading

from . import protocol
from .env import make
from .errors import (
    ArenaError,
    BindFailure,
    MalformedEnvelope,
    ProtocolStateError,
    SessionLimit,
    VersionMismatch,
)
from .obscodec import split_frame
from .trajectory import TrajectoryRecorder
from .wrappers import WrapperConfig

log = logging.getLogger("marena.server")


class Session:
    """Per-connection protocol state machine."""

    def __init__(self):
        self.env = None
        self.recorder: TrajectoryRecorder | None = None
        self.closed = False

    def handle(self, msg_type: int, body: bytes) -> tuple[int, bytes]:
        """Dispatch one request; returns (reply msgType, reply body)."""
        if msg_type == protocol.MSG_HELLO:
            doc, _ = protocol.decode_body(body)
            if doc.get("protocol") != protocol.PROTOCOL_VERSION:
                raise VersionMismatch(
                    f"server speaks protocol {protocol.PROTOCOL_VERSION}, client sent {doc.get('protocol')!r}"
                )
            return protocol.MSG_OK, protocol.encode_body({"protocol": protocol.PROTOCOL_VERSION})

        if msg_type == protocol.MSG_MAKE:
            if self.env is not None:
                raise ProtocolStateError("session already has an environment")
            doc, _ = protocol.decode_body(body)
            wrappers = doc.get("wrappers") or {}
            self.env = make(
                doc["gameId"],
                doc.get("settings") or {},
                WrapperConfig.from_doc(wrappers) if wrappers else None,
            )
            action_space = self.env.action_space
            return protocol.MSG_OK, protocol.encode_body(
                {
                    "actionSpace": action_space.describe(),
                    "observationSpace": self.env.observation_space,
                }
            )

        if self.env is None:
            raise ProtocolStateError(
                f"{protocol.REQUEST_NAMES.get(msg_type, hex(msg_type))} requires MAKE first"
            )
        target = self.recorder if self.recorder is not None else self.env

        if msg_type == protocol.MSG_RESET:
            obs_doc, frame = split_frame(target.reset())
            return protocol.MSG_OBS, protocol.encode_body({"observation": obs_doc}, frame)

        if msg_type == protocol.MSG_STEP:
            doc, _ = protocol.decode_body(body)
            obs, reward, done, info = target.step(doc["action"])
            obs_doc, frame = split_frame(obs)
            return protocol.MSG_STEPRESULT, protocol.encode_body(
                {"observation": obs_doc, "reward": reward, "done": done, "info": info}, frame
            )

        if msg_type == protocol.MSG_RENDER:
            frame = self.env.render()
            meta = {"shape": list(frame.shape), "dtype": "uint8"}
            return protocol.MSG_FRAME, protocol.encode_body(meta, frame.tobytes())

        if msg_type == protocol.MSG_RECORD_START:
            if self.recorder is not None:
                raise ProtocolStateError("recording already in progress")
            doc, _ = protocol.decode_body(body)
            self.recorder = TrajectoryRecorder(self.env, doc["filePath"], doc.get("userName", ""))
            return protocol.MSG_OK, protocol.encode_body({})

        if msg_type == protocol.MSG_RECORD_STOP:
            if self.recorder is None:
                raise ProtocolStateError("no recording in progress")
            header = self.recorder.finalize()
            self.recorder = None
            return protocol.MSG_OK, protocol.encode_body(
                {"episodeCount": header["episodeCount"], "stepCounts": header["stepCounts"]}
            )

        if msg_type == protocol.MSG_BOUNDS:
            lo, hi = self.env.episode_bounds()
            return protocol.MSG_OK, protocol.encode_body({"min": lo, "max": hi})

        if msg_type == protocol.MSG_CLOSE:
            self.env.close()
            self.closed = True
            return protocol.MSG_OK, protocol.encode_body({})

        raise MalformedEnvelope(f"unknown message type {hex(msg_type)}")


def _error_body(exc: Exception) -> bytes:
    code = exc.code if isinstance(exc, ArenaError) else 99
    return protocol.encode_body({"code": code, "message": str(exc)})


class ArenaServer:
    """Threaded TCP server; ``start``/``stop`` for embedding, ``serve`` to block."""

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = protocol.DEFAULT_PORT,
        max_sessions: int = 16,
        idle_timeout: float = 300.0,
    ):
        self.host = host
        self.max_sessions = max_sessions
        self.idle_timeout = idle_timeout
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            self._sock.bind((host, port))
        except OSError as exc:
            raise BindFailure(f"cannot bind {host}:{port}: {exc}") from exc
        self._sock.listen(64)
        self.port = self._sock.getsockname()[1]
        self._stop = threading.Event()
        self._active = 0
        self._lock = threading.Lock()
        self._accept_thread: threading.Thread | None = None

    def start(self) -> None:
        self._accept_thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._accept_thread.start()

    def serve(self) -> None:
        """Run until interrupted (SIGINT) or ``stop`` is called elsewhere."""
        self.start()
        try:
            while not self._stop.wait(0.5):
                pass
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()

    def stop(self) -> None:
        self._stop.set()
        try:
            self._sock.close()
        except OSError:
            pass
        if self._accept_thread is not None:
            self._accept_thread.join(timeout=2.0)

    def _accept_loop(self) -> None:
        while not self._stop.is_set():
            try:
                conn, addr = self._sock.accept()
            except OSError:
                break
            with self._lock:
                if self._active >= self.max_sessions:
                    try:
                        protocol.write_envelope(
                            conn, protocol.MSG_ERROR, 0, _error_body(SessionLimit("session limit reached"))
                        )
                    except OSError:
                        pass
                    conn.close()
                    continue
                self._active += 1
            threading.Thread(target=self._serve_connection, args=(conn, addr), daemon=True).start()

    def _serve_connection(self, conn: socket.socket, addr) -> None:
        session = Session()
        conn.settimeout(self.idle_timeout)
        try:
            while not session.closed:
                try:
                    msg_type, request_id, body = protocol.read_envelope(conn)
                except socket.timeout:
                    log.info("reaping idle session from %s", addr)
                    break
                except ConnectionError:
                    break
                except MalformedEnvelope as exc:
                    # framing is broken; report and drop the connection
                    try:
                        protocol.write_envelope(conn, protocol.MSG_ERROR, 0, _error_body(exc))
                    except OSError:
                        pass
                    break
                try:
                    reply_type, reply_body = session.handle(msg_type, body)
                except ArenaError as exc:
                    reply_type, reply_body = protocol.MSG_ERROR, _error_body(exc)
                except Exception as exc:  # session-local crash isolation
                    log.exception("session error from %s", addr)
                    reply_type, reply_body = protocol.MSG_ERROR, _error_body(exc)
                protocol.write_envelope(conn, reply_type, request_id, reply_body)
        except OSError:
            pass
        finally:
            if session.env is not None and not session.closed:
                session.env.close()
            conn.close()
            with self._lock:
                self._active -= 1


def serve(bind_address: str = "127.0.0.1", port: int = protocol.DEFAULT_PORT, max_sessions: int = 16,
          idle_timeout: float = 300.0) -> None:
    """Blocking entry point used by the CLI."""
    server = ArenaServer(bind_address, port, max_sessions, idle_timeout)
    log.info("listening on %s:%d (max sessions %d)", server.host, server.port, max_sessions)
    server.serve()
