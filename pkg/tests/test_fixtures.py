"""Frozen conformance fixtures: the implementation must keep reproducing them."""

from __future__ import annotations

import struct
from pathlib import Path

from marena import protocol
from marena.server import Session
from marena.trajectory import ReplayEnv, TrajectoryFile

FIXTURES = Path(__file__).parent / "fixtures"


def read_transcript(path: Path):
    """Yields (direction, envelope bytes); direction 0 = request, 1 = reply."""
    blob = path.read_bytes()
    offset = 0
    while offset < len(blob):
        direction, length = struct.unpack_from(">BI", blob, offset)
        offset += 5
        yield direction, blob[offset : offset + length]
        offset += length


class TestGoldenTranscript:
    def test_replays_byte_for_byte(self):
        session = Session()
        exchanges = list(read_transcript(FIXTURES / "transcript_duel.bin"))
        requests = [e for d, e in exchanges if d == 0]
        expected_replies = [e for d, e in exchanges if d == 1]
        assert len(requests) == 5 and len(expected_replies) == 5
        for request, expected in zip(requests, expected_replies):
            msg_type, request_id, body = protocol.decode_envelope(request)
            reply_type, reply_body = session.handle(msg_type, body)
            reply = protocol.encode_envelope(reply_type, request_id, reply_body)
            assert reply == expected, f"reply to {protocol.REQUEST_NAMES.get(msg_type)} drifted"

    def test_transcript_covers_the_basic_verbs(self):
        kinds = [
            protocol.decode_envelope(e)[0]
            for d, e in read_transcript(FIXTURES / "transcript_duel.bin")
            if d == 0
        ]
        assert kinds == [
            protocol.MSG_HELLO,
            protocol.MSG_MAKE,
            protocol.MSG_RESET,
            protocol.MSG_STEP,
            protocol.MSG_CLOSE,
        ]


class TestConformanceTrajectory:
    def test_parses_and_verifies(self):
        traj = TrajectoryFile(str(FIXTURES / "conformance.marn"))
        assert traj.header["formatVersion"] == 1
        assert traj.header["gameId"] == "duel"
        assert traj.header["episodeCount"] == 1
        assert traj.header["userName"] == "fixture"
        assert traj.header["stepCounts"] == [len(traj.episodes[0]) - 1]

    def test_replays_to_done(self):
        replay = ReplayEnv([str(FIXTURES / "conformance.marn")])
        obs = replay.reset()
        assert obs["P1"]["health"] == [208]
        steps = 0
        done = False
        while not done:
            obs, reward, done, info = replay.step(0)
            steps += 1
        assert steps == replay.header["stepCounts"][0]
        assert info["episodeDone"] is True
