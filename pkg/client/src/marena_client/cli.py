"""marena-play: interactive play and recording viewer for engine servers."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ClientError
from .play import play, replay_view
from .sdk import default_address


def _address(value: str | None):
    if value is None:
        return default_address()
    host, _, port = value.rpartition(":")
    return (host or "127.0.0.1", int(port))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="marena-play", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("play", help="play live against the engine (records optionally)")
    p.add_argument("--game", default="duel")
    p.add_argument("--settings", help="JSON settings document file")
    p.add_argument("--record", help="server-side path for the trajectory recording")
    p.add_argument("--user", default="player", help="user name stored in recordings")
    p.add_argument("--two-player", action="store_true", help="local 2P: second key cluster")
    p.add_argument("--test-input", help="scripted input file (one JSON action per line); no display")
    p.add_argument("--episodes", type=int, default=1)
    p.add_argument("--address", help="host:port of the engine server")

    v = sub.add_parser("view", help="play back a recording visually")
    v.add_argument("--file", required=True)
    v.add_argument("--no-pace", action="store_true")
    v.add_argument("--no-display", action="store_true")

    args = parser.parse_args(argv)
    try:
        if args.command == "play":
            settings = None
            if args.settings:
                with open(args.settings, "r", encoding="utf-8") as fh:
                    settings = json.load(fh)
            summary = play(
                args.game,
                settings,
                record_path=args.record,
                user_name=args.user,
                two_player=args.two_player,
                input_script=args.test_input,
                episodes=args.episodes,
                address=_address(args.address),
            )
            print(json.dumps(summary))
            return 0
        from .play import AnsiDisplay, NullDisplay

        summary = replay_view(
            args.file,
            display=NullDisplay() if args.no_display else AnsiDisplay(),
            pace=not args.no_pace,
        )
        print(json.dumps(summary))
        return 0
    except ClientError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
