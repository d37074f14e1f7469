"""Operator command line: rollouts, bound reports, benchmarks, validation.

Every command prints human-readable text plus one stable ``key=value`` line
per metric (dotted keys, e.g. ``rollout.mean_reward=3.5``) so reports are
machine-parseable. Exit code 0 means every assertion passed.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import random
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import psutil

from . import kvdoc, protocol
from .env import episode_reward_bounds, make
from .errors import ArenaError, ContinueNotZero
from .gamedef import load_game
from .settings import EnvironmentSettings
from .trajectory import TrajectoryFile
from .wrappers import WrapperConfig


def _emit(key: str, value) -> None:
    print(f"{key}={value}")


def _load_settings_file(path: str | None) -> tuple[dict, dict]:
    """Settings files use the MAKE document format: settings + wrappers."""
    if path is None:
        return {}, {}
    doc = kvdoc.load_file(path)
    if "settings" in doc or "wrappers" in doc:
        return doc.get("settings") or {}, doc.get("wrappers") or {}
    return doc, {}


def _build_env(game: str, settings_doc: dict, wrappers_doc: dict, seed: int | None = None):
    settings = EnvironmentSettings.from_doc(dict(settings_doc), game_id=game)
    if seed is not None:
        settings.seed = seed
    config = WrapperConfig.from_doc(wrappers_doc) if wrappers_doc else None
    return make(game, settings, config)


def _run_episode(env, rng: random.Random, max_steps: int = 1_000_000) -> tuple[float, int]:
    """One uniform-random episode; returns (cumulative reward, steps)."""
    space = env.action_space
    env.reset()
    total = 0.0
    steps = 0
    done = False
    while not done and steps < max_steps:
        _, reward, done, _ = env.step(space.sample(rng))
        total += reward["P1"] if isinstance(reward, dict) else reward
        steps += 1
    return total, steps


def cmd_rollout(args) -> int:
    settings_doc, wrappers_doc = _load_settings_file(args.settings)
    results: list[tuple[float, int]] = []

    def run_instance(index: int, episodes: int) -> list[tuple[float, int]]:
        env = _build_env(args.game, settings_doc, wrappers_doc, seed=args.seed + index)
        rng = random.Random(args.seed + index)
        out = [_run_episode(env, rng) for _ in range(episodes)]
        env.close()
        return out

    if args.parallel > 1:
        share = [args.episodes // args.parallel] * args.parallel
        for i in range(args.episodes % args.parallel):
            share[i] += 1
        with ThreadPoolExecutor(max_workers=args.parallel) as pool:
            futures = [pool.submit(run_instance, i, n) for i, n in enumerate(share) if n]
            for future in futures:
                results.extend(future.result())
    else:
        results = run_instance(0, args.episodes)

    env = _build_env(args.game, settings_doc, wrappers_doc, seed=args.seed)
    check_bounds = env.settings.continue_game == 0.0
    lo, hi = env.episode_bounds() if check_bounds else (None, None)
    env.close()

    violations = 0
    for i, (reward, steps) in enumerate(results):
        flag = ""
        if check_bounds and not lo <= reward <= hi:
            violations += 1
            flag = "  BOUNDS VIOLATION"
        print(f"episode {i:4d}: reward {reward:10.3f}  steps {steps:6d}{flag}")
    mean_reward = sum(r for r, _ in results) / len(results)
    mean_steps = sum(s for _, s in results) / len(results)
    print(f"\n{len(results)} episodes, mean reward {mean_reward:.3f}, mean length {mean_steps:.1f}")
    if check_bounds:
        print(f"episode reward bounds: [{lo}, {hi}], violations: {violations}")
    _emit("rollout.episodes", len(results))
    _emit("rollout.mean_reward", f"{mean_reward:.6f}")
    _emit("rollout.mean_steps", f"{mean_steps:.2f}")
    _emit("rollout.bound_violations", violations if check_bounds else "n/a")
    return 1 if violations else 0


def _fmt_bound(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else f"{value:.6f}"


def cmd_bounds(args) -> int:
    settings_doc, wrappers_doc = _load_settings_file(args.settings)
    gdef = load_game(args.game)
    settings = EnvironmentSettings.from_doc(dict(settings_doc), game_id=args.game)
    settings.validate(gdef)
    try:
        lo, hi = episode_reward_bounds(gdef, settings)
    except ContinueNotZero:
        print("error: bounds undefined for continue>0", file=sys.stderr)
        return 1
    k = args.k
    if k is None:
        k = (wrappers_doc.get("rewardNormalization") or {}).get("K", 0.5)
    norm = k * gdef.delta_h
    print(f"{args.game}: {lo} / {hi} (raw)")
    print(f"{args.game}: {_fmt_bound(lo / norm)} / {_fmt_bound(hi / norm)} (normalized, K={k})")
    _emit("bounds.min_raw", lo)
    _emit("bounds.max_raw", hi)
    _emit("bounds.min_normalized", _fmt_bound(lo / norm))
    _emit("bounds.max_normalized", _fmt_bound(hi / norm))
    return 0


BENCH_FRAME = (128, 128, 1)


def _bench_settings(settings_doc: dict) -> dict:
    doc = dict(settings_doc)
    doc["stepRatio"] = 1
    doc["frameShape"] = list(BENCH_FRAME)
    return doc


def _bench_in_process(game, settings_doc, wrappers_doc, duration, seed, instance=0):
    env = _build_env(game, _bench_settings(settings_doc), wrappers_doc, seed=seed + instance)
    rng = random.Random(seed + instance)
    space = env.action_space
    env.reset()
    process = psutil.Process()
    peak_rss = process.memory_info().rss
    steps = 0
    deadline = time.perf_counter() + duration
    while time.perf_counter() < deadline:
        for _ in range(256):
            _, _, done, _ = env.step(space.sample(rng))
            steps += 1
            if done:
                env.reset()
        peak_rss = max(peak_rss, process.memory_info().rss)
    env.close()
    return steps, peak_rss


def _bench_over_wire(game, settings_doc, wrappers_doc, duration, seed):
    from .server import ArenaServer

    server = ArenaServer(port=0, max_sessions=4)
    server.start()
    import socket as socketlib

    sock = socketlib.create_connection(("127.0.0.1", server.port))
    rng = random.Random(seed)
    request_id = 0

    def call(msg_type, doc):
        nonlocal request_id
        request_id += 1
        protocol.write_envelope(sock, msg_type, request_id, protocol.encode_body(doc))
        reply_type, reply_id, body = protocol.read_envelope(sock)
        if reply_type == protocol.MSG_ERROR:
            raise ArenaError(protocol.decode_body(body)[0]["message"])
        return protocol.decode_body(body)

    call(protocol.MSG_HELLO, {"protocol": protocol.PROTOCOL_VERSION})
    make_doc = {"gameId": game, "settings": _bench_settings(settings_doc)}
    if wrappers_doc:
        make_doc["wrappers"] = wrappers_doc
    spaces = call(protocol.MSG_MAKE, make_doc)[0]
    size = spaces["actionSpace"]["discreteSize"]
    call(protocol.MSG_RESET, {})
    steps = 0
    started = time.perf_counter()
    deadline = started + duration
    while time.perf_counter() < deadline:
        doc, _ = call(protocol.MSG_STEP, {"action": rng.randrange(size)})
        steps += 1
        if doc["done"]:
            call(protocol.MSG_RESET, {})
    elapsed = time.perf_counter() - started
    call(protocol.MSG_CLOSE, {})
    sock.close()
    server.stop()
    return steps, elapsed


def cmd_bench(args) -> int:
    settings_doc, wrappers_doc = _load_settings_file(args.settings)
    start = time.perf_counter()
    if args.parallel > 1:
        with ThreadPoolExecutor(max_workers=args.parallel) as pool:
            futures = [
                pool.submit(_bench_in_process, args.game, settings_doc, wrappers_doc,
                            args.duration, args.seed, i)
                for i in range(args.parallel)
            ]
            outcomes = [f.result() for f in futures]
        steps = sum(s for s, _ in outcomes)
        peak_rss = max(r for _, r in outcomes)
    else:
        steps, peak_rss = _bench_in_process(args.game, settings_doc, wrappers_doc,
                                            args.duration, args.seed)
    elapsed = time.perf_counter() - start
    fps = steps / elapsed
    rss_mb = peak_rss / (1024 * 1024)
    print(f"{args.game}: {steps} env steps in {elapsed:.2f}s -> {fps:.0f} steps/s "
          f"({args.parallel} instance(s), stepRatio=1, frame {BENCH_FRAME})")
    print(f"peak RSS {rss_mb:.1f} MB")
    _emit("bench.steps", steps)
    _emit("bench.duration_s", f"{elapsed:.3f}")
    _emit("bench.steps_per_s", f"{fps:.1f}")
    _emit("bench.peak_rss_mb", f"{rss_mb:.1f}")
    _emit("bench.parallel", args.parallel)

    if args.over_wire:
        wire_steps, wire_elapsed = _bench_over_wire(
            args.game, settings_doc, wrappers_doc, args.duration, args.seed
        )
        wire_fps = wire_steps / wire_elapsed
        print(f"over wire: {wire_steps} steps in {wire_elapsed:.2f}s -> {wire_fps:.0f} steps/s")
        _emit("bench.wire_steps_per_s", f"{wire_fps:.1f}")
    return 0


def cmd_validate(args) -> int:
    try:
        traj = TrajectoryFile(args.file)
    except ArenaError as exc:
        print(f"invalid trajectory file: {exc}", file=sys.stderr)
        return 1
    header = traj.header
    print(f"OK, {header['episodeCount']} episodes "
          f"(game {header['gameId']!r}, user {header['userName']!r}, steps {header['stepCounts']})")
    _emit("validate.episodes", header["episodeCount"])
    _emit("validate.steps", sum(header["stepCounts"]))
    _emit("validate.checksum", f"{traj.checksum:016x}")
    if args.dump:
        for ei, episode in enumerate(traj.episodes):
            for si, record in enumerate(episode):
                digest = hashlib.blake2b(record, digest_size=8).hexdigest()
                _emit(f"dump.ep{ei}.rec{si}", digest)
    return 0


def cmd_serve(args) -> int:
    from .server import serve

    serve(args.host, args.port, args.max_sessions, args.idle_timeout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="marena", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rollout", help="run uniform-random episodes and check reward bounds")
    p.add_argument("--game", required=True)
    p.add_argument("--settings", help="settings document file (MAKE message format)")
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parallel", type=int, default=1)
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("bounds", help="print episode cumulative reward bounds")
    p.add_argument("--game", required=True)
    p.add_argument("--settings")
    p.add_argument("--k", type=float, help="normalization scaling factor (default from settings file or 0.5)")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("bench", help="throughput/memory benchmark (stepRatio=1, 128x128 gray)")
    p.add_argument("--game", required=True)
    p.add_argument("--settings")
    p.add_argument("--duration", type=float, default=10.0, help="seconds (>= 5)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--over-wire", action="store_true", help="also measure server round-trip throughput")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("validate", help="verify a trajectory file")
    p.add_argument("file")
    p.add_argument("--dump", action="store_true", help="print per-record digests")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("serve", help="run the engine server")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=int(os.environ.get("ARENA_PORT", protocol.DEFAULT_PORT)))
    p.add_argument("--max-sessions", type=int, default=16)
    p.add_argument("--idle-timeout", type=float, default=300.0)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "rollout" and args.episodes < 1:
        parser.error("--episodes must be >= 1")
    if args.command in ("rollout", "bench") and args.parallel < 1:
        parser.error("--parallel must be >= 1")
    if args.command == "bench" and args.duration < 5:
        parser.error("--duration must be >= 5 seconds")
    try:
        return args.func(args)
    except ArenaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
