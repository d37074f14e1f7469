"""Interactive play: live frame stream, real-time input, demo recording.

The loop runs at the environment's action rate (step ratio 6 means 10 Hz
inputs). Input sampling never blocks: one action slot, latest wins per
period; missing input sends no-ops so the environment never stalls.
Rendering may drop frames to stay inside the action period. A pause toggle
halts STEP issuance without touching the episode state.

Test mode (`input_script`) injects scripted actions and disables pacing and
display, so CI runs need no device or display.
"""

from __future__ import annotations

import json
import select
import sys
import time

import numpy as np

from .errors import ClientError
from .sdk import default_address, make
from .trajfile import TrajectoryFile, decode_record

TICKS_PER_SECOND = 60

# P1 cluster: wasd + qezc diagonals, attacks j/k/l, combos u/i/o.
P1_KEYS = {
    "a": 1, "q": 2, "w": 3, "e": 4, "d": 5, "c": 6, "s": 7, "z": 8,
    "j": ("attack", 1), "k": ("attack", 2), "l": ("attack", 3),
    "u": ("attack", 4), "i": ("attack", 5), "o": ("attack", 6),
}
# P2 cluster: tfgh + ryvb diagonals, attacks 1/2/3, combos 4/5/6.
P2_KEYS = {
    "f": 1, "r": 2, "t": 3, "y": 4, "h": 5, "b": 6, "g": 7, "v": 8,
    "1": ("attack", 1), "2": ("attack", 2), "3": ("attack", 3),
    "4": ("attack", 4), "5": ("attack", 5), "6": ("attack", 6),
}
PAUSE_KEY = " "
QUIT_KEY = "x"


def encode_pair(space_desc: dict, move: int, attack: int):
    """Encode a (move, attack) intent for the session's action space."""
    desc = space_desc.get("perPlayer", space_desc)
    if desc["variant"] == "discrete":
        return 9 + attack - 1 if attack else move
    return [move, attack]


# chorded button pairs map to the combo slots (A1+A2, A1+A3, A2+A3)
_CHORDS = {frozenset({1, 2}): 4, frozenset({1, 3}): 5, frozenset({2, 3}): 6}


def resolve_attack(buttons: set[int], direct_combo: int = 0) -> int:
    """Attack slot for the buttons pressed within one action period.

    A direct combo key wins; otherwise two chorded buttons select their
    combo slot, a single button selects itself.
    """
    if direct_combo:
        return direct_combo
    if len(buttons) >= 2:
        pair = frozenset(sorted(buttons)[:2])
        return _CHORDS.get(pair, min(buttons))
    return next(iter(buttons)) if buttons else 0


class ScriptedInput:
    """Test-mode input: one JSON action per line, plus pause/resume/quit."""

    def __init__(self, path: str):
        with open(path, "r", encoding="utf-8") as fh:
            self.lines = [line.strip() for line in fh if line.strip()]
        self.cursor = 0

    def poll(self):
        """Returns (command, action): command in {None, "pause", "quit"}."""
        if self.cursor >= len(self.lines):
            return "quit", None
        line = self.lines[self.cursor]
        self.cursor += 1
        if line in ("pause", "resume"):
            return "pause", None
        return None, json.loads(line)

    def close(self) -> None:
        pass


class KeyboardInput:
    """Raw-terminal polling; keyboard is also the no-gamepad fallback."""

    def __init__(self, two_player: bool, space_desc: dict):
        self.two_player = two_player
        self.space_desc = space_desc
        self._fd = sys.stdin.fileno()
        import termios
        import tty

        self._saved = termios.tcgetattr(self._fd)
        tty.setcbreak(self._fd)

    def _drain(self) -> str:
        keys = ""
        while select.select([sys.stdin], [], [], 0)[0]:
            keys += sys.stdin.read(1)
        return keys

    def poll(self):
        keys = self._drain()
        if QUIT_KEY in keys:
            return "quit", None
        if PAUSE_KEY in keys:
            return "pause", None
        if not keys:
            return None, None  # no input this period: caller sends no-ops

        def cluster(mapping):
            move, buttons, direct = 0, set(), 0
            for key in keys:
                entry = mapping.get(key)
                if entry is None:
                    continue
                if isinstance(entry, tuple):
                    if entry[1] > 3:
                        direct = entry[1]  # dedicated combo key
                    else:
                        buttons.add(entry[1])
                else:
                    move = entry
            return move, resolve_attack(buttons, direct)

        if self.two_player:
            p1 = cluster(P1_KEYS)
            p2 = cluster(P2_KEYS)
            return None, {
                "P1": encode_pair(self.space_desc, *p1),
                "P2": encode_pair(self.space_desc, *p2),
            }
        move, attack = cluster(P1_KEYS)
        return None, encode_pair(self.space_desc, move, attack)

    def close(self) -> None:
        import termios

        termios.tcsetattr(self._fd, termios.TCSADRAIN, self._saved)


class NullDisplay:
    def show(self, frame, hud: str) -> None:
        pass

    def close(self) -> None:
        pass


class AnsiDisplay:
    """Terminal renderer: frame as 256-color half-blocks plus a HUD line."""

    def __init__(self, rows: int = 28, cols: int = 56):
        self.rows = rows
        self.cols = cols
        sys.stdout.write("\x1b[2J")

    def show(self, frame: np.ndarray, hud: str) -> None:
        if frame.ndim == 3 and frame.shape[2] == 1:
            frame = np.repeat(frame, 3, axis=2)
        if frame.dtype != np.uint8:
            frame = (np.clip(frame, 0.0, 1.0) * 255).astype(np.uint8)
        h, w = frame.shape[:2]
        rows = (np.arange(self.rows) * h) // self.rows
        cols = (np.arange(self.cols) * w) // self.cols
        small = frame[rows][:, cols]
        out = ["\x1b[H"]
        for r in range(self.rows):
            line = []
            for c in range(self.cols):
                red, green, blue = small[r, c, 0], small[r, c, 1], small[r, c, 2]
                line.append(f"\x1b[48;2;{red};{green};{blue}m ")
            out.append("".join(line) + "\x1b[0m")
        out.append(hud.ljust(self.cols) + "\n")
        sys.stdout.write("\n".join(out))
        sys.stdout.flush()

    def close(self) -> None:
        sys.stdout.write("\x1b[0m\n")
        sys.stdout.flush()


def _hud_line(obs, reward_total: float, episode: int, paused: bool) -> str:
    if not isinstance(obs, dict):
        return f"ep {episode}  reward {reward_total:+.1f}" + ("  PAUSED" if paused else "")
    p1, p2 = obs["P1"], obs["P2"]
    return (
        f"ep {episode}  HP {p1['health']} vs {p2['health']}  "
        f"wins {p1['wins']}-{p2['wins']}  stage {obs['stage']}  "
        f"reward {reward_total:+.1f}" + ("  PAUSED" if paused else "")
    )


def play(
    game_id: str,
    settings: dict | None = None,
    record_path: str | None = None,
    user_name: str = "player",
    two_player: bool = False,
    input_script: str | None = None,
    episodes: int = 1,
    address: tuple[str, int] | None = None,
    display=None,
    pace: bool | None = None,
) -> dict:
    """Run an interactive (or scripted) session; returns a summary document."""
    settings = dict(settings or {})
    if two_player:
        settings["player"] = "P1P2"
    test_mode = input_script is not None
    if pace is None:
        pace = not test_mode

    env = make(game_id, settings, address=address or default_address())
    step_ratio = settings.get("stepRatio", 6)
    period = step_ratio / TICKS_PER_SECOND

    if display is None:
        display = NullDisplay() if test_mode else AnsiDisplay()
    if test_mode:
        source = ScriptedInput(input_script)
    else:
        try:
            source = KeyboardInput(two_player, env.action_space_desc)
        except Exception:
            print("no usable input device; falling back to scripted no-ops", file=sys.stderr)
            source = ScriptedInput("/dev/null")

    noop = (
        {"P1": encode_pair(env.action_space_desc, 0, 0), "P2": encode_pair(env.action_space_desc, 0, 0)}
        if two_player
        else encode_pair(env.action_space_desc, 0, 0)
    )

    summary = {"episodes": 0, "steps": 0, "totalReward": 0.0, "recording": None}
    recording = False
    partial_warning = False
    try:
        if record_path:
            env.record_start(record_path, user_name)
            recording = True
        obs = env.reset()
        reward_total = 0.0
        paused = False
        deadline = time.perf_counter() + period
        while summary["episodes"] < episodes:
            command, action = source.poll()
            if command == "quit":
                break
            if command == "pause":
                paused = not paused
            if paused:
                display.show(obs["frame"] if isinstance(obs, dict) else obs,
                             _hud_line(obs, reward_total, summary["episodes"] + 1, True))
                if pace:
                    time.sleep(period)
                continue
            obs, reward, done, info = env.step(action if action is not None else noop)
            if isinstance(reward, dict):
                reward = reward["P1"]
            reward_total += reward
            summary["steps"] += 1
            now = time.perf_counter()
            if not pace or now < deadline:  # drop-frame rendering keeps the loop on time
                display.show(obs["frame"] if isinstance(obs, dict) else obs,
                             _hud_line(obs, reward_total, summary["episodes"] + 1, False))
            if pace:
                sleep_for = deadline - time.perf_counter()
                if sleep_for > 0:
                    time.sleep(sleep_for)
                deadline += period
            if done:
                summary["episodes"] += 1
                summary["totalReward"] += reward_total
                reward_total = 0.0
                if summary["episodes"] < episodes:
                    obs = env.reset()
    except (ConnectionError, OSError, ClientError) as exc:
        partial_warning = recording
        print(f"server connection lost: {exc}", file=sys.stderr)
    finally:
        if recording:
            try:
                summary["recording"] = env.record_stop()
            except (ConnectionError, OSError, ClientError):
                partial_warning = True
        if partial_warning:
            print("warning: recording may be partial (server session ended early)", file=sys.stderr)
        source.close()
        display.close()
        env.close()
    return summary


def replay_view(
    traj_file: str,
    display=None,
    pace: bool = True,
    pause_toggle_steps: list[int] | None = None,
) -> dict:
    """Play a recording back visually at its recorded pace.

    ``pause_toggle_steps`` injects pause/resume at given step indices (used
    by tests to show the pause path leaves the stream untouched).
    """
    traj = TrajectoryFile(traj_file)  # raises TrajectoryFormatError on corruption
    step_ratio = traj.header["settings"].get("stepRatio", 6)
    period = step_ratio / TICKS_PER_SECOND
    display = display or NullDisplay()
    toggles = set(pause_toggle_steps or ())

    shown = 0
    rewards = 0.0
    try:
        for episode in traj.episodes:
            for index, record in enumerate(episode):
                _, obs, _, reward, _, _ = decode_record(record)
                rewards += reward
                if index in toggles:
                    if pace:
                        time.sleep(period)  # paused for one period, stream unchanged
                display.show(obs["frame"] if isinstance(obs, dict) else obs,
                             f"replay {traj_file}  step {index}")
                shown += 1
                if pace:
                    time.sleep(period)
    finally:
        display.close()
    return {"episodes": len(traj.episodes), "framesShown": shown, "totalReward": rewards}
