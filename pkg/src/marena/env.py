"""Episodic environment over the match simulation.

Step semantics: the submitted action is held for ``stepRatio`` simulation
ticks. Rewards accumulate per tick in integer health units (the health-delta
difference between the opponent side and the agent side), so 2P rewards are
zero-sum exactly. Round and stage transitions resolve inside the step
window; health restoration at a round reset never produces reward.
"""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from . import sim
from .actions import TwoPlayerActionSpace, build_action_space
from .errors import (
    ContinueNotZero,
    LengthMismatch,
    MissingPlayerKey,
    NotReset,
    UseAfterClose,
)
from .gamedef import GameDefinition, load_game
from .render import render_native, warp_frame
from .rng import Stream, mix
from .settings import NATIVE, PLAYER_RANDOM, EnvironmentSettings
from .spaces import observation_space

_ENV_RNG_SALT = 0xA5A5A5A55A5A5A5A
_EPISODE_SALT = 0xC2B2AE3D27D4EB4F


def compute_reward(healths_before, healths_after, agent_side: int) -> int:
    """Health-delta reward from the agent's perspective, in health units.

    ``healths_before``/``healths_after`` are (left, right) pairs of
    per-character health arrays. Positive means the opponent side lost more
    health than the agent side over the transition.
    """
    if len(healths_before) != 2 or len(healths_after) != 2:
        raise LengthMismatch("expected (left, right) health array pairs")
    opp = 1 - agent_side
    if (
        len(healths_before[0]) != len(healths_after[0])
        or len(healths_before[1]) != len(healths_after[1])
        or len(healths_before[0]) != len(healths_before[1])
    ):
        raise LengthMismatch("health arrays must all have the same length")
    reward = 0
    for before, after in zip(healths_before[opp], healths_after[opp]):
        reward += before - after
    for before, after in zip(healths_before[agent_side], healths_after[agent_side]):
        reward -= before - after
    return reward


def episode_reward_bounds(gdef: GameDefinition, settings: EnvironmentSettings) -> tuple[int, int]:
    """Inclusive (min, max) bounds on the episode cumulative reward.

    Only defined for continueGame == 0. In 2P mode the episode is a single
    stage, so the stage count collapses to 1.
    """
    if settings.continue_game != 0.0:
        raise ContinueNotZero("episode reward bounds are undefined for continueGame > 0")
    nc = gdef.num_chars_per_side
    ns = 1 if settings.two_player else gdef.max_stages
    nr = gdef.rounds_to_win
    dh = gdef.delta_h
    lo = -nc * ((ns - 1) * (nr - 1) + nr) * dh
    hi = nc * ns * nr * dh
    return lo, hi


class ArenaEnv:
    """One environment instance. Serial contract: never interleave calls."""

    def __init__(self, gdef: GameDefinition, settings: EnvironmentSettings):
        settings.validate(gdef)
        self._gdef = gdef
        self._settings = settings
        self._spec = build_action_space(gdef, settings.action_space, settings.attack_but_combination)
        self._env_rng = Stream(mix(settings.seed ^ _ENV_RNG_SALT))
        self._episode_rng = Stream(mix(settings.seed ^ _EPISODE_SALT))
        self._state: sim.MatchState | None = None
        self._done = False
        self._closed = False
        self._last_actions = [[0, 0], [0, 0]]
        self.last_events: list = []
        self.tick_log: list | None = None  # set to [] to capture per-tick health rows

    # -- queries ------------------------------------------------------------

    @property
    def unwrapped(self) -> "ArenaEnv":
        return self

    @property
    def game_definition(self) -> GameDefinition:
        return self._gdef

    @property
    def settings(self) -> EnvironmentSettings:
        return self._settings

    @property
    def action_space(self):
        self._check_open()
        if self._settings.two_player:
            return TwoPlayerActionSpace(self._spec)
        return self._spec

    @property
    def observation_space(self) -> dict:
        self._check_open()
        return observation_space(
            self._gdef,
            self._frame_shape(),
            self._spec,
            self._settings.hardcore,
            self._settings.two_player,
        )

    def episode_bounds(self) -> tuple[int, int]:
        self._check_open()
        return episode_reward_bounds(self._gdef, self._settings)

    def draw_rand_below(self, n: int) -> int:
        """Deterministic draw from the env RNG stream (wrappers use this)."""
        self._check_open()
        return self._env_rng.next_below(n)

    # -- lifecycle ----------------------------------------------------------

    def reset(self):
        self._check_open()
        settings = self._settings
        if settings.player == PLAYER_RANDOM:
            side = "P1" if self._env_rng.next_u64() & 1 == 0 else "P2"
            resolved = replace(settings, player=side)
        else:
            resolved = settings
        episode_seed = self._episode_rng.next_u64()
        self._state = sim.init_match(self._gdef, resolved, episode_seed)
        self._done = False
        self._last_actions = [[0, 0], [0, 0]]
        self.last_events = []
        if self.tick_log is not None:
            self.tick_log.append(("reset", self._state.tick, self._healths(0), self._healths(1)))
        return self._observation()

    def step(self, action):
        self._check_open()
        state = self._state
        if state is None:
            raise NotReset("call reset() before step()")
        if self._done:
            raise NotReset("episode is done; call reset()")
        gdef = self._gdef
        settings = self._settings

        if settings.two_player:
            if not isinstance(action, dict) or "P1" not in action or "P2" not in action:
                raise MissingPlayerKey('2P actions must be a dict with keys "P1" and "P2"')
            inputs = (self._spec.decode(action["P1"]), self._spec.decode(action["P2"]))
        else:
            agent_input = self._spec.decode(action)
            opp_side = 1 - state.agent_side
            opp_input = sim.scripted_policy(state, gdef, opp_side, state.difficulty)
            if state.agent_side == 0:
                inputs = (agent_input, opp_input)
            else:
                inputs = (opp_input, agent_input)

        self._last_actions[state.agent_side] = list(inputs[state.agent_side])
        self._last_actions[1 - state.agent_side] = list(inputs[1 - state.agent_side])

        reward = 0
        events: list = []
        log = self.tick_log
        for _ in range(settings.step_ratio):
            before = (list(state.fighters[0].healths), list(state.fighters[1].healths))
            tick_events = sim.tick_inplace(state, gdef, inputs)
            after = (state.fighters[0].healths, state.fighters[1].healths)
            reward += compute_reward(before, after, state.agent_side)
            events.extend(tick_events)
            if log is not None:
                log.append(("tick", state.tick, self._healths(0), self._healths(1)))
            if state.phase == sim.PHASE_ROUND_END:
                events.extend(sim.resolve_round_inplace(state, gdef))
                if (
                    state.phase == sim.PHASE_GAME_OVER
                    and not settings.two_player
                    and settings.continue_game > 0.0
                    and self._env_rng.next_u01() < settings.continue_game
                ):
                    sim.continue_stage_inplace(state, gdef)
                    events.append(("continueUsed",))
                if log is not None:
                    log.append(("resolve", state.tick, self._healths(0), self._healths(1)))
            if state.phase in (sim.PHASE_GAME_OVER, sim.PHASE_CLEARED):
                break

        self._done = state.phase in (sim.PHASE_GAME_OVER, sim.PHASE_CLEARED)
        self.last_events = events
        info = {
            "roundDone": any(e[0] == "roundEnd" for e in events),
            "stageDone": any(e[0] == "stageEnd" for e in events),
            "gameDone": self._done,
            "episodeDone": self._done,
        }
        if settings.two_player:
            reward_out = {"P1": float(reward), "P2": float(-reward)}
        else:
            reward_out = float(reward)
        return self._observation(), reward_out, self._done, info

    def render(self) -> np.ndarray:
        """Native (pre-warp) RGB frame of the current state."""
        self._check_open()
        if self._state is None:
            raise NotReset("call reset() before render()")
        return render_native(self._state, self._gdef)

    def close(self) -> None:
        self._closed = True
        self._state = None

    # -- internals ----------------------------------------------------------

    def _check_open(self) -> None:
        if self._closed:
            raise UseAfterClose("environment is closed")

    def _healths(self, side: int):
        return tuple(self._state.fighters[side].healths)

    def _frame_shape(self) -> tuple[int, int, int]:
        h, w, c = self._settings.frame_shape
        if h == NATIVE:
            nh, nw, _ = self._gdef.native_frame_shape
            return (nh, nw, c)
        return (h, w, c)

    def _frame(self) -> np.ndarray:
        native = render_native(self._state, self._gdef)
        h, w, c = self._frame_shape()
        return warp_frame(native, h, w, grayscale=(c == 1))

    def _observation(self):
        state = self._state
        frame = self._frame()
        if self._settings.hardcore:
            return frame
        agent = state.agent_side
        groups = {}
        for key, side in (("P1", agent), ("P2", 1 - agent)):
            f = state.fighters[side]
            groups[key] = {
                "health": list(f.healths),
                "side": side,
                "wins": f.round_wins,
                "character": list(f.char_ids),
            }
        if self._settings.two_player:
            last_actions = {
                "P1": list(self._last_actions[0]),
                "P2": list(self._last_actions[1]),
            }
        else:
            last_actions = list(self._last_actions[agent])
        return {
            "frame": frame,
            "stage": state.stage_index,
            "timer": state.timer_ticks,
            "P1": groups["P1"],
            "P2": groups["P2"],
            "lastActions": last_actions,
        }


def make(game_id: str, settings=None, wrapper_config=None) -> ArenaEnv:
    """Create an environment (and optionally wrap it, see ``wrappers``)."""
    gdef = load_game(game_id)
    if settings is None:
        settings = EnvironmentSettings(game_id=game_id)
    elif isinstance(settings, dict):
        settings = EnvironmentSettings.from_doc(settings, game_id=game_id)
    else:
        settings.game_id = game_id
    env = ArenaEnv(gdef, settings)
    if wrapper_config is not None:
        from .wrappers import WrapperConfig, wrap

        if isinstance(wrapper_config, dict):
            wrapper_config = WrapperConfig.from_doc(wrapper_config)
        env = wrap(env, wrapper_config)
    return env
