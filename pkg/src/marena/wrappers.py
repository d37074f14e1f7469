"""Composable environment wrappers and their declarative configuration.

``wrap`` applies transforms in a fixed, documented order (innermost first):

    noOpReset -> stickyActions -> frameWarp -> frameStack -> actionStack
    -> obsScaling -> flattenFilter -> rewardNormalization -> rewardClipping

Action-side wrappers sit closest to the environment, reward shaping sits
outermost; an empty config is observationally the identity.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .actions import NUM_MOVES
from .errors import InvalidSettings, StickyWithStepRatio, UnknownKey
from .render import warp_frame
from .spaces import frame_box, is_leaf


def normalize_reward(reward: float, k: float, delta_h: int) -> float:
    """Scale a reward by 1 / (K * deltaH)."""
    return reward / (k * delta_h)


def clip_reward(reward) -> int:
    """sign(): -1, 0 or +1 (sign(0) = 0)."""
    return (reward > 0) - (reward < 0)


@dataclass
class WrapperConfig:
    frame_warp: tuple[int, int, bool] | None = None  # (h, w, grayscale)
    obs_scaling: bool = False
    frame_stack: tuple[int, int] | None = None  # (N, dilation M)
    action_stack: int | None = None
    flatten_filter: tuple[bool, list[str]] | None = None  # (flatten, keep keys)
    reward_normalization: float | None = None  # scaling factor K
    reward_clipping: bool = False
    noop_reset_max: int = 0
    sticky_actions: int = 1
    # applied at the rewardNormalization slot, before K scaling; not serializable
    custom_reward: Callable | None = None

    def is_empty(self) -> bool:
        return self == WrapperConfig()

    def validate(self, env) -> None:
        if self.sticky_actions < 1:
            raise InvalidSettings("stickyActions", "stickyActions must be >= 1")
        if self.sticky_actions > 1 and env.settings.step_ratio != 1:
            raise StickyWithStepRatio(
                f"stickyActions={self.sticky_actions} requires stepRatio == 1, "
                f"got {env.settings.step_ratio}"
            )
        if self.frame_warp is not None:
            h, w, _ = self.frame_warp
            if h < 1 or w < 1:
                raise InvalidSettings("frameWarp", "warp height/width must be >= 1")
        if self.frame_stack is not None:
            n, m = self.frame_stack
            if n < 1 or m < 1:
                raise InvalidSettings("frameStack", "frame stack N and M must be >= 1")
        if self.action_stack is not None:
            if self.action_stack < 1:
                raise InvalidSettings("actionStack", "action stack N must be >= 1")
            if env.settings.hardcore:
                raise InvalidSettings("actionStack", "action stack needs RAM states; hardcore is frame-only")
        if self.reward_normalization is not None and self.reward_normalization <= 0:
            raise InvalidSettings("rewardNormalization", "scaling factor K must be > 0")
        if self.noop_reset_max < 0:
            raise InvalidSettings("noOpResetMax", "noOpResetMax must be >= 0")

    def to_doc(self) -> dict:
        doc: dict = {}
        if self.frame_warp is not None:
            h, w, gray = self.frame_warp
            doc["frameWarp"] = [h, w, bool(gray)]
        if self.obs_scaling:
            doc["obsScaling"] = True
        if self.frame_stack is not None:
            doc["frameStack"] = list(self.frame_stack)
        if self.action_stack is not None:
            doc["actionStack"] = self.action_stack
        if self.flatten_filter is not None:
            flatten, keep = self.flatten_filter
            doc["flattenFilter"] = {"flatten": bool(flatten), "keepKeys": list(keep)}
        if self.reward_normalization is not None:
            doc["rewardNormalization"] = {"K": self.reward_normalization}
        if self.reward_clipping:
            doc["rewardClipping"] = True
        if self.noop_reset_max:
            doc["noOpResetMax"] = self.noop_reset_max
        if self.sticky_actions != 1:
            doc["stickyActions"] = self.sticky_actions
        return doc

    @classmethod
    def from_doc(cls, doc: dict) -> "WrapperConfig":
        known = {
            "frameWarp", "obsScaling", "frameStack", "actionStack", "flattenFilter",
            "rewardNormalization", "rewardClipping", "noOpResetMax", "stickyActions",
        }
        for key in doc:
            if key not in known:
                raise InvalidSettings(key, f"unknown wrapper setting {key!r}")
        cfg = cls()
        if "frameWarp" in doc:
            h, w, gray = doc["frameWarp"]
            cfg.frame_warp = (h, w, bool(gray))
        cfg.obs_scaling = bool(doc.get("obsScaling", False))
        if "frameStack" in doc:
            n, m = doc["frameStack"]
            cfg.frame_stack = (n, m)
        if "actionStack" in doc:
            cfg.action_stack = doc["actionStack"]
        if "flattenFilter" in doc:
            ff = doc["flattenFilter"]
            cfg.flatten_filter = (bool(ff.get("flatten", True)), list(ff.get("keepKeys", [])))
        if "rewardNormalization" in doc:
            cfg.reward_normalization = doc["rewardNormalization"]["K"]
        cfg.reward_clipping = bool(doc.get("rewardClipping", False))
        cfg.noop_reset_max = doc.get("noOpResetMax", 0)
        cfg.sticky_actions = doc.get("stickyActions", 1)
        return cfg


class Wrapper:
    """Base wrapper: delegates everything it does not override."""

    def __init__(self, env):
        self.env = env

    def __getattr__(self, name):
        return getattr(self.env, name)

    @property
    def action_space(self):
        return self.env.action_space

    @property
    def observation_space(self):
        return self.env.observation_space

    def reset(self):
        return self.env.reset()

    def step(self, action):
        return self.env.step(action)

    def render(self):
        return self.env.render()

    def close(self):
        return self.env.close()

    @property
    def unwrapped(self):
        env = self.env
        while isinstance(env, Wrapper):
            env = env.env
        return env


def _noop_action(env):
    spec = env.unwrapped._spec
    noop = 0 if spec.variant == "discrete" else [0, 0]
    if env.settings.two_player:
        return {"P1": noop, "P2": noop}
    return noop


def _zero_like(reward):
    if isinstance(reward, dict):
        return {k: 0.0 for k in reward}
    return 0.0


def _add_rewards(total, reward):
    if isinstance(reward, dict):
        return {k: total[k] + reward[k] for k in reward}
    return total + reward


def _map_reward(reward, fn):
    if isinstance(reward, dict):
        return {k: fn(v) for k, v in reward.items()}
    return fn(reward)


class NoopResetWrapper(Wrapper):
    """Steps a random number of no-ops (0..N, env RNG) after every reset."""

    def __init__(self, env, n_max: int):
        super().__init__(env)
        self.n_max = n_max

    def reset(self):
        obs = self.env.reset()
        k = self.env.draw_rand_below(self.n_max + 1) if self.n_max > 0 else 0
        noop = _noop_action(self.env)
        for _ in range(k):
            obs, _, done, _ = self.env.step(noop)
            if done:
                obs = self.env.reset()
                break
        return obs


class StickyActionsWrapper(Wrapper):
    """Repeats each submitted action N times; rewards sum, done short-circuits."""

    def __init__(self, env, n: int):
        super().__init__(env)
        self.n = n

    def step(self, action):
        obs, total, done, info = self.env.step(action)
        for _ in range(self.n - 1):
            if done:
                break
            obs, reward, done, step_info = self.env.step(action)
            total = _add_rewards(total, reward)
            for key, value in step_info.items():
                info[key] = info.get(key, False) or value
        return obs, total, done, info


def _replace_frame(obs, fn):
    if isinstance(obs, dict):
        out = dict(obs)
        out["frame"] = fn(obs["frame"])
        return out
    return fn(obs)  # hardcore: the observation is the frame


class FrameWarpWrapper(Wrapper):
    def __init__(self, env, height: int, width: int, grayscale: bool):
        super().__init__(env)
        self.height = height
        self.width = width
        self.grayscale = grayscale

    def _warp(self, frame):
        return warp_frame(frame, self.height, self.width, self.grayscale)

    def reset(self):
        return _replace_frame(self.env.reset(), self._warp)

    def step(self, action):
        obs, reward, done, info = self.env.step(action)
        return _replace_frame(obs, self._warp), reward, done, info

    @property
    def observation_space(self):
        space = self.env.observation_space
        inner = space if is_leaf(space) else space["frame"]
        channels = 1 if self.grayscale else inner["shape"][2]
        box = frame_box((self.height, self.width, channels))
        if is_leaf(space):
            return box
        out = dict(space)
        out["frame"] = box
        return out


class FrameStackWrapper(Wrapper):
    """Ring buffer of the last N*M frames; emits N slices M steps apart.

    Output piles slices along the channel axis in chronological order
    (oldest first, current frame last). Reset fills the ring with the
    first frame.
    """

    def __init__(self, env, n: int, dilation: int):
        super().__init__(env)
        self.n = n
        self.dilation = dilation
        self._ring: deque = deque(maxlen=n * dilation)

    def _stacked(self):
        n, m = self.n, self.dilation
        slices = [self._ring[-1 - j * m] for j in range(n - 1, -1, -1)]
        return np.concatenate(slices, axis=2)

    def reset(self):
        obs = self.env.reset()
        frame = obs["frame"] if isinstance(obs, dict) else obs
        self._ring.clear()
        for _ in range(self.n * self.dilation):
            self._ring.append(frame)
        return _replace_frame(obs, lambda _: self._stacked())

    def step(self, action):
        obs, reward, done, info = self.env.step(action)
        self._ring.append(obs["frame"] if isinstance(obs, dict) else obs)
        return _replace_frame(obs, lambda _: self._stacked()), reward, done, info

    @property
    def observation_space(self):
        space = self.env.observation_space
        inner = space if is_leaf(space) else space["frame"]
        h, w, c = inner["shape"]
        box = frame_box((h, w, c * self.n))
        if is_leaf(space):
            return box
        out = dict(space)
        out["frame"] = box
        return out


class ActionStackWrapper(Wrapper):
    """Exposes the last N decoded (move, attack) pairs under "actionsStack".

    Oldest first; reset fills with no-ops. In 2P mode one stack per player.
    """

    def __init__(self, env, n: int):
        super().__init__(env)
        self.n = n
        self._two_player = env.settings.two_player
        keys = ("P1", "P2") if self._two_player else (None,)
        self._rings = {k: deque(maxlen=n) for k in keys}

    def _fill_noops(self):
        for ring in self._rings.values():
            ring.clear()
            for _ in range(self.n):
                ring.append([0, 0])

    def _attach(self, obs):
        out = dict(obs)
        if self._two_player:
            out["actionsStack"] = {k: [list(a) for a in ring] for k, ring in self._rings.items()}
        else:
            out["actionsStack"] = [list(a) for a in self._rings[None]]
        return out

    def reset(self):
        self._fill_noops()
        return self._attach(self.env.reset())

    def step(self, action):
        obs, reward, done, info = self.env.step(action)
        if self._two_player:
            for key in ("P1", "P2"):
                self._rings[key].append(list(obs["lastActions"][key]))
        else:
            self._rings[None].append(list(obs["lastActions"]))
        return self._attach(obs), reward, done, info

    @property
    def observation_space(self):
        space = dict(self.env.observation_space)
        spec = self.unwrapped._spec
        entry = {"kind": "actionStack", "count": self.n, "moves": NUM_MOVES, "attacks": spec.attacks}
        if self._two_player:
            space["actionsStack"] = {"P1": dict(entry), "P2": dict(entry)}
        else:
            space["actionsStack"] = entry
        return space


def _scale_leaf(value, desc):
    kind = desc["kind"]
    if kind == "box":
        return np.asarray(value, dtype=np.float32) / 255.0
    if kind == "binary":
        return value
    if kind == "int":
        span = desc["high"] - desc["low"]
        return (value - desc["low"]) / span if span else 0.0
    if kind == "multiInt":
        span = desc["high"] - desc["low"]
        return [(v - desc["low"]) / span if span else 0.0 for v in value]
    if kind == "actionPair":
        return [value[0] / (desc["moves"] - 1), value[1] / (desc["attacks"] - 1)]
    if kind == "actionStack":
        return [[a[0] / (desc["moves"] - 1), a[1] / (desc["attacks"] - 1)] for a in value]
    raise UnknownKey(f"cannot scale leaf of kind {kind!r}")


def scale_observation(obs, space):
    """Scale every leaf into [0, 1]: pixels /255, values (v - low)/(high - low)."""
    if is_leaf(space):
        return _scale_leaf(obs, space)
    return {key: scale_observation(obs[key], space[key]) for key in obs}


def _scaled_leaf_desc(desc):
    kind = desc["kind"]
    if kind == "box":
        return {"kind": "box", "shape": desc["shape"], "dtype": "float32", "low": 0.0, "high": 1.0}
    out = dict(desc)
    out["scaled"] = True
    return out


def _scaled_space(space):
    if is_leaf(space):
        return _scaled_leaf_desc(space)
    return {key: _scaled_space(value) for key, value in space.items()}


class ObsScalingWrapper(Wrapper):
    def __init__(self, env):
        super().__init__(env)
        self._space = env.observation_space

    def reset(self):
        return scale_observation(self.env.reset(), self._space)

    def step(self, action):
        obs, reward, done, info = self.env.step(action)
        return scale_observation(obs, self._space), reward, done, info

    @property
    def observation_space(self):
        return _scaled_space(self._space)


def flatten_observation(obs) -> dict:
    """Join nested dictionary levels with "_" (leaves stay untouched)."""
    flat: dict = {}

    def visit(node, prefix):
        if isinstance(node, dict) and not is_leaf(node):
            for key, value in node.items():
                visit(value, f"{prefix}_{key}" if prefix else key)
        else:
            flat[prefix] = node

    visit(obs, "")
    return flat


def flatten_filter(obs, flatten: bool, keep_keys: list[str]):
    """Flatten and/or filter an observation dict; unknown keys raise."""
    if not isinstance(obs, dict):
        return obs
    out = flatten_observation(obs) if flatten else dict(obs)
    if keep_keys:
        missing = [k for k in keep_keys if k not in out]
        if missing:
            raise UnknownKey(f"keepKeys not present in observation: {missing}")
        out = {k: out[k] for k in keep_keys}
    return out


class FlattenFilterWrapper(Wrapper):
    def __init__(self, env, flatten: bool, keep_keys: list[str]):
        super().__init__(env)
        self.flatten = flatten
        self.keep_keys = list(keep_keys)
        # fail fast on unknown keys
        flatten_filter(self.env.observation_space, flatten, self.keep_keys)

    def reset(self):
        return flatten_filter(self.env.reset(), self.flatten, self.keep_keys)

    def step(self, action):
        obs, reward, done, info = self.env.step(action)
        return flatten_filter(obs, self.flatten, self.keep_keys), reward, done, info

    @property
    def observation_space(self):
        return flatten_filter(self.env.observation_space, self.flatten, self.keep_keys)


class RewardNormalizationWrapper(Wrapper):
    def __init__(self, env, k: float | None, custom: Callable | None = None):
        super().__init__(env)
        self.k = k
        self.custom = custom
        self._delta_h = env.game_definition.delta_h

    def _transform(self, reward):
        if self.custom is not None:
            reward = self.custom(reward)
        if self.k is not None:
            reward = normalize_reward(reward, self.k, self._delta_h)
        return reward

    def step(self, action):
        obs, reward, done, info = self.env.step(action)
        return obs, _map_reward(reward, self._transform), done, info


class RewardClippingWrapper(Wrapper):
    def step(self, action):
        obs, reward, done, info = self.env.step(action)
        return obs, _map_reward(reward, clip_reward), done, info


def wrap(env, config: WrapperConfig):
    """Apply the configured wrappers in the fixed documented order."""
    config.validate(env)
    env.config_doc = config.to_doc()  # recorders persist this in trajectory headers
    wrapped = env
    if config.noop_reset_max > 0:
        wrapped = NoopResetWrapper(wrapped, config.noop_reset_max)
    if config.sticky_actions > 1:
        wrapped = StickyActionsWrapper(wrapped, config.sticky_actions)
    if config.frame_warp is not None:
        h, w, gray = config.frame_warp
        wrapped = FrameWarpWrapper(wrapped, h, w, gray)
    if config.frame_stack is not None:
        n, m = config.frame_stack
        wrapped = FrameStackWrapper(wrapped, n, m)
    if config.action_stack is not None:
        wrapped = ActionStackWrapper(wrapped, config.action_stack)
    if config.obs_scaling:
        wrapped = ObsScalingWrapper(wrapped)
    if config.flatten_filter is not None:
        flatten, keep = config.flatten_filter
        wrapped = FlattenFilterWrapper(wrapped, flatten, keep)
    if config.reward_normalization is not None or config.custom_reward is not None:
        wrapped = RewardNormalizationWrapper(wrapped, config.reward_normalization, config.custom_reward)
    if config.reward_clipping:
        wrapped = RewardClippingWrapper(wrapped)
    return wrapped
