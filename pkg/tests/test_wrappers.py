from __future__ import annotations

import random
from collections import deque

import numpy as np
import pytest

from arena_testutil import small_settings, stream_digest
from marena.env import make
from marena.errors import InvalidSettings, StickyWithStepRatio, UnknownKey
from marena.gamedef import load_game
from marena.render import warp_frame
from marena.wrappers import (
    StickyActionsWrapper,
    Wrapper,
    WrapperConfig,
    clip_reward,
    flatten_filter,
    normalize_reward,
    scale_observation,
    wrap,
)

DUEL = load_game("duel")


class TestWrapAndConfig:
    def test_empty_config_is_identity(self):
        rng = random.Random(17)
        script = [rng.randrange(12) for _ in range(400)]
        bare = make("duel", small_settings(seed=55))
        wrapped = wrap(make("duel", small_settings(seed=55)), WrapperConfig())
        assert stream_digest(bare, script) == stream_digest(wrapped, script)
        bare.close()
        wrapped.close()

    def test_sticky_requires_step_ratio_one(self):
        env = make("duel", small_settings(step_ratio=6))
        with pytest.raises(StickyWithStepRatio):
            wrap(env, WrapperConfig(sticky_actions=2))
        env.close()

    def test_training_style_config_accepted(self):
        # warp 128x128 gray, stack 4, actions 12, scaling, K=0.5
        config = WrapperConfig(
            frame_warp=(128, 128, True),
            frame_stack=(4, 1),
            action_stack=12,
            obs_scaling=True,
            reward_normalization=0.5,
        )
        env = wrap(make("duel", small_settings()), config)
        obs = env.reset()
        assert obs["frame"].shape == (128, 128, 4)
        assert obs["frame"].dtype == np.float32
        assert len(obs["actionsStack"]) == 12
        env.close()

    def test_config_doc_roundtrip(self):
        config = WrapperConfig(
            frame_warp=(128, 128, True),
            frame_stack=(4, 2),
            action_stack=12,
            obs_scaling=True,
            flatten_filter=(True, ["frame", "P1_health"]),
            reward_normalization=0.5,
            reward_clipping=True,
            noop_reset_max=6,
        )
        assert WrapperConfig.from_doc(config.to_doc()) == config

    def test_bad_config_values(self):
        env = make("duel", small_settings())
        with pytest.raises(InvalidSettings):
            wrap(env, WrapperConfig(frame_stack=(0, 1)))
        with pytest.raises(InvalidSettings):
            wrap(env, WrapperConfig(reward_normalization=0.0))
        env.close()

    def test_action_stack_rejected_in_hardcore(self):
        env = make("duel", small_settings(hardcore=True))
        with pytest.raises(InvalidSettings):
            wrap(env, WrapperConfig(action_stack=4))
        env.close()


class TestFrameWarpWrapper:
    def test_shapes_and_space(self):
        env = make("duel", EnvironmentSettingsFactory())
        wrapped = wrap(env, WrapperConfig(frame_warp=(128, 128, True)))
        obs = wrapped.reset()
        assert obs["frame"].shape == (128, 128, 1)
        assert wrapped.observation_space["frame"]["shape"] == [128, 128, 1]
        wrapped.close()


def EnvironmentSettingsFactory():
    # native frame settings (the warp wrapper sees the full 256x256x3)
    return small_settings(frame_shape=(0, 0, 3))


class TestFrameStack:
    def test_stack_shapes(self):
        config = WrapperConfig(frame_warp=(128, 128, True), frame_stack=(4, 1))
        env = wrap(make("duel", EnvironmentSettingsFactory()), config)
        obs = env.reset()
        assert obs["frame"].shape == (128, 128, 4)
        env.close()

    def test_reset_pads_with_first_frame(self):
        config = WrapperConfig(frame_stack=(4, 1))
        env = wrap(make("duel", small_settings()), config)
        obs = env.reset()
        stacked = obs["frame"]
        for j in range(1, 4):
            assert (stacked[:, :, j] == stacked[:, :, 0]).all()
        env.close()

    def test_dilated_offsets(self):
        """N=2, M=3 at step 6: slices are frames {3, 6} (oldest first)."""
        config = WrapperConfig(frame_stack=(2, 3))
        env = wrap(make("duel", small_settings(seed=5)), config)
        inner = make("duel", small_settings(seed=5))
        rng = random.Random(9)
        script = [rng.randrange(12) for _ in range(6)]
        obs = env.reset()
        frames = {0: inner.reset()["frame"]}
        for step, action in enumerate(script, start=1):
            obs, _, _, _ = env.step(action)
            frames[step] = inner.step(action)[0]["frame"]
        stacked = obs["frame"]
        assert (stacked[:, :, 0:1] == frames[3]).all()
        assert (stacked[:, :, 1:2] == frames[6]).all()
        env.close()
        inner.close()

    def test_ring_buffer_oracle(self):
        """Slice at dilation offset j*M equals the warped frame j*M steps back."""
        n, m = 3, 2
        config = WrapperConfig(frame_warp=(64, 64, True), frame_stack=(n, m))
        env = wrap(make("duel", EnvironmentSettingsFactory()), config)
        shadow = make("duel", EnvironmentSettingsFactory())
        rng = random.Random(10)

        obs = env.reset()
        first = warp_frame(shadow.reset()["frame"], 64, 64, True)
        history = deque([first] * (n * m), maxlen=n * m)
        for _ in range(300):
            action = rng.randrange(12)
            obs, _, done, _ = env.step(action)
            sobs, _, sdone, _ = shadow.step(action)
            history.append(warp_frame(sobs["frame"], 64, 64, True))
            stacked = obs["frame"]
            for j in range(n):
                offset = (n - 1 - j) * m
                expected = history[-1 - offset]
                assert (stacked[:, :, j : j + 1] == expected).all()
            if done:
                obs = env.reset()
                first = warp_frame(shadow.reset()["frame"], 64, 64, True)
                history = deque([first] * (n * m), maxlen=n * m)
        env.close()
        shadow.close()


class TestActionStack:
    def test_reset_fills_noops(self):
        env = wrap(make("duel", small_settings()), WrapperConfig(action_stack=12))
        obs = env.reset()
        assert obs["actionsStack"] == [[0, 0]] * 12
        env.close()

    def test_single_action_shifts_in(self):
        env = wrap(make("duel", small_settings()), WrapperConfig(action_stack=12))
        env.reset()
        obs, _, _, _ = env.step(10)  # discrete 10 -> attack button 2
        assert obs["actionsStack"][:11] == [[0, 0]] * 11
        assert obs["actionsStack"][11] == [0, 2]
        env.close()

    def test_oldest_first_order(self):
        env = wrap(make("duel", small_settings()), WrapperConfig(action_stack=3))
        env.reset()
        for action in (1, 9, 5):
            obs, _, _, _ = env.step(action)
        assert obs["actionsStack"] == [[1, 0], [0, 1], [5, 0]]
        env.close()


class TestScaling:
    def test_examples(self):
        assert _scaled_pixel(255) == 1.0
        env = wrap(make("duel", small_settings()), WrapperConfig(obs_scaling=True))
        obs = env.reset()
        assert obs["P1"]["health"] == [1.0]  # 208 -> 1.0
        assert obs["P1"]["side"] in (0, 1)  # binary unchanged
        assert obs["timer"] == 1.0
        assert obs["frame"].dtype == np.float32
        assert float(obs["frame"].max()) <= 1.0
        env.close()

    def test_health_midpoint(self):
        space = {"kind": "multiInt", "count": 1, "low": 0, "high": 208}
        assert scale_observation([104], space) == [0.5]

    def test_scaled_space_description(self):
        env = wrap(make("duel", small_settings()), WrapperConfig(obs_scaling=True))
        desc = env.observation_space
        assert desc["frame"]["dtype"] == "float32"
        assert desc["frame"]["high"] == 1.0
        env.close()


def _scaled_pixel(value):
    arr = np.array([[[value]]], dtype=np.uint8)
    return float(scale_observation(arr, {"kind": "box", "shape": [1, 1, 1], "dtype": "uint8", "low": 0, "high": 255})[0, 0, 0])


class TestFlattenFilter:
    def test_flatten_joins_with_underscore(self):
        env = wrap(make("duel", small_settings()), WrapperConfig(flatten_filter=(True, [])))
        obs = env.reset()
        assert "P1_health" in obs
        assert "P1_side" in obs
        assert "frame" in obs
        assert "P1" not in obs
        env.close()

    def test_filter_keeps_only_requested(self):
        env = wrap(make("duel", small_settings()), WrapperConfig(flatten_filter=(True, ["frame"])))
        obs = env.reset()
        assert list(obs.keys()) == ["frame"]
        env.close()

    def test_unknown_key(self):
        env = make("duel", small_settings())
        with pytest.raises(UnknownKey):
            wrap(env, WrapperConfig(flatten_filter=(True, ["bogus"])))
        env.close()

    def test_function_on_plain_dict(self):
        obs = {"P1": {"health": [3]}, "stage": 1}
        assert flatten_filter(obs, True, []) == {"P1_health": [3], "stage": 1}


class TestRewardWrappers:
    def test_normalize_examples(self):
        assert abs(normalize_reward(10, 0.5, 208) - 0.096153846) < 1e-9
        assert normalize_reward(0, 0.5, 208) == 0.0
        assert normalize_reward(3328, 0.5, 208) == 32.0
        assert normalize_reward(-1872, 0.5, 208) == -18.0

    def test_normalization_commutes_with_summation(self):
        env = wrap(
            make("duel", small_settings(seed=41)),
            WrapperConfig(reward_normalization=0.5),
        )
        raw_env = make("duel", small_settings(seed=41))
        rng = random.Random(12)
        script = [rng.randrange(12) for _ in range(500)]
        total_norm = 0.0
        total_raw = 0.0
        env.reset()
        raw_env.reset()
        for action in script:
            _, r, done, _ = env.step(action)
            _, raw, rdone, _ = raw_env.step(action)
            total_norm += r
            total_raw += raw
            assert done == rdone
            if done:
                env.reset()
                raw_env.reset()
        expected = normalize_reward(total_raw, 0.5, DUEL.delta_h)
        assert abs(total_norm - expected) <= 1e-12 * max(1.0, abs(expected))
        env.close()
        raw_env.close()

    def test_clip_examples(self):
        assert clip_reward(3.2) == 1
        assert clip_reward(-0.5) == -1
        assert clip_reward(0) == 0

    def test_clip_preserves_sign_after_normalization(self):
        for raw in (-300, -1, 0, 5, 2000):
            normalized = normalize_reward(raw, 0.5, 208)
            assert clip_reward(normalized) == clip_reward(raw)

    def test_custom_reward_hook(self):
        env = wrap(
            make("duel", small_settings(seed=3)),
            WrapperConfig(custom_reward=lambda r: r + 1.0),
        )
        env.reset()
        _, reward, _, _ = env.step(0)
        assert reward == 1.0  # far apart: raw 0 + 1
        env.close()


class TestNoopReset:
    def test_zero_is_plain_reset(self):
        rng = random.Random(19)
        script = [rng.randrange(12) for _ in range(100)]
        bare = make("duel", small_settings(seed=77))
        wrapped = wrap(make("duel", small_settings(seed=77)), WrapperConfig(noop_reset_max=0))
        assert stream_digest(bare, script) == stream_digest(wrapped, script)
        bare.close()
        wrapped.close()

    def test_reproducible_for_fixed_seed(self):
        def first_timer():
            env = wrap(
                make("duel", small_settings(seed=3, step_ratio=1)),
                WrapperConfig(noop_reset_max=5),
            )
            obs = env.reset()
            env.close()
            return obs["timer"]

        assert first_timer() == first_timer()

    def test_noop_count_uniform_chi_squared(self):
        """k ~ Uniform{0..5}: chi-squared over 10000 resets, alpha=0.001."""
        env = wrap(
            make("duel", small_settings(seed=29, step_ratio=1)),
            WrapperConfig(noop_reset_max=5),
        )
        counts = [0] * 6
        n = 10_000
        full = DUEL.round_timer_ticks
        for _ in range(n):
            obs = env.reset()
            k = full - obs["timer"]  # stepRatio 1: timer reveals the no-op count
            counts[k] += 1
        env.close()
        expected = n / 6
        chi2 = sum((c - expected) ** 2 / expected for c in counts)
        assert chi2 < 20.515, f"chi2={chi2:.2f}, counts={counts}"  # df=5, alpha=0.001


class _CountingWrapper(Wrapper):
    def __init__(self, env):
        super().__init__(env)
        self.steps = 0

    def step(self, action):
        self.steps += 1
        return self.env.step(action)


class TestStickyActions:
    def test_n1_is_identity(self):
        rng = random.Random(23)
        script = [rng.randrange(12) for _ in range(100)]
        bare = make("duel", small_settings(seed=88, step_ratio=1))
        sticky = wrap(make("duel", small_settings(seed=88, step_ratio=1)), WrapperConfig(sticky_actions=1))
        assert stream_digest(bare, script) == stream_digest(sticky, script)
        bare.close()
        sticky.close()

    def test_n3_repeats_action(self):
        counter = _CountingWrapper(make("duel", small_settings(step_ratio=1)))
        sticky = StickyActionsWrapper(counter, 3)
        sticky.reset()
        sticky.step(4)
        assert counter.steps == 3
        sticky.close()

    def test_rewards_sum_across_repeats(self):
        seed = 91
        plain = make("duel", small_settings(seed=seed, step_ratio=1))
        sticky = wrap(make("duel", small_settings(seed=seed, step_ratio=1)), WrapperConfig(sticky_actions=2))
        rng = random.Random(14)
        script = [rng.randrange(12) for _ in range(60)]
        plain.reset()
        sticky.reset()
        for action in script:
            _, r1, d1, _ = plain.step(action)
            _, r2, d2, _ = plain.step(action)
            _, rs, ds, _ = sticky.step(action)
            assert rs == r1 + r2
            assert ds == (d1 or d2)
            if ds:
                break
        plain.close()
        sticky.close()


class TestShapeContract:
    """Wrapped observation-space descriptions match emitted observations."""

    CONFIGS = [
        WrapperConfig(),
        WrapperConfig(frame_warp=(64, 64, True)),
        WrapperConfig(frame_warp=(48, 48, True), frame_stack=(4, 2), action_stack=6),
        WrapperConfig(obs_scaling=True),
        WrapperConfig(frame_warp=(32, 32, True), frame_stack=(2, 1), action_stack=3,
                      obs_scaling=True, flatten_filter=(True, []), reward_normalization=0.5),
    ]

    @pytest.mark.parametrize("config_index", range(len(CONFIGS)))
    def test_every_step_matches_space(self, config_index):
        from marena.spaces import check_observation

        config = self.CONFIGS[config_index]
        env = wrap(make("duel", small_settings(seed=60 + config_index, frame_shape=(0, 0, 3))), config)
        space = env.observation_space
        rng = random.Random(config_index)
        obs = env.reset()
        check_observation(obs, space)
        for _ in range(120):
            obs, _, done, _ = env.step(rng.randrange(12))
            check_observation(obs, space)
            if done:
                obs = env.reset()
                check_observation(obs, space)
        env.close()

    def test_two_player_space_contract(self):
        from marena.spaces import check_observation

        env = make("duel", small_settings(player="P1P2", seed=8))
        space = env.observation_space
        rng = random.Random(4)
        obs = env.reset()
        check_observation(obs, space)
        sp = env.action_space
        for _ in range(60):
            obs, _, done, _ = env.step(sp.sample(rng))
            check_observation(obs, space)
            if done:
                check_observation(env.reset(), space)
        env.close()
