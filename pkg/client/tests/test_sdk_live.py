"""The standard episodic loop through the client SDK against a live server."""

from __future__ import annotations

import numpy as np
import pytest

import marena_client
from marena_client.errors import ConnectionFailed, ServerError, UseAfterClose

SMALL = {"frameShape": [32, 32, 1], "seed": 4, "difficulty": 3}


def test_basic_usage_loop_runs_to_done(live_server):
    env = marena_client.make("duel", SMALL, address=live_server)
    obs = env.reset()
    assert obs["P1"]["health"] == [208]
    steps = 0
    while True:
        env.render()
        actions = env.action_space.sample()
        obs, rew, done, info = env.step(actions)
        steps += 1
        if done:
            obs = env.reset()
            break
    env.close()
    assert steps > 0
    assert info["episodeDone"] is True


def test_action_space_mirrors_server_reply(live_server):
    env = marena_client.make("duel", SMALL, address=live_server)
    assert env.action_space_desc["discreteSize"] == 12
    assert env.action_space.n == 12
    for _ in range(50):
        assert env.action_space.contains(env.action_space.sample())
    env.close()

    env = marena_client.make(
        "duel", {**SMALL, "actionSpace": "multiDiscrete", "attackButCombination": True},
        address=live_server,
    )
    assert env.action_space.sizes == [9, 7]
    env.close()


def test_observation_matches_declared_space(live_server):
    env = marena_client.make("duel", SMALL, address=live_server)
    obs = env.reset()
    shape = env.observation_space["frame"]["shape"]
    assert list(obs["frame"].shape) == shape
    assert obs["frame"].dtype == np.uint8
    frame = env.render()
    assert frame.shape == (256, 256, 3)
    env.close()


def test_two_player_keyed_actions(live_server):
    env = marena_client.make("duel", {"player": "P1P2", "frameShape": [32, 32, 1], "seed": 2},
                             address=live_server)
    env.reset()
    action = env.action_space.sample()
    assert set(action) == {"P1", "P2"}
    obs, reward, done, info = env.step(action)
    assert reward["P1"] + reward["P2"] == 0.0
    env.close()


def test_bounds_query(live_server):
    env = marena_client.make("duel", SMALL, address=live_server)
    assert env.bounds() == (-1872, 3328)
    env.close()


def test_server_down_is_actionable():
    with pytest.raises(ConnectionFailed, match="marena serve"):
        marena_client.make("duel", SMALL, address=("127.0.0.1", 1))


def test_bad_settings_surface_key(live_server):
    with pytest.raises(ServerError) as exc:
        marena_client.make("duel", {"stepRatio": 42}, address=live_server)
    assert exc.value.code == 5
    assert "stepRatio" in str(exc.value)


def test_unknown_game_code(live_server):
    with pytest.raises(ServerError) as exc:
        marena_client.make("nosuchgame", address=live_server)
    assert exc.value.code == 4


def test_step_after_close(live_server):
    env = marena_client.make("duel", SMALL, address=live_server)
    env.reset()
    env.close()
    with pytest.raises(UseAfterClose):
        env.step(0)


def test_deterministic_same_seed_sessions(live_server):
    def run():
        env = marena_client.make("duel", SMALL, address=live_server)
        env.reset()
        stream = []
        for i in range(60):
            obs, reward, done, _ = env.step(i % 12)
            stream.append((obs["frame"].tobytes(), reward, done))
            if done:
                env.reset()
        env.close()
        return stream

    assert run() == run()
