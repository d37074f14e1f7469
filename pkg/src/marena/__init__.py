"""marena: deterministic fighting-game RL environments.

Typical use mirrors the standard episodic RL loop::

    import marena

    env = marena.make("duel")
    obs = env.reset()
    while True:
        env.render()
        obs, reward, done, info = env.step(env.action_space.sample())
        if done:
            break
    env.close()
"""

from .actions import ActionSpaceSpec, TwoPlayerActionSpace
from .env import ArenaEnv, compute_reward, episode_reward_bounds, make
from .errors import ArenaError
from .gamedef import GameDefinition, available_games, load_game
from .settings import EnvironmentSettings
from .trajectory import ReplayEnv, TrajectoryRecorder, open_recorder
from .wrappers import WrapperConfig, wrap

__version__ = "0.1.0"

__all__ = [
    "ActionSpaceSpec",
    "ArenaEnv",
    "ArenaError",
    "EnvironmentSettings",
    "GameDefinition",
    "ReplayEnv",
    "TrajectoryRecorder",
    "TwoPlayerActionSpace",
    "WrapperConfig",
    "available_games",
    "compute_reward",
    "episode_reward_bounds",
    "load_game",
    "make",
    "open_recorder",
    "wrap",
    "__version__",
]
