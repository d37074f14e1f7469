"""marena-client: remote-env SDK and play tool for marena engine servers.

    import marena_client

    env = marena_client.make("duel")
    obs = env.reset()
    while True:
        env.render()
        obs, rew, done, info = env.step(env.action_space.sample())
        if done:
            break
    env.close()
"""

from .errors import ClientError, ConnectionFailed, ServerError
from .imitation import ImitationLearning
from .sdk import RemoteEnv, make
from .trajfile import TrajectoryFile

__version__ = "0.1.0"

__all__ = [
    "ClientError",
    "ConnectionFailed",
    "ImitationLearning",
    "RemoteEnv",
    "ServerError",
    "TrajectoryFile",
    "make",
    "__version__",
]
