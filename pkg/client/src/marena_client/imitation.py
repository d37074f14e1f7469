"""Replay environment over recorded demonstrations.

    import marena_client

    settings = {"traj_files_list": ["demos.marn"], "total_cpus": 2}
    env = marena_client.ImitationLearning(**settings)
    obs = env.reset()
    while True:
        obs, rew, done, info = env.step(0)
        if done:
            break
    env.close()

Episodes from all files are indexed globally (file order, then episode
order) and dealt round-robin across ``total_cpus`` workers; this instance
serves indices congruent to ``rank``. Submitted actions are ignored; the
recorded human action is exposed as ``info["replayAction"]``.
"""

from __future__ import annotations

from .errors import (
    BadShard,
    ExhaustedTrajectories,
    IncompatibleRecordings,
    NotReset,
    TrajectoryFormatError,
)
from .trajfile import TrajectoryFile, decode_record


class ImitationLearning:
    def __init__(self, traj_files_list: list[str], total_cpus: int = 1, rank: int = 0):
        if total_cpus < 1 or not 0 <= rank < total_cpus:
            raise BadShard(f"rank must satisfy 0 <= rank < total_cpus, got {rank}/{total_cpus}")
        if not traj_files_list:
            raise TrajectoryFormatError("no trajectory files given")
        self.files = [TrajectoryFile(path) for path in traj_files_list]
        key = self.files[0].compat_key()
        for f in self.files[1:]:
            if f.compat_key() != key:
                raise IncompatibleRecordings(
                    f"{f.path} was recorded with different settings than {self.files[0].path}"
                )
        episodes = [ep for f in self.files for ep in f.episodes]
        self.episodes = episodes[rank::total_cpus]
        self.header = self.files[0].header
        self._cursor = -1
        self._step = 0
        self._in_episode = False

    @property
    def episodes_remaining(self) -> int:
        return len(self.episodes) - self._cursor - 1

    def reset(self):
        self._cursor += 1
        if self._cursor >= len(self.episodes):
            raise ExhaustedTrajectories("no recorded episodes remaining")
        kind, obs, _, _, _, _ = decode_record(self.episodes[self._cursor][0])
        if kind != "reset":
            raise TrajectoryFormatError("episode does not start with a reset record")
        self._step = 1
        self._in_episode = True
        return obs

    def step(self, action=0):
        del action  # the stream is already written
        if self._cursor >= len(self.episodes):
            raise ExhaustedTrajectories("no recorded episodes remaining")
        if not self._in_episode or self._step >= len(self.episodes[self._cursor]):
            if self._cursor + 1 >= len(self.episodes):
                raise ExhaustedTrajectories("no recorded episodes remaining")
            raise NotReset("episode finished; call reset()")
        kind, obs, action_rec, reward, done, info = decode_record(
            self.episodes[self._cursor][self._step]
        )
        if kind != "step":
            raise TrajectoryFormatError("unexpected record kind inside episode")
        self._step += 1
        info = dict(info)
        info["replayAction"] = action_rec
        if done:
            self._in_episode = False
        return obs, reward, done, info

    def close(self) -> None:
        self.episodes = []
        self._cursor = 0
        self._in_episode = False
