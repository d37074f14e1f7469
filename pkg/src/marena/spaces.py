"""Observation-space descriptions.

Spaces are plain nested dicts so they serialize over the wire unchanged.
Leaf descriptors carry ``kind`` plus bounds:

* ``{"kind": "box", "shape": [...], "dtype": ..., "low": ..., "high": ...}``
* ``{"kind": "int", "low": ..., "high": ...}``: bounded integer
* ``{"kind": "binary"}``: 0/1 flag

Observation scaling maps every numeric leaf through
``(value - low) / (high - low)``; for 0-based integers that equals
value / (cardinality - 1). See docs/wrappers.md.
"""

from __future__ import annotations

from .actions import NUM_MOVES, ActionSpaceSpec
from .gamedef import GameDefinition


def frame_box(shape: tuple[int, int, int]) -> dict:
    return {"kind": "box", "shape": list(shape), "dtype": "uint8", "low": 0, "high": 255}


def _side_group(gdef: GameDefinition) -> dict:
    nc = gdef.num_chars_per_side
    return {
        "health": {
            "kind": "multiInt",
            "count": nc,
            "low": gdef.h_min,
            "high": gdef.h_max,
        },
        "side": {"kind": "binary"},
        "wins": {"kind": "int", "low": 0, "high": gdef.rounds_to_win},
        "character": {
            "kind": "multiInt",
            "count": nc,
            "low": 0,
            "high": len(gdef.roster) - 1,
        },
    }


def last_actions_desc(action_spec: ActionSpaceSpec) -> dict:
    return {
        "kind": "actionPair",
        "moves": NUM_MOVES,
        "attacks": action_spec.attacks,
    }


def observation_space(
    gdef: GameDefinition,
    frame_shape: tuple[int, int, int],
    action_spec: ActionSpaceSpec,
    hardcore: bool,
    two_player: bool,
) -> dict:
    """Space description matching the observations the env will emit."""
    if hardcore:
        return frame_box(frame_shape)
    last_actions = (
        {"P1": last_actions_desc(action_spec), "P2": last_actions_desc(action_spec)}
        if two_player
        else last_actions_desc(action_spec)
    )
    return {
        "frame": frame_box(frame_shape),
        "stage": {"kind": "int", "low": 1, "high": gdef.max_stages},
        "timer": {"kind": "int", "low": 0, "high": gdef.round_timer_ticks},
        "P1": _side_group(gdef),
        "P2": _side_group(gdef),
        "lastActions": last_actions,
    }


def is_leaf(desc) -> bool:
    return isinstance(desc, dict) and "kind" in desc


def walk(desc: dict, prefix: tuple[str, ...] = ()):
    """Yield (path, leaf descriptor) pairs in sorted key order."""
    if is_leaf(desc):
        yield prefix, desc
        return
    for key in sorted(desc):
        yield from walk(desc[key], prefix + (key,))


def _check_leaf(value, desc, path: str) -> None:
    import numpy as np

    kind = desc["kind"]
    scaled = desc.get("scaled", False)
    if kind == "box":
        if not isinstance(value, np.ndarray):
            raise AssertionError(f"{path}: expected ndarray, got {type(value).__name__}")
        if list(value.shape) != list(desc["shape"]):
            raise AssertionError(f"{path}: shape {value.shape} != {desc['shape']}")
        if str(value.dtype) != desc["dtype"]:
            raise AssertionError(f"{path}: dtype {value.dtype} != {desc['dtype']}")
        return
    if kind == "binary":
        if value not in (0, 1):
            raise AssertionError(f"{path}: binary flag out of range: {value!r}")
        return
    if kind == "int":
        lo, hi = (0.0, 1.0) if scaled else (desc["low"], desc["high"])
        if not lo <= value <= hi:
            raise AssertionError(f"{path}: {value!r} outside [{lo}, {hi}]")
        return
    if kind == "multiInt":
        lo, hi = (0.0, 1.0) if scaled else (desc["low"], desc["high"])
        if len(value) != desc["count"] or not all(lo <= v <= hi for v in value):
            raise AssertionError(f"{path}: {value!r} violates multiInt bounds")
        return
    if kind == "actionPair":
        hi_m, hi_a = (1.0, 1.0) if scaled else (desc["moves"] - 1, desc["attacks"] - 1)
        if len(value) != 2 or not (0 <= value[0] <= hi_m and 0 <= value[1] <= hi_a):
            raise AssertionError(f"{path}: action pair {value!r} out of range")
        return
    if kind == "actionStack":
        if len(value) != desc["count"]:
            raise AssertionError(f"{path}: stack length {len(value)} != {desc['count']}")
        hi_m, hi_a = (1.0, 1.0) if scaled else (desc["moves"] - 1, desc["attacks"] - 1)
        for pair in value:
            if not (0 <= pair[0] <= hi_m and 0 <= pair[1] <= hi_a):
                raise AssertionError(f"{path}: stacked action {pair!r} out of range")
        return
    raise AssertionError(f"{path}: unknown leaf kind {kind!r}")


def check_observation(obs, space, path: str = "obs") -> None:
    """Assert an emitted observation matches its space description.

    The shape contract: every key present with matching leaf shape/bounds.
    Cheap enough to run per step in test suites.
    """
    if is_leaf(space):
        _check_leaf(obs, space, path)
        return
    if not isinstance(obs, dict):
        raise AssertionError(f"{path}: expected dict observation, got {type(obs).__name__}")
    if set(obs) != set(space):
        raise AssertionError(f"{path}: keys {sorted(obs)} != {sorted(space)}")
    for key in space:
        check_observation(obs[key], space[key], f"{path}.{key}")
