"""Action encoding: 9-way moves, attack buttons and their combinations.

Two space families exist, each with and without attack-button combos:

* discrete: one index, the 9 moves first, then the attacks
              (9 + 3 = 12 without combos, 9 + 6 = 15 with)
* multi-discrete: a (move, attack) pair with 0 = no-op in each component
              ((9, 4) without combos, (9, 7) with)

A decoded action is always a ``(move, attack)`` index pair fed to the
simulation; a discrete attack index implies a no-op move.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import ActionOutOfRange
from .gamedef import ATTACK_BUTTONS, GameDefinition

MOVE_NAMES = (
    "NoMove",
    "Left",
    "UpLeft",
    "Up",
    "UpRight",
    "Right",
    "DownRight",
    "Down",
    "DownLeft",
)
NUM_MOVES = len(MOVE_NAMES)

# Horizontal component per move index (-1 left, +1 right).
MOVE_DX = (0, -1, -1, 0, 1, 1, 1, 0, -1)
# Vertical intent per move index: 1 = up (jump), -1 = down (crouch).
MOVE_DY = (0, 0, 1, 1, 1, 0, -1, -1, -1)

DISCRETE = "discrete"
MULTI_DISCRETE = "multiDiscrete"


def attack_names(gdef: GameDefinition, combos: bool) -> tuple[str, ...]:
    """Attack slot names: no-op, single buttons, then combos when enabled."""
    names = ["NoAttack", *ATTACK_BUTTONS]
    if combos:
        names += ["+".join(c) for c in gdef.attack_combos]
    return tuple(names)


@dataclass(frozen=True)
class ActionSpaceSpec:
    """Shape of one player's action space, plus encode/decode helpers."""

    variant: str
    combos: bool
    moves: int
    attacks: int  # attack slots including the no-attack entry

    @property
    def discrete_size(self) -> int:
        return self.moves + self.attacks - 1

    @property
    def multi_discrete_sizes(self) -> tuple[int, int]:
        return (self.moves, self.attacks)

    def decode(self, action) -> tuple[int, int]:
        """Validate and decode an encoded action into a (move, attack) pair."""
        if self.variant == DISCRETE:
            if isinstance(action, bool) or not isinstance(action, int):
                raise ActionOutOfRange(f"discrete action must be an int, got {type(action).__name__}")
            if not 0 <= action < self.discrete_size:
                raise ActionOutOfRange(f"action {action} outside [0, {self.discrete_size})")
            if action < self.moves:
                return (action, 0)
            return (0, action - self.moves + 1)
        try:
            move, attack = action
        except (TypeError, ValueError):
            raise ActionOutOfRange(f"multi-discrete action must be a (move, attack) pair, got {action!r}")
        if not (isinstance(move, int) and isinstance(attack, int)):
            raise ActionOutOfRange("multi-discrete components must be ints")
        if not (0 <= move < self.moves and 0 <= attack < self.attacks):
            raise ActionOutOfRange(f"action {action!r} outside {self.multi_discrete_sizes}")
        return (move, attack)

    def sample(self, rng: random.Random | None = None):
        """Uniform random action in this space (Listing-1 style rollouts)."""
        rng = rng or random
        if self.variant == DISCRETE:
            return rng.randrange(self.discrete_size)
        return [rng.randrange(self.moves), rng.randrange(self.attacks)]

    def contains(self, action) -> bool:
        try:
            self.decode(action)
            return True
        except ActionOutOfRange:
            return False

    def describe(self) -> dict:
        return {
            "variant": self.variant,
            "combos": self.combos,
            "discreteSize": self.discrete_size,
            "multiDiscreteSizes": list(self.multi_discrete_sizes),
        }


class TwoPlayerActionSpace:
    """Keyed pair of per-player spaces for 2P mode ("P1"/"P2")."""

    KEYS = ("P1", "P2")

    def __init__(self, per_player: ActionSpaceSpec):
        self.per_player = per_player

    def __getitem__(self, key: str) -> ActionSpaceSpec:
        if key not in self.KEYS:
            raise KeyError(key)
        return self.per_player

    def sample(self, rng: random.Random | None = None) -> dict:
        return {key: self.per_player.sample(rng) for key in self.KEYS}

    def describe(self) -> dict:
        return {"keys": list(self.KEYS), "perPlayer": self.per_player.describe()}


def build_action_space(gdef: GameDefinition, variant: str, combos: bool) -> ActionSpaceSpec:
    attacks = 1 + len(ATTACK_BUTTONS) + (len(gdef.attack_combos) if combos else 0)
    return ActionSpaceSpec(variant=variant, combos=combos, moves=NUM_MOVES, attacks=attacks)


def attack_slot_buttons(gdef: GameDefinition, slot: int) -> tuple[str, ...]:
    """Buttons pressed for an attack slot index (slot >= 1)."""
    if slot <= len(ATTACK_BUTTONS):
        return (ATTACK_BUTTONS[slot - 1],)
    return gdef.attack_combos[slot - len(ATTACK_BUTTONS) - 1]
