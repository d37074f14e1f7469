"""Environment settings: the per-instance key/value configuration.

Settings travel as documents (see ``kvdoc``) with camelCase keys; the
Python dataclass mirrors them with snake_case attributes. ``validate``
raises the most specific error available; all of them are
``InvalidSettings`` subclasses carrying the offending key.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .actions import DISCRETE, MULTI_DISCRETE
from .errors import (
    DifficultyOutOfRange,
    InvalidSettings,
    OutfitOutOfRange,
    UnknownCharacter,
)
from .gamedef import GameDefinition

PLAYER_P1 = "P1"
PLAYER_P2 = "P2"
PLAYER_RANDOM = "Random"
PLAYER_P1P2 = "P1P2"
PLAYER_MODES = (PLAYER_P1, PLAYER_P2, PLAYER_RANDOM, PLAYER_P1P2)

MAX_STEP_RATIO = 6
NATIVE = 0  # frame shape height/width value meaning "keep native"


@dataclass
class EnvironmentSettings:
    game_id: str = ""
    player: str = PLAYER_P1
    step_ratio: int = 6
    frame_shape: tuple[int, int, int] = (NATIVE, NATIVE, 3)
    continue_game: float = 0.0
    difficulty: int = 2
    characters: object = None  # list[str] (1P) or {"P1": [...], "P2": [...]} (2P)
    char_outfits: int = 1
    action_space: str = DISCRETE
    attack_but_combination: bool = False
    hardcore: bool = False
    seed: int = 0

    @property
    def two_player(self) -> bool:
        return self.player == PLAYER_P1P2

    def characters_for(self, gdef: GameDefinition, player_key: str) -> list[str]:
        """Resolved character list for "P1"/"P2"; defaults to the roster head."""
        default = [gdef.roster[i % len(gdef.roster)].name for i in range(gdef.num_chars_per_side)]
        chars = self.characters
        if chars is None:
            return default
        if isinstance(chars, dict):
            picked = chars.get(player_key)
            return default if picked is None else list(picked)
        if self.two_player:
            return list(chars)  # same list on both sides
        return list(chars) if player_key == "P1" else default

    def validate(self, gdef: GameDefinition) -> None:
        if self.player not in PLAYER_MODES:
            raise InvalidSettings("player", f"player must be one of {PLAYER_MODES}")
        if not isinstance(self.step_ratio, int) or not 1 <= self.step_ratio <= MAX_STEP_RATIO:
            raise InvalidSettings("stepRatio", f"stepRatio must be an integer in 1..{MAX_STEP_RATIO}")
        if not 0.0 <= self.continue_game <= 1.0:
            raise InvalidSettings("continueGame", "continueGame must be within [0.0, 1.0]")
        if self.two_player and self.continue_game != 0.0:
            raise InvalidSettings("continueGame", "continueGame is a 1P-only setting")
        if not self.two_player:
            if not isinstance(self.difficulty, int) or not 1 <= self.difficulty <= gdef.difficulty_levels:
                raise DifficultyOutOfRange(
                    f"difficulty must be in 1..{gdef.difficulty_levels}, got {self.difficulty}"
                )
        h, w, c = self.frame_shape
        if c not in (1, 3):
            raise InvalidSettings("frameShape", "frame channels must be 1 or 3")
        if (h == NATIVE) != (w == NATIVE) or h < 0 or w < 0:
            raise InvalidSettings("frameShape", "height/width must both be positive or both 0 (native)")
        if self.action_space not in (DISCRETE, MULTI_DISCRETE):
            raise InvalidSettings("actionSpace", f"actionSpace must be {DISCRETE!r} or {MULTI_DISCRETE!r}")
        if not isinstance(self.char_outfits, int) or self.char_outfits < 1:
            raise InvalidSettings("charOutfits", "charOutfits must be an integer >= 1")
        if isinstance(self.characters, dict) and not self.two_player:
            raise InvalidSettings("characters", "per-player character dict requires player=P1P2")
        for key in ("P1", "P2") if self.two_player else ("P1",):
            names = self.characters_for(gdef, key)
            if len(names) != gdef.num_chars_per_side:
                raise InvalidSettings(
                    "characters",
                    f"{gdef.game_id} needs {gdef.num_chars_per_side} character(s) per side, got {len(names)}",
                )
            for name in names:
                idx = gdef.char_index(name)
                if idx is None:
                    raise UnknownCharacter(name)
                if self.char_outfits > len(gdef.roster[idx].outfit_palettes):
                    raise OutfitOutOfRange(
                        f"charOutfits={self.char_outfits} exceeds {name}'s "
                        f"{len(gdef.roster[idx].outfit_palettes)} palettes"
                    )
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise InvalidSettings("seed", "seed must be an unsigned 64-bit integer")
        if not isinstance(self.hardcore, bool):
            raise InvalidSettings("hardcore", "hardcore must be a boolean")
        if not isinstance(self.attack_but_combination, bool):
            raise InvalidSettings("attackButCombination", "attackButCombination must be a boolean")

    def to_doc(self) -> dict:
        return {
            "gameId": self.game_id,
            "player": self.player,
            "stepRatio": self.step_ratio,
            "frameShape": list(self.frame_shape),
            "continueGame": self.continue_game,
            "difficulty": self.difficulty,
            "characters": self.characters,
            "charOutfits": self.char_outfits,
            "actionSpace": self.action_space,
            "attackButCombination": self.attack_but_combination,
            "hardcore": self.hardcore,
            "seed": self.seed,
        }

    @classmethod
    def from_doc(cls, doc: dict, game_id: str | None = None) -> "EnvironmentSettings":
        known = {
            "gameId", "player", "stepRatio", "frameShape", "continueGame", "difficulty",
            "characters", "charOutfits", "actionSpace", "attackButCombination", "hardcore", "seed",
        }
        for key in doc:
            if key not in known:
                raise InvalidSettings(key, f"unknown setting {key!r}")
        s = cls(
            game_id=doc.get("gameId", game_id or ""),
            player=doc.get("player", PLAYER_P1),
            step_ratio=doc.get("stepRatio", 6),
            frame_shape=tuple(doc.get("frameShape", (NATIVE, NATIVE, 3))),
            continue_game=doc.get("continueGame", 0.0),
            difficulty=doc.get("difficulty", 2),
            characters=doc.get("characters"),
            char_outfits=doc.get("charOutfits", 1),
            action_space=doc.get("actionSpace", DISCRETE),
            attack_but_combination=doc.get("attackButCombination", False),
            hardcore=doc.get("hardcore", False),
            seed=doc.get("seed", 0),
        )
        if game_id is not None:
            s.game_id = game_id
        return s

    def with_seed(self, seed: int) -> "EnvironmentSettings":
        return replace(self, seed=seed)
