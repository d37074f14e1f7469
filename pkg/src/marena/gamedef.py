"""Game definitions: the static parameters of one synthetic game.

Definitions are shipped as versioned JSON data files (one per game id, see
``docs/game-definitions.md``). Engine code never hardcodes per-game numbers;
everything flows from these files.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from . import kvdoc
from .errors import UnknownGame

ATTACK_BUTTONS = ("A1", "A2", "A3")

DATA_FORMAT_VERSION = 1


@dataclass(frozen=True)
class AttackSpec:
    damage: int
    range: int
    startup_ticks: int
    active_ticks: int
    recovery_ticks: int

    def validate(self) -> None:
        if self.damage <= 0:
            raise ValueError("attack damage must be > 0")
        if self.range <= 0:
            raise ValueError("attack range must be > 0")
        for ticks in (self.startup_ticks, self.active_ticks, self.recovery_ticks):
            if ticks < 1:
                raise ValueError("attack phase tick counts must be >= 1")


@dataclass(frozen=True)
class CharacterSpec:
    name: str
    move_speed: int
    attacks: dict[str, AttackSpec]
    outfit_palettes: tuple[tuple[int, int, int], ...]

    def validate(self) -> None:
        if set(self.attacks) != set(ATTACK_BUTTONS):
            raise ValueError(f"character {self.name!r} must define attacks {ATTACK_BUTTONS}")
        for spec in self.attacks.values():
            spec.validate()
        if self.move_speed < 1:
            raise ValueError("move speed must be >= 1")
        if len(self.outfit_palettes) < 2:
            raise ValueError(f"character {self.name!r} needs at least 2 outfit palettes")


@dataclass(frozen=True)
class GameDefinition:
    game_id: str
    h_max: int
    h_min: int
    num_chars_per_side: int
    max_stages: int
    rounds_to_win: int
    roster: tuple[CharacterSpec, ...]
    arena_width: int
    round_timer_ticks: int
    native_frame_shape: tuple[int, int, int]
    difficulty_levels: int
    attack_combos: tuple[tuple[str, ...], ...]
    stage_palette: tuple[tuple[int, int, int], ...]

    @property
    def delta_h(self) -> int:
        return self.h_max - self.h_min

    def char_index(self, name: str) -> int | None:
        for i, char in enumerate(self.roster):
            if char.name == name:
                return i
        return None

    def validate(self) -> None:
        if self.h_max <= self.h_min:
            raise ValueError("hMax must exceed hMin")
        if self.num_chars_per_side < 1 or self.max_stages < 1 or self.rounds_to_win < 1:
            raise ValueError("numCharsPerSide, maxStages and roundsToWin must be >= 1")
        if not self.roster:
            raise ValueError("roster must not be empty")
        for char in self.roster:
            char.validate()
        for combo in self.attack_combos:
            if len(combo) < 2 or not set(combo) <= set(ATTACK_BUTTONS):
                raise ValueError(f"combo {combo} must be a subset of size >= 2 of {ATTACK_BUTTONS}")
        if len(self.stage_palette) < self.max_stages:
            raise ValueError("stage palette must cover every stage")
        if self.difficulty_levels < 1:
            raise ValueError("difficultyLevels must be >= 1")
        if self.arena_width < 64 or self.round_timer_ticks < 1:
            raise ValueError("arenaWidth/roundTimerTicks out of range")


def _parse(doc: dict) -> GameDefinition:
    if doc.get("formatVersion") != DATA_FORMAT_VERSION:
        raise ValueError(f"unsupported game data format version {doc.get('formatVersion')!r}")
    roster = tuple(
        CharacterSpec(
            name=c["name"],
            move_speed=c["moveSpeed"],
            attacks={
                button: AttackSpec(
                    damage=a["damage"],
                    range=a["range"],
                    startup_ticks=a["startupTicks"],
                    active_ticks=a["activeTicks"],
                    recovery_ticks=a["recoveryTicks"],
                )
                for button, a in c["attacks"].items()
            },
            outfit_palettes=tuple(tuple(p) for p in c["outfitPalettes"]),
        )
        for c in doc["roster"]
    )
    gdef = GameDefinition(
        game_id=doc["gameId"],
        h_max=doc["hMax"],
        h_min=doc["hMin"],
        num_chars_per_side=doc["numCharsPerSide"],
        max_stages=doc["maxStages"],
        rounds_to_win=doc["roundsToWin"],
        roster=roster,
        arena_width=doc["arenaWidth"],
        round_timer_ticks=doc["roundTimerTicks"],
        native_frame_shape=tuple(doc["nativeFrameShape"]),
        difficulty_levels=doc["difficultyLevels"],
        attack_combos=tuple(tuple(c) for c in doc["attackCombos"]),
        stage_palette=tuple(tuple(p) for p in doc["stagePalette"]),
    )
    gdef.validate()
    return gdef


_CACHE: dict[str, GameDefinition] = {}


def available_games() -> list[str]:
    files = resources.files("marena.data")
    return sorted(
        entry.name[: -len(".json")]
        for entry in files.iterdir()
        if entry.name.endswith(".json")
    )


def load_game(game_id: str) -> GameDefinition:
    """Load a shipped game definition by id (cached, read-only)."""
    if game_id in _CACHE:
        return _CACHE[game_id]
    entry = resources.files("marena.data").joinpath(f"{game_id}.json")
    if not entry.is_file():
        raise UnknownGame(f"unknown game {game_id!r}; available: {available_games()}")
    gdef = _parse(kvdoc.decode(entry.read_bytes()))
    if gdef.game_id != game_id:
        raise ValueError(f"game data file {game_id}.json declares gameId {gdef.game_id!r}")
    _CACHE[game_id] = gdef
    return gdef
