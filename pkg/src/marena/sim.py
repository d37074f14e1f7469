"""Deterministic headless match simulation.

All transitions are pure functions of (state, inputs): ``tick`` copies the
state and advances exactly one simulation tick at the nominal 60 ticks/s
rate. The mutating kernels (``tick_inplace``, ``resolve_round_inplace``)
are exposed for owners of private state copies (the environment layer);
they implement the same transition.

Combat model (a stand-in, see docs/combat-model.md): damage applies once,
on the first active frame of an attack, when the horizontal distance is
within the attack's range and the defender is not guarding. Guarding
(holding away from the opponent on the ground) blocks all damage; the A3
button breaks guard for a fixed window instead of dealing damage; a
crouching defender evades attacks thrown from the air.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .actions import MOVE_DX, MOVE_DY, NUM_MOVES
from .errors import ActionOutOfRange, DifficultyOutOfRange, PhaseViolation
from .gamedef import ATTACK_BUTTONS, GameDefinition
from .rng import _MASK, mix, u01
from .settings import PLAYER_P2, PLAYER_RANDOM, EnvironmentSettings

TICKS_PER_SECOND = 60

# Match phases. STAGE_END is transient: stage bookkeeping resolves it to the
# next round / terminal phase within the same resolve call, so callers only
# ever observe the other four.
PHASE_IN_ROUND = 0
PHASE_ROUND_END = 1
PHASE_STAGE_END = 2
PHASE_GAME_OVER = 3
PHASE_CLEARED = 4
PHASE_NAMES = ("inRound", "roundEnd", "stageEnd", "gameOver", "cleared")

POSE_STAND = 0
POSE_CROUCH = 1
POSE_JUMP = 2

STAGE_STARTUP = 0
STAGE_ACTIVE = 1
STAGE_RECOVERY = 2

JUMP_TICKS = 28
GUARD_BREAK_TICKS = 30
TAG_SWAP_TICKS = 240
WALL_MARGIN = 16
BODY_GAP = 18
START_OFFSET_NUM = 5  # start positions at 5/16 and 11/16 of the arena
START_OFFSET_DEN = 16


class RoundOutcome(Enum):
    LEFT_WINS = "leftWins"
    RIGHT_WINS = "rightWins"
    DRAW = "draw"


@dataclass(slots=True, eq=True)
class FighterState:
    position: int
    pose: int
    jump_ticks_left: int
    jump_drift: int
    attack_slot: int  # 0 = not attacking
    attack_stage: int
    attack_ticks_left: int
    guarding: bool
    guard_broken_ticks: int
    healths: list[int]
    active_char: int
    round_wins: int
    char_ids: list[int]
    outfit_ids: list[int]

    def copy(self) -> "FighterState":
        return FighterState(
            self.position, self.pose, self.jump_ticks_left, self.jump_drift,
            self.attack_slot, self.attack_stage, self.attack_ticks_left,
            self.guarding, self.guard_broken_ticks, list(self.healths),
            self.active_char, self.round_wins, list(self.char_ids), list(self.outfit_ids),
        )


@dataclass(slots=True, eq=True)
class MatchState:
    stage_index: int
    round_index: int
    timer_ticks: int
    fighters: list[FighterState]  # [left/P1 side, right/P2 side]
    phase: int
    tick: int
    rng_state: int
    consecutive_draws: int
    # match-static configuration captured at init
    two_player: bool
    agent_side: int  # 0 = left; 2P always uses 0 (the P1 reward perspective)
    difficulty: int

    def copy(self) -> "MatchState":
        return MatchState(
            self.stage_index, self.round_index, self.timer_ticks,
            [self.fighters[0].copy(), self.fighters[1].copy()],
            self.phase, self.tick, self.rng_state, self.consecutive_draws,
            self.two_player, self.agent_side, self.difficulty,
        )


# Per-slot attack data: (damage, range, startup, active, recovery, breaks_guard).
# Keyed by (game_id, char_index); game definitions are immutable singletons.
_SLOT_CACHE: dict[tuple[str, int], tuple] = {}


def attack_slot_table(gdef: GameDefinition, char_index: int) -> tuple:
    key = (gdef.game_id, char_index)
    table = _SLOT_CACHE.get(key)
    if table is None:
        char = gdef.roster[char_index]
        entries = []
        button_sets = [(b,) for b in ATTACK_BUTTONS] + list(gdef.attack_combos)
        for buttons in button_sets:
            specs = [char.attacks[b] for b in buttons]
            # combos: summed damage and recovery (heavy moves are punishable),
            # slowest member's startup
            entries.append((
                sum(s.damage for s in specs),
                max(s.range for s in specs),
                max(s.startup_ticks for s in specs),
                max(s.active_ticks for s in specs),
                sum(s.recovery_ticks for s in specs),
                "A3" in buttons,
            ))
        table = tuple(entries)
        _SLOT_CACHE[key] = table
    return table


def _start_positions(gdef: GameDefinition) -> tuple[int, int]:
    left = gdef.arena_width * START_OFFSET_NUM // START_OFFSET_DEN
    return left, gdef.arena_width - left


def _reset_fighter_for_round(f: FighterState, gdef: GameDefinition, position: int) -> None:
    f.position = position
    f.pose = POSE_STAND
    f.jump_ticks_left = 0
    f.jump_drift = 0
    f.attack_slot = 0
    f.attack_stage = 0
    f.attack_ticks_left = 0
    f.guarding = False
    f.guard_broken_ticks = 0
    f.healths = [gdef.h_max] * gdef.num_chars_per_side
    f.active_char = 0


def start_round_inplace(state: MatchState, gdef: GameDefinition) -> None:
    """Reset both fighters for a fresh round: full health, full timer."""
    pl, pr = _start_positions(gdef)
    _reset_fighter_for_round(state.fighters[0], gdef, pl)
    _reset_fighter_for_round(state.fighters[1], gdef, pr)
    state.timer_ticks = gdef.round_timer_ticks
    state.phase = PHASE_IN_ROUND


def _opponent_char_ids(gdef: GameDefinition, agent_char_ids: list[int], stage_index: int) -> list[int]:
    # 1P ladder: the opponent roster rotates deterministically with the stage.
    n = len(gdef.roster)
    return [(cid + stage_index + i) % n for i, cid in enumerate(agent_char_ids)]


def _draw_outfits(state: MatchState, gdef: GameDefinition, char_ids: list[int], limit: int | None) -> list[int]:
    out = []
    for cid in char_ids:
        bound = len(gdef.roster[cid].outfit_palettes) if limit is None else limit
        state.rng_state = (state.rng_state + 0x9E3779B97F4A7C15) & _MASK
        out.append(mix(state.rng_state) % bound)
    return out


def _setup_stage_inplace(state: MatchState, gdef: GameDefinition) -> None:
    """Enter the current stage: 1P opponents rotate, round wins reset."""
    if not state.two_player:
        opp = state.fighters[1 - state.agent_side]
        agent = state.fighters[state.agent_side]
        opp.char_ids = _opponent_char_ids(gdef, agent.char_ids, state.stage_index)
        opp.outfit_ids = _draw_outfits(state, gdef, opp.char_ids, None)
    state.fighters[0].round_wins = 0
    state.fighters[1].round_wins = 0
    state.consecutive_draws = 0
    start_round_inplace(state, gdef)


def init_match(gdef: GameDefinition, settings: EnvironmentSettings, seed: int) -> MatchState:
    """Build the initial MatchState: stage 1, round 1, full health, seeded RNG."""
    settings.validate(gdef)
    rng_state = mix(seed & _MASK)

    if settings.two_player:
        agent_side = 0
    elif settings.player == PLAYER_RANDOM:
        rng_state = (rng_state + 0x9E3779B97F4A7C15) & _MASK
        agent_side = mix(rng_state) & 1
    else:
        agent_side = 1 if settings.player == PLAYER_P2 else 0

    def fighter(char_names: list[str]) -> FighterState:
        char_ids = [gdef.char_index(n) for n in char_names]
        return FighterState(
            position=0, pose=POSE_STAND, jump_ticks_left=0, jump_drift=0,
            attack_slot=0, attack_stage=0, attack_ticks_left=0,
            guarding=False, guard_broken_ticks=0,
            healths=[gdef.h_max] * gdef.num_chars_per_side,
            active_char=0, round_wins=0, char_ids=char_ids,
            outfit_ids=[0] * gdef.num_chars_per_side,
        )

    state = MatchState(
        stage_index=1, round_index=1, timer_ticks=gdef.round_timer_ticks,
        fighters=[], phase=PHASE_IN_ROUND, tick=0, rng_state=rng_state,
        consecutive_draws=0, two_player=settings.two_player,
        agent_side=agent_side, difficulty=settings.difficulty,
    )

    if settings.two_player:
        left = fighter(settings.characters_for(gdef, "P1"))
        right = fighter(settings.characters_for(gdef, "P2"))
        state.fighters = [left, right]
        left.outfit_ids = _draw_outfits(state, gdef, left.char_ids, settings.char_outfits)
        right.outfit_ids = _draw_outfits(state, gdef, right.char_ids, settings.char_outfits)
        start_round_inplace(state, gdef)
    else:
        agent = fighter(settings.characters_for(gdef, "P1"))
        opp = fighter(settings.characters_for(gdef, "P1"))  # placeholder, rotated below
        state.fighters = [agent, opp] if agent_side == 0 else [opp, agent]
        agent.outfit_ids = _draw_outfits(state, gdef, agent.char_ids, settings.char_outfits)
        _setup_stage_inplace(state, gdef)
    return state


def tick_inplace(state: MatchState, gdef: GameDefinition, inputs) -> list:
    """Advance one tick, mutating ``state``. Returns the emitted events."""
    if state.phase != PHASE_IN_ROUND:
        raise PhaseViolation(f"tick requires inRound, phase is {PHASE_NAMES[state.phase]}")
    events: list = []
    fighters = state.fighters
    nc = gdef.num_chars_per_side
    h_min = gdef.h_min
    n_slots = len(ATTACK_BUTTONS) + len(gdef.attack_combos)

    pre_pos = (fighters[0].position, fighters[1].position)
    desired = [fighters[0].position, fighters[1].position]
    just_active = [False, False]

    for i in (0, 1):
        f = fighters[i]
        move, attack = inputs[i]
        if not (0 <= move < NUM_MOVES):
            raise ActionOutOfRange(f"move index {move} outside 0..{NUM_MOVES - 1}")
        if not (0 <= attack <= n_slots):
            raise ActionOutOfRange(f"attack index {attack} outside 0..{n_slots}")

        locked = f.attack_slot != 0
        if locked:
            f.attack_ticks_left -= 1
            if f.attack_ticks_left <= 0:
                table = attack_slot_table(gdef, f.char_ids[f.active_char])
                entry = table[f.attack_slot - 1]
                if f.attack_stage == STAGE_STARTUP:
                    f.attack_stage = STAGE_ACTIVE
                    f.attack_ticks_left = entry[3]
                    just_active[i] = True
                elif f.attack_stage == STAGE_ACTIVE:
                    f.attack_stage = STAGE_RECOVERY
                    f.attack_ticks_left = entry[4]
                else:
                    f.attack_slot = 0
                    f.attack_stage = 0
                    f.attack_ticks_left = 0
        elif attack:
            table = attack_slot_table(gdef, f.char_ids[f.active_char])
            f.attack_slot = attack
            f.attack_stage = STAGE_STARTUP
            f.attack_ticks_left = table[attack - 1][2]
            locked = True

        speed = gdef.roster[f.char_ids[f.active_char]].move_speed
        if f.pose == POSE_JUMP:
            # airborne physics run regardless of attack state
            desired[i] = f.position + f.jump_drift * speed
            f.jump_ticks_left -= 1
            if f.jump_ticks_left <= 0:
                f.pose = POSE_STAND
                f.jump_drift = 0
        elif not locked:
            dy = MOVE_DY[move]
            dx = MOVE_DX[move]
            if dy < 0:
                f.pose = POSE_CROUCH
            elif dy > 0:
                f.pose = POSE_JUMP
                f.jump_ticks_left = JUMP_TICKS
                f.jump_drift = dx
            else:
                f.pose = POSE_STAND
                desired[i] = f.position + dx * speed

        if f.guard_broken_ticks > 0:
            f.guard_broken_ticks -= 1
        away = -1 if pre_pos[1 - i] > pre_pos[i] else 1
        f.guarding = (
            not locked
            and f.pose != POSE_JUMP
            and f.guard_broken_ticks == 0
            and MOVE_DX[move] == away
            and MOVE_DY[move] <= 0
        )

    # walls, then the no-crossing gap (fighters cannot walk through each other)
    lo, hi = WALL_MARGIN, gdef.arena_width - WALL_MARGIN
    dl = min(max(desired[0], lo), hi)
    dr = min(max(desired[1], lo), hi)
    if dr - dl < BODY_GAP:
        center = (dl + dr) // 2
        dl = center - BODY_GAP // 2
        dr = dl + BODY_GAP
        if dl < lo:
            dl, dr = lo, lo + BODY_GAP
        elif dr > hi:
            dl, dr = hi - BODY_GAP, hi
    fighters[0].position = dl
    fighters[1].position = dr

    # hits resolve simultaneously on this tick's final positions
    pending: list[tuple[int, int]] = []
    for i in (0, 1):
        if not just_active[i]:
            continue
        att = fighters[i]
        de = fighters[1 - i]
        entry = attack_slot_table(gdef, att.char_ids[att.active_char])[att.attack_slot - 1]
        if abs(att.position - de.position) > entry[1]:
            continue
        if att.pose == POSE_JUMP and de.pose == POSE_CROUCH:
            continue  # crouch evades aerial attacks
        if de.guarding:
            if entry[5]:
                de.guard_broken_ticks = GUARD_BREAK_TICKS
                de.guarding = False
                events.append(("guardBreak", 1 - i))
            continue
        pending.append((1 - i, entry[0]))
    for side, dmg in pending:
        de = fighters[side]
        h = de.healths[de.active_char]
        applied = min(dmg, h - h_min)
        if applied > 0:
            de.healths[de.active_char] = h - applied
            events.append(("hit", side, applied))

    state.tick += 1

    if any(h <= h_min for h in fighters[0].healths) or any(h <= h_min for h in fighters[1].healths):
        state.phase = PHASE_ROUND_END
        events.append(("roundEnd", "ko"))
        return events

    state.timer_ticks -= 1
    if state.timer_ticks <= 0:
        state.phase = PHASE_ROUND_END
        events.append(("roundEnd", "timer"))
        return events

    if nc > 1:
        elapsed = gdef.round_timer_ticks - state.timer_ticks
        if elapsed % TAG_SWAP_TICKS == 0:
            for f in fighters:
                f.active_char = (f.active_char + 1) % nc
            events.append(("tagSwap",))
    return events


def tick(state: MatchState, gdef: GameDefinition, inputs) -> tuple[MatchState, list]:
    """Pure single-tick transition: returns (next state, events)."""
    nxt = state.copy()
    events = tick_inplace(nxt, gdef, inputs)
    return nxt, events


def round_outcome(state: MatchState, gdef: GameDefinition) -> RoundOutcome:
    """Outcome of the round that just ended (requires phase == roundEnd).

    KO (any health at the floor) beats the timer rule; on timer expiry the
    strictly higher summed health wins and an exact tie is a draw. A double
    KO on the same tick is also a draw.
    """
    if state.phase != PHASE_ROUND_END:
        raise PhaseViolation(f"round_outcome requires roundEnd, phase is {PHASE_NAMES[state.phase]}")
    left, right = state.fighters
    left_ko = any(h == gdef.h_min for h in left.healths)
    right_ko = any(h == gdef.h_min for h in right.healths)
    if left_ko or right_ko:
        if left_ko and right_ko:
            return RoundOutcome.DRAW
        return RoundOutcome.LEFT_WINS if right_ko else RoundOutcome.RIGHT_WINS
    sum_left, sum_right = sum(left.healths), sum(right.healths)
    if sum_left > sum_right:
        return RoundOutcome.LEFT_WINS
    if sum_right > sum_left:
        return RoundOutcome.RIGHT_WINS
    return RoundOutcome.DRAW


def resolve_round_inplace(state: MatchState, gdef: GameDefinition) -> list:
    """Apply round bookkeeping after a roundEnd and advance the match.

    Draw handling: the first draw replays the round; a second consecutive
    draw awards the round to the agent's opponent (right side in 2P, where
    the agent perspective is P1/left). Stage wins rotate to the next stage
    (1P), clear the game on the last stage, or end the episode. A losing
    stage leaves phase == gameOver; the caller may revive via
    ``continue_stage_inplace`` (the continue-game draw belongs to the
    environment layer).
    """
    outcome = round_outcome(state, gdef)
    events: list = []

    if outcome == RoundOutcome.DRAW:
        state.consecutive_draws += 1
        if state.consecutive_draws < 2:
            events.append(("roundDraw",))
            state.round_index += 1
            start_round_inplace(state, gdef)
            return events
        winner = 1 - state.agent_side
        state.consecutive_draws = 0
        events.append(("roundDrawAwarded", winner))
    else:
        state.consecutive_draws = 0
        winner = 0 if outcome == RoundOutcome.LEFT_WINS else 1

    state.fighters[winner].round_wins += 1
    events.append(("roundWin", winner))

    if state.fighters[winner].round_wins < gdef.rounds_to_win:
        state.round_index += 1
        start_round_inplace(state, gdef)
        return events

    events.append(("stageEnd", winner))
    if state.two_player or winner != state.agent_side:
        state.phase = PHASE_GAME_OVER
        events.append(("gameOver", winner))
    elif state.stage_index >= gdef.max_stages:
        state.phase = PHASE_CLEARED
        events.append(("cleared",))
    else:
        state.stage_index += 1
        state.round_index += 1
        _setup_stage_inplace(state, gdef)
    return events


def resolve_round(state: MatchState, gdef: GameDefinition) -> tuple[MatchState, list]:
    """Pure variant of ``resolve_round_inplace``."""
    nxt = state.copy()
    events = resolve_round_inplace(nxt, gdef)
    return nxt, events


def continue_stage_inplace(state: MatchState, gdef: GameDefinition) -> None:
    """1P continue: replay the current stage with round wins reset."""
    if state.phase != PHASE_GAME_OVER or state.two_player:
        raise PhaseViolation("continue is only available at a 1P game over")
    state.fighters[0].round_wins = 0
    state.fighters[1].round_wins = 0
    state.consecutive_draws = 0
    state.round_index += 1
    start_round_inplace(state, gdef)


# --- scripted opponent ----------------------------------------------------

_POLICY_SALT_TICK = 0xD1B54A32D192ED03
_POLICY_SALT_SIDE = 0x8CB92BA72F3D8DD7


def _policy_draws(state: MatchState, side: int, difficulty: int) -> tuple[float, float, float]:
    h = mix(state.rng_state ^ (state.tick * _POLICY_SALT_TICK) & _MASK ^ (side + 1) * _POLICY_SALT_SIDE ^ difficulty)
    h2 = mix(h)
    h3 = mix(h2)
    return u01(h), u01(h2), u01(h3)


def scripted_policy(state: MatchState, gdef: GameDefinition, side: int, difficulty: int) -> tuple[int, int]:
    """Deterministic built-in opponent for 1P mode.

    A pure function of (state.rng_state, state fields, difficulty): the same
    state always yields the same action. Higher difficulty raises approach,
    attack and blocking rates monotonically.
    """
    if not isinstance(difficulty, int) or not 1 <= difficulty <= gdef.difficulty_levels:
        raise DifficultyOutOfRange(
            f"difficulty must be in 1..{gdef.difficulty_levels}, got {difficulty}"
        )
    me = state.fighters[side]
    foe = state.fighters[1 - side]
    if me.attack_slot:
        return (0, 0)  # committed to the current attack

    u_act, u_sel, u_jit = _policy_draws(state, side, difficulty)
    d = difficulty / gdef.difficulty_levels
    table = attack_slot_table(gdef, me.char_ids[me.active_char])
    reach = max(entry[1] for entry in table[:3])
    dist = abs(foe.position - me.position)
    toward = 5 if foe.position > me.position else 1
    away = 1 if toward == 5 else 5

    # block an incoming attack; punish a foe stuck in recovery
    if foe.attack_slot and dist <= reach + 24:
        if foe.attack_stage != STAGE_RECOVERY:
            if u_act < 0.25 + 0.60 * d:
                return (away, 0)
        elif dist <= reach and u_act < 0.40 + 0.50 * d:
            return (0, 1) if u_sel < 0.6 else (0, 2)

    if dist <= reach:
        if u_act < 0.15 + 0.25 * d:
            if foe.guarding and u_sel < 0.30 + 0.50 * d:
                return (0, 3)  # guard breaker
            return (0, 1) if u_sel < 0.55 else (0, 2)
        if u_act < 0.35 + 0.25 * d:
            return (away if u_jit < 0.35 else toward, 0)
        return (0, 0) if u_jit < 0.5 else (toward, 0)

    if u_act < 0.35 + 0.60 * d:
        return (toward, 0)
    return (int(u_jit * NUM_MOVES) % NUM_MOVES, 0)
