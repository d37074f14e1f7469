from __future__ import annotations

import random

import pytest
from hypothesis import given, settings as hsettings, strategies as st

from marena import sim
from marena.errors import (
    ActionOutOfRange,
    DifficultyOutOfRange,
    PhaseViolation,
    UnknownCharacter,
)
from marena.gamedef import load_game
from marena.settings import EnvironmentSettings

DUEL = load_game("duel")
TAGDUEL = load_game("tagduel")
IDLE = ((0, 0), (0, 0))


def duel_settings(**overrides):
    defaults = dict(game_id="duel", seed=7)
    defaults.update(overrides)
    return EnvironmentSettings(**defaults)


def fresh_state(seed=7, **overrides):
    return sim.init_match(DUEL, duel_settings(**overrides), seed)


class TestInitMatch:
    def test_initial_contract(self):
        state = fresh_state()
        assert state.stage_index == 1
        assert state.round_index == 1
        assert state.phase == sim.PHASE_IN_ROUND
        assert state.timer_ticks == DUEL.round_timer_ticks
        for fighter in state.fighters:
            assert fighter.healths == [208]
        left, right = state.fighters
        assert left.position < right.position
        assert left.position + right.position == DUEL.arena_width  # mirrored

    def test_bit_identical_repeat(self):
        assert fresh_state(seed=123) == fresh_state(seed=123)

    def test_unknown_character(self):
        with pytest.raises(UnknownCharacter):
            sim.init_match(DUEL, duel_settings(characters=["NoSuchName"]), 7)

    def test_player_p2_puts_agent_right(self):
        state = fresh_state(player="P2")
        assert state.agent_side == 1

    def test_two_player_uses_both_character_lists(self):
        settings = duel_settings(player="P1P2", characters={"P1": ["Kato"], "P2": ["Mira"]})
        state = sim.init_match(DUEL, settings, 7)
        assert state.fighters[0].char_ids == [2]
        assert state.fighters[1].char_ids == [3]

    def test_outfit_limited_by_char_outfits(self):
        for seed in range(20):
            state = fresh_state(seed=seed, char_outfits=2)
            agent = state.fighters[state.agent_side]
            assert all(o < 2 for o in agent.outfit_ids)


class TestTick:
    def test_idle_far_apart_only_timer_moves(self):
        state = fresh_state()
        nxt, events = sim.tick(state, DUEL, IDLE)
        assert events == []
        assert nxt.timer_ticks == state.timer_ticks - 1
        assert nxt.fighters[0].healths == [208]
        assert nxt.fighters[1].healths == [208]
        # pure function: input state untouched
        assert state.timer_ticks == DUEL.round_timer_ticks

    def test_hit_lands_on_first_active_frame(self):
        # hand trace: Akari A1 has startup 6, damage 8, range 30
        state = fresh_state()
        state.fighters[0].position = 100
        state.fighters[1].position = 120
        state, events = sim.tick(state, DUEL, ((0, 1), (0, 0)))
        assert state.fighters[0].attack_slot == 1
        assert events == []
        for _ in range(5):
            state, events = sim.tick(state, DUEL, IDLE)
            assert events == []
            assert state.fighters[1].healths == [208]
        state, events = sim.tick(state, DUEL, IDLE)
        assert ("hit", 1, 8) in events
        assert state.fighters[1].healths == [200]

    def test_guard_blocks_damage(self):
        state = fresh_state()
        state.fighters[0].position = 100
        state.fighters[1].position = 120
        # crouch-guard (down-away) blocks without retreating out of range
        guard = (6, 0)
        state, _ = sim.tick(state, DUEL, ((0, 1), guard))
        for _ in range(6):
            state, events = sim.tick(state, DUEL, ((0, 0), guard))
        assert state.fighters[1].position == 120
        assert state.fighters[1].healths == [208]
        assert not any(e[0] == "hit" for e in events)

    def test_guard_breaker_disables_guard(self):
        state = fresh_state()
        state.fighters[0].position = 100
        state.fighters[1].position = 118
        guard = (6, 0)
        state, _ = sim.tick(state, DUEL, ((0, 3), guard))  # A3 vs guard
        events_all = []
        for _ in range(10):
            state, events = sim.tick(state, DUEL, ((0, 0), guard))
            events_all += events
        assert any(e[0] == "guardBreak" for e in events_all)
        assert state.fighters[1].healths == [208]  # break itself deals no damage
        assert state.fighters[1].guard_broken_ticks > 0
        assert not state.fighters[1].guarding

    def test_crouch_evades_jump_attack(self):
        state = fresh_state()
        state.fighters[0].position = 100
        state.fighters[1].position = 118
        # attacker jumps, then attacks mid-air; defender crouches (toward, so not guarding)
        state, _ = sim.tick(state, DUEL, ((3, 0), (6, 0)))
        assert state.fighters[0].pose == sim.POSE_JUMP
        assert state.fighters[1].pose == sim.POSE_CROUCH
        state, _ = sim.tick(state, DUEL, ((0, 1), (6, 0)))
        for _ in range(8):
            state, events = sim.tick(state, DUEL, ((0, 0), (6, 0)))
            assert not any(e[0] == "hit" for e in events)
        assert state.fighters[1].healths == [208]

    def test_timer_expiry_declares_round_end(self):
        state = fresh_state()
        state.timer_ticks = 1
        state.fighters[0].healths = [150]
        state.fighters[1].healths = [90]
        state, events = sim.tick(state, DUEL, IDLE)
        assert ("roundEnd", "timer") in events
        assert state.phase == sim.PHASE_ROUND_END
        assert sim.round_outcome(state, DUEL) == sim.RoundOutcome.LEFT_WINS

    def test_tick_requires_in_round(self):
        state = fresh_state()
        state.phase = sim.PHASE_ROUND_END
        with pytest.raises(PhaseViolation):
            sim.tick(state, DUEL, IDLE)

    def test_action_range_checked(self):
        state = fresh_state()
        with pytest.raises(ActionOutOfRange):
            sim.tick(state, DUEL, ((9, 0), (0, 0)))
        with pytest.raises(ActionOutOfRange):
            sim.tick(state, DUEL, ((0, 7), (0, 0)))

    def test_fighters_never_cross(self):
        state = fresh_state()
        # walk both toward each other well past the meeting point
        for _ in range(200):
            state, events = sim.tick(state, DUEL, ((5, 0), (1, 0)))
        left, right = state.fighters
        assert right.position - left.position >= sim.BODY_GAP

    def test_combo_damage_is_member_sum(self):
        # Akari A1+A2 combo: damage 8+12=20, startup max(6,14)=14, recovery 8+16=24
        state = fresh_state()
        state.fighters[0].position = 100
        state.fighters[1].position = 120
        state, _ = sim.tick(state, DUEL, ((0, 4), (0, 0)))
        table = sim.attack_slot_table(DUEL, 0)
        assert table[3] == (20, 38, 14, 6, 24, False)
        for _ in range(13):
            state, events = sim.tick(state, DUEL, IDLE)
            assert state.fighters[1].healths == [208]
        state, events = sim.tick(state, DUEL, IDLE)
        assert ("hit", 1, 20) in events


class TestRounds:
    def _end_round(self, state, left_h, right_h, timer=0):
        state.fighters[0].healths = list(left_h)
        state.fighters[1].healths = list(right_h)
        state.timer_ticks = timer
        state.phase = sim.PHASE_ROUND_END
        return state

    def test_ko_outcome(self):
        state = self._end_round(fresh_state(), [120], [0], timer=400)
        assert sim.round_outcome(state, DUEL) == sim.RoundOutcome.LEFT_WINS

    def test_timer_tie_is_draw(self):
        state = self._end_round(fresh_state(), [100], [100])
        assert sim.round_outcome(state, DUEL) == sim.RoundOutcome.DRAW

    def test_outcome_requires_round_end(self):
        with pytest.raises(PhaseViolation):
            sim.round_outcome(fresh_state(), DUEL)

    def test_first_draw_replays_round(self):
        state = self._end_round(fresh_state(), [100], [100])
        events = sim.resolve_round_inplace(state, DUEL)
        assert ("roundDraw",) in events
        assert state.phase == sim.PHASE_IN_ROUND
        assert state.consecutive_draws == 1
        assert state.fighters[0].round_wins == 0
        assert state.fighters[1].round_wins == 0
        assert state.fighters[0].healths == [208]
        assert state.timer_ticks == DUEL.round_timer_ticks

    def test_second_consecutive_draw_awards_opponent(self):
        state = self._end_round(fresh_state(), [100], [100])
        sim.resolve_round_inplace(state, DUEL)
        state = self._end_round(state, [50], [50])
        events = sim.resolve_round_inplace(state, DUEL)
        opponent = 1 - state.agent_side
        assert ("roundDrawAwarded", opponent) in events
        assert state.fighters[opponent].round_wins == 1

    def test_win_resets_draw_counter(self):
        state = self._end_round(fresh_state(), [100], [100])
        sim.resolve_round_inplace(state, DUEL)
        state = self._end_round(state, [180], [60])
        sim.resolve_round_inplace(state, DUEL)
        assert state.consecutive_draws == 0

    def test_stage_progression_on_agent_sweep(self):
        state = fresh_state()
        opponent_before = list(state.fighters[1].char_ids)
        for _ in range(DUEL.rounds_to_win):
            state = self._end_round(state, [208], [0], timer=500)
            sim.resolve_round_inplace(state, DUEL)
        assert state.stage_index == 2
        assert state.phase == sim.PHASE_IN_ROUND
        assert state.fighters[0].round_wins == 0
        assert state.fighters[1].char_ids != opponent_before

    def test_game_over_when_agent_loses_stage(self):
        state = fresh_state()
        for _ in range(DUEL.rounds_to_win):
            state = self._end_round(state, [0], [208], timer=500)
            events = sim.resolve_round_inplace(state, DUEL)
        assert state.phase == sim.PHASE_GAME_OVER
        assert ("gameOver", 1) in events

    def test_cleared_after_final_stage(self):
        state = fresh_state()
        state.stage_index = DUEL.max_stages
        for _ in range(DUEL.rounds_to_win):
            state = self._end_round(state, [208], [0], timer=500)
            events = sim.resolve_round_inplace(state, DUEL)
        assert state.phase == sim.PHASE_CLEARED
        assert ("cleared",) in events

    def test_two_player_single_stage(self):
        settings = duel_settings(player="P1P2", difficulty=2)
        state = sim.init_match(DUEL, settings, 7)
        for _ in range(DUEL.rounds_to_win):
            state = self._end_round(state, [208], [0], timer=500)
            events = sim.resolve_round_inplace(state, DUEL)
        assert state.phase == sim.PHASE_GAME_OVER
        assert ("gameOver", 0) in events
        assert state.stage_index == 1

    def test_continue_stage_resets_wins(self):
        state = fresh_state()
        for _ in range(DUEL.rounds_to_win):
            state = self._end_round(state, [0], [208], timer=500)
            sim.resolve_round_inplace(state, DUEL)
        stage = state.stage_index
        sim.continue_stage_inplace(state, DUEL)
        assert state.phase == sim.PHASE_IN_ROUND
        assert state.stage_index == stage
        assert state.fighters[0].round_wins == 0
        assert state.fighters[1].round_wins == 0


class TestScriptedPolicy:
    def test_deterministic(self):
        state = fresh_state()
        first = sim.scripted_policy(state, DUEL, 1, 3)
        assert all(sim.scripted_policy(state, DUEL, 1, 3) == first for _ in range(10))

    def test_difficulty_out_of_range(self):
        state = fresh_state()
        with pytest.raises(DifficultyOutOfRange):
            sim.scripted_policy(state, DUEL, 1, 0)
        with pytest.raises(DifficultyOutOfRange):
            sim.scripted_policy(state, DUEL, 1, 5)

    def test_pure_no_state_mutation(self):
        state = fresh_state()
        snapshot = state.copy()
        sim.scripted_policy(state, DUEL, 1, 4)
        assert state == snapshot

    @staticmethod
    def _opponent_win_rate(difficulty: int, episodes: int) -> float:
        """Monte Carlo: scripted opponent vs uniform-random agent.

        Round win rate (wins / rounds played) is the difficulty metric:
        raw counts are confounded by stronger opponents finishing episodes
        in fewer rounds.
        """
        opp_wins = 0
        rounds = 0
        step_ratio = 6
        for ep in range(episodes):
            settings = duel_settings(difficulty=difficulty, seed=50_000 + ep)
            state = sim.init_match(DUEL, settings, 50_000 + ep)
            rng = random.Random(77_000 + ep)
            agent, opp = state.agent_side, 1 - state.agent_side
            while state.phase not in (sim.PHASE_GAME_OVER, sim.PHASE_CLEARED):
                agent_action = (rng.randrange(9), rng.randrange(4))
                opp_action = sim.scripted_policy(state, DUEL, opp, difficulty)
                inputs = (agent_action, opp_action) if agent == 0 else (opp_action, agent_action)
                for _ in range(step_ratio):
                    if state.phase != sim.PHASE_IN_ROUND:
                        break
                    sim.tick_inplace(state, DUEL, inputs)
                    if state.phase == sim.PHASE_ROUND_END:
                        events = sim.resolve_round_inplace(state, DUEL)
                        for event in events:
                            if event[0] == "roundWin":
                                rounds += 1
                                if event[1] == opp:
                                    opp_wins += 1
                            elif event[0] == "roundDraw":
                                rounds += 1
        return opp_wins / rounds

    def test_higher_difficulty_wins_more_rounds(self):
        episodes = 200
        low = self._opponent_win_rate(1, episodes)
        high = self._opponent_win_rate(DUEL.difficulty_levels, episodes)
        assert high > low, f"difficulty gradient broken: d1 rate {low:.3f}, d4 rate {high:.3f}"


class TestInvariantsProperty:
    @hsettings(max_examples=30, deadline=None)
    @given(
        seed=st.integers(min_value=0, max_value=2**32 - 1),
        script=st.lists(
            st.tuples(st.integers(0, 8), st.integers(0, 6), st.integers(0, 8), st.integers(0, 6)),
            min_size=20,
            max_size=60,
        ),
    )
    def test_health_monotone_and_bounded_within_round(self, seed, script):
        settings = duel_settings(seed=seed, attack_but_combination=True)
        state = sim.init_match(DUEL, settings, seed)
        state.fighters[0].position = 100
        state.fighters[1].position = 130
        previous = (list(state.fighters[0].healths), list(state.fighters[1].healths))
        for ml, al, mr, ar in script * 10:
            if state.phase != sim.PHASE_IN_ROUND:
                sim.resolve_round_inplace(state, DUEL)
                if state.phase != sim.PHASE_IN_ROUND:
                    break
                previous = (list(state.fighters[0].healths), list(state.fighters[1].healths))
                continue
            sim.tick_inplace(state, DUEL, ((ml, al), (mr, ar)))
            current = (list(state.fighters[0].healths), list(state.fighters[1].healths))
            for side in (0, 1):
                for before, after in zip(previous[side], current[side]):
                    assert after <= before  # never heals inside a round
                    assert DUEL.h_min <= after <= DUEL.h_max
            previous = current

    @hsettings(max_examples=15, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**32 - 1))
    def test_every_episode_terminates(self, seed):
        settings = duel_settings(seed=seed)
        state = sim.init_match(DUEL, settings, seed)
        rng = random.Random(seed ^ 0xABCDEF)
        # generous bound: stages * rounds (with draw replays) * timer
        max_ticks = DUEL.max_stages * (4 * DUEL.rounds_to_win + 2) * (DUEL.round_timer_ticks + 1)
        ticks = 0
        while state.phase not in (sim.PHASE_GAME_OVER, sim.PHASE_CLEARED):
            inputs = ((rng.randrange(9), rng.randrange(4)), (rng.randrange(9), rng.randrange(4)))
            for _ in range(6):
                if state.phase != sim.PHASE_IN_ROUND:
                    break
                sim.tick_inplace(state, DUEL, inputs)
                ticks += 1
                if state.phase == sim.PHASE_ROUND_END:
                    sim.resolve_round_inplace(state, DUEL)
            assert ticks <= max_ticks, "episode failed to terminate in bounded ticks"

    def test_round_reset_restores_full_state(self):
        state = fresh_state()
        state.fighters[0].healths = [55]
        state.fighters[1].healths = [99]
        state.timer_ticks = 3
        state.phase = sim.PHASE_ROUND_END
        sim.resolve_round_inplace(state, DUEL)
        assert state.timer_ticks == DUEL.round_timer_ticks
        assert state.fighters[0].healths == [DUEL.h_max]
        assert state.fighters[1].healths == [DUEL.h_max]


class TestTagDuel:
    def test_tag_swap_rotates_active_char(self):
        settings = EnvironmentSettings(game_id="tagduel", seed=3)
        state = sim.init_match(TAGDUEL, settings, 3)
        assert state.fighters[0].active_char == 0
        for _ in range(sim.TAG_SWAP_TICKS):
            sim.tick_inplace(state, TAGDUEL, IDLE)
        assert state.fighters[0].active_char == 1
        assert state.fighters[1].active_char == 1

    def test_ko_of_single_character_ends_round(self):
        settings = EnvironmentSettings(game_id="tagduel", seed=3)
        state = sim.init_match(TAGDUEL, settings, 3)
        state.fighters[1].healths = [1, 160]
        state.fighters[0].position = 100
        state.fighters[1].position = 118
        sim.tick_inplace(state, TAGDUEL, ((0, 1), (0, 0)))
        events = []
        while state.phase == sim.PHASE_IN_ROUND:
            events = sim.tick_inplace(state, TAGDUEL, IDLE)
        assert state.phase == sim.PHASE_ROUND_END
        assert ("roundEnd", "ko") in events
        assert sim.round_outcome(state, TAGDUEL) == sim.RoundOutcome.LEFT_WINS
