"""Headless software rasterizer for the native game frame.

Pure function of (state, definition): stage-colored background, fighters as
palette-colored rectangles with pose-dependent geometry, health bars
proportional to remaining health, a timer bar and round-win pips. Every
RAM-state value has a visible counterpart here (fair-information rule).
"""

from __future__ import annotations

import numpy as np

from .gamedef import GameDefinition
from .sim import (
    POSE_CROUCH,
    POSE_JUMP,
    STAGE_ACTIVE,
    STAGE_STARTUP,
    JUMP_TICKS,
    MatchState,
)

FLOOR_Y_FRAC = 0.82
STAND_H_FRAC = 0.30
CROUCH_H_FRAC = 0.18
FIGHTER_W_FRAC = 0.09
JUMP_RISE_FRAC = 0.16

_BG_CACHE: dict[tuple[str, int], np.ndarray] = {}


def _background(gdef: GameDefinition, stage_index: int) -> np.ndarray:
    key = (gdef.game_id, stage_index)
    bg = _BG_CACHE.get(key)
    if bg is None:
        h, w, _ = gdef.native_frame_shape
        bg = np.empty((h, w, 3), dtype=np.uint8)
        bg[:, :] = gdef.stage_palette[stage_index - 1]
        floor_y = int(h * FLOOR_Y_FRAC)
        bg[floor_y:, :] = [i // 2 for i in gdef.stage_palette[stage_index - 1]]
        _BG_CACHE[key] = bg
    return bg


def _fill(frame: np.ndarray, x0: int, y0: int, x1: int, y1: int, color) -> None:
    h, w, _ = frame.shape
    x0, x1 = max(0, x0), min(w, x1)
    y0, y1 = max(0, y0), min(h, y1)
    if x0 < x1 and y0 < y1:
        frame[y0:y1, x0:x1] = color


def fighter_bbox(state: MatchState, gdef: GameDefinition, side: int) -> tuple[int, int, int, int]:
    """Pixel bounding box (x0, y0, x1, y1) of one fighter's body."""
    h, w, _ = gdef.native_frame_shape
    f = state.fighters[side]
    floor_y = int(h * FLOOR_Y_FRAC)
    half_w = max(2, int(w * FIGHTER_W_FRAC) // 2)
    cx = f.position * w // gdef.arena_width
    if f.pose == POSE_CROUCH:
        body_h = int(h * CROUCH_H_FRAC)
        bottom = floor_y
    elif f.pose == POSE_JUMP:
        body_h = int(h * STAND_H_FRAC)
        # triangular flight arc peaking mid-jump
        t = JUMP_TICKS - f.jump_ticks_left
        rise = int(h * JUMP_RISE_FRAC)
        lift = rise * (JUMP_TICKS - abs(2 * t - JUMP_TICKS)) // JUMP_TICKS
        bottom = floor_y - lift
    else:
        body_h = int(h * STAND_H_FRAC)
        bottom = floor_y
    return (cx - half_w, bottom - body_h, cx + half_w, bottom)


def render_native(state: MatchState, gdef: GameDefinition) -> np.ndarray:
    """Rasterize the native RGB frame for ``state``. Deterministic."""
    h, w, _ = gdef.native_frame_shape
    frame = _background(gdef, state.stage_index).copy()
    nc = gdef.num_chars_per_side
    delta_h = gdef.delta_h

    for side in (0, 1):
        f = state.fighters[side]
        palette = gdef.roster[f.char_ids[f.active_char]].outfit_palettes[f.outfit_ids[f.active_char]]
        x0, y0, x1, y1 = fighter_bbox(state, gdef, side)
        _fill(frame, x0, y0, x1, y1, palette)
        if f.attack_slot and f.attack_stage in (STAGE_STARTUP, STAGE_ACTIVE):
            # attack arm toward the opponent; bright while active
            arm_len = max(4, (x1 - x0) // 2 + 6)
            arm_y = (y0 + y1) // 2
            shade = (255, 255, 255) if f.attack_stage == STAGE_ACTIVE else (190, 190, 190)
            direction = 1 if state.fighters[1 - side].position > f.position else -1
            if direction > 0:
                _fill(frame, x1, arm_y - 2, x1 + arm_len, arm_y + 2, shade)
            else:
                _fill(frame, x0 - arm_len, arm_y - 2, x0, arm_y + 2, shade)
        if f.guarding:
            edge = 3
            gx = x0 - edge if state.fighters[1 - side].position < f.position else x1
            _fill(frame, gx, y0, gx + edge, y1, (240, 240, 240))

    # HUD: per-character health bars, round-win pips, timer bar, stage pips
    bar_w = int(w * 0.32) // nc
    for side in (0, 1):
        f = state.fighters[side]
        for ci in range(nc):
            filled = (f.healths[ci] - gdef.h_min) * bar_w // delta_h
            y0, y1 = 6, 12
            if side == 0:
                x0 = 6 + ci * (bar_w + 4)
            else:
                x0 = w - 6 - (nc - ci) * (bar_w + 4) + 4
            _fill(frame, x0, y0, x0 + bar_w, y1, (70, 70, 70))
            if filled > 0:
                _fill(frame, x0, y0, x0 + filled, y1, (60, 220, 60) if ci == f.active_char else (40, 160, 40))
        for pip in range(f.round_wins):
            px = 6 + pip * 9 if side == 0 else w - 12 - pip * 9
            _fill(frame, px, 15, px + 6, 21, (250, 210, 60))

    timer_w = int(w * 0.18)
    filled = state.timer_ticks * timer_w // max(1, gdef.round_timer_ticks)
    tx = (w - timer_w) // 2
    _fill(frame, tx, 6, tx + timer_w, 12, (70, 70, 70))
    if filled > 0:
        _fill(frame, tx, 6, tx + filled, 12, (230, 230, 230))
    for pip in range(state.stage_index):
        _fill(frame, tx + pip * 8, 15, tx + pip * 8 + 5, 20, (150, 150, 230))

    return frame


_WARP_IDX: dict[tuple[int, int, int, int], tuple[np.ndarray, np.ndarray]] = {}


def warp_frame(frame: np.ndarray, height: int, width: int, grayscale: bool) -> np.ndarray:
    """Nearest-neighbor resize and optional ITU-601 grayscale conversion.

    Grayscale uses integer arithmetic, round-half-up:
    gray = (299 R + 587 G + 114 B + 500) // 1000.
    """
    src_h, src_w = frame.shape[:2]
    out = frame
    if (height, width) != (src_h, src_w):
        key = (src_h, src_w, height, width)
        idx = _WARP_IDX.get(key)
        if idx is None:
            rows = (np.arange(height) * src_h) // height
            cols = (np.arange(width) * src_w) // width
            idx = _WARP_IDX[key] = (rows, cols)
        out = out[idx[0]][:, idx[1]]
    if grayscale and out.ndim == 3 and out.shape[2] == 3:
        r = out[:, :, 0].astype(np.uint32)
        g = out[:, :, 1].astype(np.uint32)
        b = out[:, :, 2].astype(np.uint32)
        gray = (299 * r + 587 * g + 114 * b + 500) // 1000
        out = gray.astype(np.uint8)[:, :, None]
    if out is frame:
        out = frame.copy()
    return out
