"""Persistent per-player knowledge accumulated across fogged observations.

Four feature groups: sticky structure reveals (castle/general/mountain),
the explored mask, the cells the opponent is known to have seen, and ring
buffers of the last seven moves per side. Updates are a pure fold over the
observation stream; replaying the same observations rebuilds the same
memory.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import DIRECTION_DELTAS, Direction, Move, Observation, Split, dilate8

MOVE_HISTORY = 7

REVEALED_NONE = 0
REVEALED_CASTLE = 1
REVEALED_GENERAL = 2
REVEALED_MOUNTAIN = 3

# 5 sticky planes + 7 own-move planes + 7 opponent-move planes
PLANES_PER_MEMORY = 5 + 2 * MOVE_HISTORY


@dataclass
class MemoryState:
    player: int
    revealed: np.ndarray          # int8, REVEALED_* codes, never reverts
    explored: np.ndarray          # bool, monotone
    opponent_seen: np.ndarray     # bool, monotone
    own_moves: deque = field(default_factory=lambda: deque(maxlen=MOVE_HISTORY))
    opponent_moves: deque = field(default_factory=lambda: deque(maxlen=MOVE_HISTORY))
    # fold state for opponent-move inference between consecutive observations
    _prev_visible: Optional[np.ndarray] = None
    _prev_army: Optional[np.ndarray] = None
    _prev_opp_owned: Optional[np.ndarray] = None

    @classmethod
    def fresh(cls, height: int, width: int, player: int) -> "MemoryState":
        return cls(
            player=player,
            revealed=np.zeros((height, width), dtype=np.int8),
            explored=np.zeros((height, width), dtype=bool),
            opponent_seen=np.zeros((height, width), dtype=bool),
        )


def _infer_opponent_move(mem: MemoryState, visible: np.ndarray,
                         army: np.ndarray, opp_owned: np.ndarray) -> Optional[Move]:
    """Reconstruct an opponent move from two consecutive observations.

    A move is recorded only when an army decrease at a visible opponent
    cell sits next to a visible army increase or a capture by the
    opponent; anything that happened inside the fog stays unknown. The
    split flag is unknowable from observations and defaults to ALL.
    """
    both = mem._prev_visible & visible
    decreased = both & mem._prev_opp_owned & (army < mem._prev_army)
    if not decreased.any():
        return None
    gained = both & opp_owned & ((army > mem._prev_army) | ~mem._prev_opp_owned)
    h, w = visible.shape
    for i, j in np.argwhere(decreased):
        for d, (di, dj) in enumerate(DIRECTION_DELTAS):
            ni, nj = i + di, j + dj
            if 0 <= ni < h and 0 <= nj < w and gained[ni, nj]:
                return Move(source=(int(i), int(j)), direction=Direction(d),
                            split=Split.ALL)
    return None


def memory_update(mem: MemoryState, obs: Observation,
                  own_move: Optional[Move] = None) -> MemoryState:
    """Fold one observation (and the move just taken) into the memory.

    Mutates and returns ``mem``. Structure reveals and the explored /
    opponent-seen masks only ever grow.
    """
    visible = ~obs.fog
    mem.revealed[obs.visible_castle] = REVEALED_CASTLE
    mem.revealed[obs.visible_general] = REVEALED_GENERAL
    mem.revealed[obs.visible_mountain] = REVEALED_MOUNTAIN
    mem.explored |= visible
    mem.opponent_seen |= dilate8(obs.owned_by_opponent)

    if mem._prev_visible is not None:
        inferred = _infer_opponent_move(mem, visible, obs.visible_army,
                                        obs.owned_by_opponent)
        if inferred is not None:
            mem.opponent_moves.append(inferred)
    if own_move is not None:
        mem.own_moves.append(own_move)

    mem._prev_visible = visible
    mem._prev_army = obs.visible_army.copy()
    mem._prev_opp_owned = obs.owned_by_opponent.copy()
    return mem


def _move_plane(move: Optional[Move], height: int, width: int) -> np.ndarray:
    plane = np.zeros((height, width), dtype=np.float32)
    if move is not None and not move.is_pass:
        i, j = move.source
        if 0 <= i < height and 0 <= j < width:
            plane[i, j] = float(move.direction) + 1.0
    return plane


def memory_planes(mem: MemoryState) -> np.ndarray:
    """Encode the memory as a (19, H, W) float stack.

    Layout: revealed-castle, revealed-general, revealed-mountain, explored,
    opponent-seen, then 7 own-move planes newest first, then 7 opponent-move
    planes newest first. Each move plane is a one-hot at the source cell
    holding direction + 1; passes and empty slots are all-zero planes.
    """
    h, w = mem.explored.shape
    planes = [
        (mem.revealed == REVEALED_CASTLE).astype(np.float32),
        (mem.revealed == REVEALED_GENERAL).astype(np.float32),
        (mem.revealed == REVEALED_MOUNTAIN).astype(np.float32),
        mem.explored.astype(np.float32),
        mem.opponent_seen.astype(np.float32),
    ]
    for history in (mem.own_moves, mem.opponent_moves):
        recent = list(history)[::-1]
        for slot in range(MOVE_HISTORY):
            move = recent[slot] if slot < len(recent) else None
            planes.append(_move_plane(move, h, w))
    return np.stack(planes)
