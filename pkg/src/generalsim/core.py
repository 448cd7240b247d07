"""Authoritative rules engine for the Generals-style grid RTS.

The game runs on an H x W grid of four cell kinds (plain, mountain, castle,
general). Two players issue one move per half-turn; two half-turns make a
turn. Everything in this module is deterministic: identical inputs always
produce identical states and identical ``state_hash`` digests.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from enum import IntEnum
from typing import NamedTuple, Optional, Sequence

import numpy as np

NEUTRAL = -1


class CellKind(IntEnum):
    PLAIN = 0
    MOUNTAIN = 1
    CASTLE = 2
    GENERAL = 3


class Direction(IntEnum):
    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3


# (di, dj) per Direction, row-major grid with i growing downward.
DIRECTION_DELTAS = ((-1, 0), (1, 0), (0, -1), (0, 1))


class Split(IntEnum):
    ALL = 0
    HALF = 1


# Plain ints for the per-move hot path; enum attribute access is slow.
_MOUNTAIN = int(CellKind.MOUNTAIN)
_CASTLE = int(CellKind.CASTLE)
_GENERAL = int(CellKind.GENERAL)
_ALL = int(Split.ALL)


class MoveRejection(IntEnum):
    """Why a submitted move was converted to a pass."""

    SOURCE_OUT_OF_BOUNDS = 0
    SOURCE_NOT_OWNED = 1
    INSUFFICIENT_ARMY = 2
    DEST_OUT_OF_BOUNDS = 3
    IMPASSABLE = 4
    GAME_OVER = 5


@dataclass(frozen=True)
class Move:
    """One player's half-turn command.

    When ``is_pass`` is set the remaining fields are ignored.
    """

    is_pass: bool = False
    source: tuple[int, int] = (0, 0)
    direction: Direction = Direction.UP
    split: Split = Split.ALL


PASS_MOVE = Move(is_pass=True)


@dataclass(frozen=True)
class RulesConfig:
    growth_interval_turns: int = 25
    half_turns_per_turn: int = 2
    castle_garrison_range: tuple[int, int] = (40, 50)

    def __post_init__(self):
        if self.growth_interval_turns < 1:
            raise ValueError("growth_interval_turns must be >= 1")
        lo, hi = self.castle_garrison_range
        if lo > hi:
            raise ValueError("castle_garrison_range min must be <= max")


class Cell(NamedTuple):
    """Value view of a single grid cell, used by the movement resolver."""

    kind: int
    owner: int
    army: int


@dataclass(frozen=True)
class Scoreboard:
    """Global per-player totals, always visible to both players."""

    land: tuple[int, int]
    army: tuple[int, int]


class MovementEffects(NamedTuple):
    moved: int
    captured: bool
    captured_castle: bool
    captured_general: bool
    losses: int  # units removed from each engaged side (0 for merges)


@dataclass
class MoveOutcome:
    """What a player's submitted move ended up doing this half-turn."""

    move: Move
    executed: bool
    rejection: Optional[MoveRejection] = None
    moved: int = 0
    target: Optional[tuple[int, int]] = None
    captured: bool = False
    captured_castle: bool = False
    captured_general: bool = False


@dataclass
class HalfTurnEvents:
    tick: int  # tick counter after this half-turn resolved
    outcomes: tuple[MoveOutcome, MoveOutcome]
    production_applied: bool = False
    land_bonus_applied: bool = False
    winner: Optional[int] = None


@dataclass
class Observation:
    """Fogged per-player view plus the global scoreboard.

    A cell is visible iff the observer owns it or it lies in the Moore
    (8-cell) neighborhood of an owned cell. Every plane is zero wherever
    ``fog`` is true.
    """

    player: int
    visible_army: np.ndarray
    owned_by_self: np.ndarray
    owned_by_opponent: np.ndarray
    neutral_visible: np.ndarray
    visible_mountain: np.ndarray
    visible_castle: np.ndarray
    visible_general: np.ndarray
    fog: np.ndarray
    scoreboard: Scoreboard
    tick: int

    @property
    def height(self) -> int:
        return self.visible_army.shape[0]

    @property
    def width(self) -> int:
        return self.visible_army.shape[1]


def dilate8(mask: np.ndarray) -> np.ndarray:
    """Union of a boolean mask with its Moore (8-cell) neighborhood."""
    out = mask.copy()
    out[:-1, :] |= mask[1:, :]
    out[1:, :] |= mask[:-1, :]
    out[:, :-1] |= mask[:, 1:]
    out[:, 1:] |= mask[:, :-1]
    out[:-1, :-1] |= mask[1:, 1:]
    out[:-1, 1:] |= mask[1:, :-1]
    out[1:, :-1] |= mask[:-1, 1:]
    out[1:, 1:] |= mask[:-1, :-1]
    return out


def _moore_cover(mask: np.ndarray) -> np.ndarray:
    """Count of True cells within Chebyshev distance 1 of each cell."""
    counts = mask.astype(np.int16)
    counts[:-1, :] += mask[1:, :]
    counts[1:, :] += mask[:-1, :]
    counts[:, :-1] += mask[:, 1:]
    counts[:, 1:] += mask[:, :-1]
    counts[:-1, :-1] += mask[1:, 1:]
    counts[:-1, 1:] += mask[1:, :-1]
    counts[1:, :-1] += mask[:-1, 1:]
    counts[1:, 1:] += mask[:-1, :-1]
    return counts


class GridState:
    """Full-information game state.

    ``kind`` is immutable after construction and may be shared between
    copies; ``owner`` and ``army`` are owned by each instance. Scoreboard
    counters (land, army totals, castle counts) are maintained
    incrementally and must always match a recount from the arrays.
    """

    __slots__ = (
        "height", "width", "kind", "owner", "army", "tick", "alive",
        "winner", "config", "general_positions", "land", "army_total",
        "castle_count", "mountain_mask", "castle_mask", "general_mask",
        "production_mask", "cover_count",
    )

    def __init__(self, kind, owner, army, tick, alive, winner, config,
                 general_positions, land, army_total, castle_count,
                 static_masks=None, cover_count=None):
        self.height, self.width = kind.shape
        self.kind = kind
        self.owner = owner
        self.army = army
        self.tick = tick
        self.alive = alive
        self.winner = winner
        self.config = config
        self.general_positions = general_positions
        self.land = land
        self.army_total = army_total
        self.castle_count = castle_count
        if static_masks is None:
            self.mountain_mask = kind == _MOUNTAIN
            self.castle_mask = kind == _CASTLE
            self.general_mask = kind == _GENERAL
            self.production_mask = self.castle_mask | self.general_mask
        else:
            (self.mountain_mask, self.castle_mask, self.general_mask,
             self.production_mask) = static_masks
        if cover_count is None:
            # cover_count[p, x] = owned cells of p within Chebyshev distance 1
            # of x; visibility is cover_count > 0, kept incremental because
            # ownership changes one cell at a time.
            self.cover_count = np.stack([
                _moore_cover(owner == 0), _moore_cover(owner == 1)])
        else:
            self.cover_count = cover_count

    @classmethod
    def from_layout(cls, layout, rules: RulesConfig | None = None) -> "GridState":
        """Build the initial state for a generated or parsed map layout.

        Each general starts with exactly one unit; neutral castles hold
        their garrison; every other cell is empty.
        """
        rules = rules or RulesConfig()
        kind = np.asarray(layout.cells, dtype=np.int8).copy()
        owner = np.full(kind.shape, NEUTRAL, dtype=np.int8)
        army = np.zeros(kind.shape, dtype=np.int32)
        g0, g1 = layout.general_positions
        owner[g0] = 0
        owner[g1] = 1
        army[g0] = 1
        army[g1] = 1
        for pos, garrison in layout.castle_garrisons.items():
            army[pos] = garrison
        return cls(
            kind=kind, owner=owner, army=army, tick=0,
            alive=[True, True], winner=None, config=rules,
            general_positions=(tuple(g0), tuple(g1)),
            land=[1, 1], army_total=[1, 1], castle_count=[0, 0],
        )

    def copy(self) -> "GridState":
        return GridState(
            kind=self.kind, owner=self.owner.copy(), army=self.army.copy(),
            tick=self.tick, alive=list(self.alive), winner=self.winner,
            config=self.config, general_positions=self.general_positions,
            land=list(self.land), army_total=list(self.army_total),
            castle_count=list(self.castle_count),
            static_masks=(self.mountain_mask, self.castle_mask,
                          self.general_mask, self.production_mask),
            cover_count=self.cover_count.copy(),
        )

    def scoreboard(self) -> Scoreboard:
        return Scoreboard(
            land=(self.land[0], self.land[1]),
            army=(self.army_total[0], self.army_total[1]),
        )

    def recount_scoreboard(self) -> Scoreboard:
        """Recompute totals from the arrays (invariant check, not the fast path)."""
        land = []
        armies = []
        for p in (0, 1):
            mask = self.owner == p
            land.append(int(mask.sum()))
            armies.append(int(self.army[mask].sum()))
        return Scoreboard(land=(land[0], land[1]), army=(armies[0], armies[1]))

    def rebuild_derived(self) -> None:
        """Recompute counters and visibility cover after direct array edits.

        Only needed by code that writes ``owner``/``army`` directly (test
        fixtures, scenario setup); the engine maintains these incrementally.
        """
        board = self.recount_scoreboard()
        self.land = list(board.land)
        self.army_total = list(board.army)
        self.castle_count = [self.recount_castles(0), self.recount_castles(1)]
        self.cover_count = np.stack([
            _moore_cover(self.owner == 0), _moore_cover(self.owner == 1)])

    def recount_castles(self, player: int) -> int:
        return int(((self.owner == player) & self.castle_mask).sum())

    def cell(self, pos: tuple[int, int]) -> Cell:
        return Cell(int(self.kind[pos]), int(self.owner[pos]), int(self.army[pos]))

    def priority_player(self) -> int:
        """Who resolves first on the upcoming half-turn (alternates by tick)."""
        return self.tick % 2

    def is_terminal(self) -> bool:
        return self.winner is not None


def validate_move(state: GridState, player: int, move: Move) -> Optional[MoveRejection]:
    """Return None when the move is legal, else the rejection reason.

    A pass is always legal. A movement needs an in-bounds source owned by
    the player with at least 2 units, and an in-bounds non-mountain
    destination.
    """
    if move.is_pass:
        return None
    i, j = move.source
    if not (0 <= i < state.height and 0 <= j < state.width):
        return MoveRejection.SOURCE_OUT_OF_BOUNDS
    if state.owner[i, j] != player:
        return MoveRejection.SOURCE_NOT_OWNED
    if state.army[i, j] < 2:
        return MoveRejection.INSUFFICIENT_ARMY
    di, dj = DIRECTION_DELTAS[move.direction]
    ni, nj = i + di, j + dj
    if not (0 <= ni < state.height and 0 <= nj < state.width):
        return MoveRejection.DEST_OUT_OF_BOUNDS
    if state.kind[ni, nj] == _MOUNTAIN:
        return MoveRejection.IMPASSABLE
    return None


def resolve_movement(source: Cell, dest: Cell, split: Split | int) -> tuple[Cell, Cell, MovementEffects]:
    """Resolve one validated movement between two cells.

    All-but-one units move (or floor(half) on a split). Entering a friendly
    cell merges. Otherwise strengths subtract: a strictly larger attacking
    force captures the cell with the difference; on equal forces the
    defender (or the neutral garrison) keeps the cell at zero army.
    """
    moved = source.army - 1 if split == _ALL else source.army // 2
    new_source = Cell(source.kind, source.owner, source.army - moved)
    if dest.owner == source.owner:
        new_dest = Cell(dest.kind, dest.owner, dest.army + moved)
        return new_source, new_dest, MovementEffects(moved, False, False, False, 0)
    losses = min(moved, dest.army)
    if moved > dest.army:
        new_dest = Cell(dest.kind, source.owner, moved - dest.army)
        return new_source, new_dest, MovementEffects(
            moved, True,
            dest.kind == _CASTLE,
            dest.kind == _GENERAL,
            losses,
        )
    new_dest = Cell(dest.kind, dest.owner, dest.army - moved)
    return new_source, new_dest, MovementEffects(moved, False, False, False, losses)


def _execute_move(state: GridState, player: int, move: Move, outcome: MoveOutcome) -> None:
    """Apply a validated non-pass move to the state, updating counters."""
    i, j = move.source
    di, dj = DIRECTION_DELTAS[move.direction]
    ti, tj = i + di, j + dj
    src = state.cell((i, j))
    dst = state.cell((ti, tj))
    new_src, new_dst, fx = resolve_movement(src, dst, move.split)

    state.army[i, j] = new_src.army
    state.army[ti, tj] = new_dst.army
    outcome.moved = fx.moved
    outcome.target = (ti, tj)

    if dst.owner == player:
        return

    state.army_total[player] -= fx.losses
    if dst.owner != NEUTRAL:
        state.army_total[dst.owner] -= fx.losses
    if fx.captured:
        state.owner[ti, tj] = player
        state.land[player] += 1
        lo_i, hi_i = max(ti - 1, 0), min(ti + 2, state.height)
        lo_j, hi_j = max(tj - 1, 0), min(tj + 2, state.width)
        state.cover_count[player, lo_i:hi_i, lo_j:hi_j] += 1
        if fx.captured_castle:
            state.castle_count[player] += 1
        if dst.owner != NEUTRAL:
            state.land[dst.owner] -= 1
            state.cover_count[dst.owner, lo_i:hi_i, lo_j:hi_j] -= 1
            if fx.captured_castle:
                state.castle_count[dst.owner] -= 1
        outcome.captured = True
        outcome.captured_castle = fx.captured_castle
        outcome.captured_general = fx.captured_general


def _apply_growth_inplace(state: GridState) -> tuple[bool, bool]:
    """Apply scheduled production for the state's current tick.

    At every full-turn boundary (tick % 2 == 0) each owned general and
    castle produces one unit; at every land-bonus boundary
    (tick % (2 * growth_interval_turns) == 0) every owned cell gains one.
    """
    production = False
    land_bonus = False
    if state.tick % 2 == 0 and state.tick > 0:
        owned_production = state.production_mask & (state.owner >= 0)
        state.army[owned_production] += 1
        for p in (0, 1):
            # Generals are always owned by their player until the game ends.
            state.army_total[p] += 1 + state.castle_count[p]
        production = True
        if state.tick % (2 * state.config.growth_interval_turns) == 0:
            owned = state.owner >= 0
            state.army[owned] += 1
            for p in (0, 1):
                state.army_total[p] += state.land[p]
            land_bonus = True
    return production, land_bonus


def apply_growth(state: GridState) -> GridState:
    """Pure wrapper around the growth schedule (returns a new state)."""
    out = state.copy()
    _apply_growth_inplace(out)
    return out


def _resolve_half_turn(state: GridState, moves: Sequence[Optional[Move]]) -> HalfTurnEvents:
    """Mutating half-turn resolution; ``apply_half_turn`` is the pure wrapper.

    The player holding priority (player 0 on even ticks, player 1 on odd)
    moves first; the second move is validated against the already-updated
    state. Invalid moves become passes with a recorded reason. A general
    capture ends the game immediately: the remaining move is skipped and
    no growth is applied on that half-turn.
    """
    if state.winner is not None:
        raise ValueError("cannot resolve a half-turn on a terminal state")
    first = state.priority_player()
    order = (first, 1 - first)
    outcomes: list[Optional[MoveOutcome]] = [None, None]
    winner = None
    for p in order:
        move = moves[p] if moves[p] is not None else PASS_MOVE
        if winner is not None:
            outcomes[p] = MoveOutcome(move=move, executed=False,
                                      rejection=MoveRejection.GAME_OVER)
            continue
        rejection = validate_move(state, p, move)
        if rejection is not None:
            outcomes[p] = MoveOutcome(move=move, executed=False, rejection=rejection)
            continue
        outcome = MoveOutcome(move=move, executed=True)
        if not move.is_pass:
            _execute_move(state, p, move, outcome)
            if outcome.captured_general:
                winner = p
                state.alive[1 - p] = False
        outcomes[p] = outcome

    state.tick += 1
    production = land_bonus = False
    if winner is None:
        production, land_bonus = _apply_growth_inplace(state)
    else:
        state.winner = winner
    return HalfTurnEvents(
        tick=state.tick,
        outcomes=(outcomes[0], outcomes[1]),
        production_applied=production,
        land_bonus_applied=land_bonus,
        winner=winner,
    )


def apply_half_turn(state: GridState, moves: Sequence[Optional[Move]]) -> tuple[GridState, HalfTurnEvents]:
    """Resolve both players' moves for one half-turn.

    Pure: the input state is left untouched and a new state is returned.
    Invalid moves never abort; they are downgraded to passes and the
    reason is recorded in the events.
    """
    out = state.copy()
    events = _resolve_half_turn(out, moves)
    return out, events


def check_terminal(state: GridState) -> Optional[int]:
    """Return the winner, derived from general-cell ownership, or None."""
    g0, g1 = state.general_positions
    if state.owner[g1] == 0:
        return 0
    if state.owner[g0] == 1:
        return 1
    return None


def observe(state: GridState, player: int) -> Observation:
    """Extract the fogged view for one player.

    Visibility is the player's owned cells plus their Moore neighborhood;
    the scoreboard is always filled in for both players.
    """
    owned = state.owner == player
    visible = state.cover_count[player] > 0
    opponent_owned = state.owner == (1 - player)
    opponent_owned &= visible
    neutral = state.owner == NEUTRAL
    neutral &= visible
    return Observation(
        player=player,
        visible_army=np.where(visible, state.army, 0),
        owned_by_self=owned,
        owned_by_opponent=opponent_owned,
        neutral_visible=neutral,
        visible_mountain=state.mountain_mask & visible,
        visible_castle=state.castle_mask & visible,
        visible_general=state.general_mask & visible,
        fog=~visible,
        scoreboard=state.scoreboard(),
        tick=state.tick,
    )


def state_hash(state: GridState) -> int:
    """Stable 64-bit digest of the full state.

    Byte layout is fixed little-endian, so digests agree across platforms
    and processes for identical states.
    """
    h = hashlib.blake2b(
        struct.pack("<IIq", state.height, state.width, state.tick)
        + state.kind.tobytes()
        + state.owner.tobytes()
        + state.army.astype("<i4", copy=False).tobytes(),
        digest_size=8,
    )
    return int.from_bytes(h.digest(), "little")
