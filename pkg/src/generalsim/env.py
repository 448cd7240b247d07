"""Two-player environment wrapper over the core engine.

Handles the reset/step lifecycle, the 5-element action vector encoding, the
flat H*W*9 policy-head index layout, dict-to-tensor observation conversion,
episode truncation, and batched stepping of independent environments.
"""

from __future__ import annotations

import logging
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import core, mapgen, memory as memory_mod, rewards as rewards_mod
from .core import Direction, GridState, Move, Observation, RulesConfig, Split
from .mapgen import GridLayout, MapSpec
from .memory import MemoryState
from .rewards import PotentialInputs, ShapingConfig

logger = logging.getLogger(__name__)

HEAD_ACTIONS = 9  # per-cell: pass + 4 directions x {all, half}

# Frozen tensor channel order. Board planes come first, then scalar planes
# broadcast across the grid.
TENSOR_CHANNELS = (
    "army_log",          # log1p(visible army)
    "owned_by_self",
    "owned_by_opponent",
    "neutral_visible",
    "visible_mountain",
    "visible_castle",
    "visible_general",
    "fog",
    "own_land",          # / (H * W)
    "opp_land",          # / (H * W)
    "own_army",          # log1p(total) / ARMY_LOG_NORM
    "opp_army",          # log1p(total) / ARMY_LOG_NORM
    "ticks_to_land_bonus",  # remaining half-turns / (2 * growth interval)
    "priority_bit",      # 1 when the observer resolves first this half-turn
    "tick",              # / truncation_ticks
)
ARMY_LOG_NORM = 10.0


class StepAfterDone(Exception):
    """step() was called on an episode that already terminated or truncated."""


@dataclass(frozen=True)
class EnvConfig:
    """Environment construction parameters.

    Exactly one map source must be set: a MapSpec (procedural; uses
    ``map_seed`` when given, otherwise the reset seed), an explicit
    GridLayout, or map text.
    """

    map_spec: Optional[MapSpec] = None
    map_seed: Optional[int] = None
    layout: Optional[GridLayout] = None
    map_text: Optional[str] = None
    rules: RulesConfig = field(default_factory=RulesConfig)
    truncation_ticks: int = 2000
    shaping: Optional[ShapingConfig] = None  # None selects sparse rewards
    include_memory_planes: bool = False
    tensor_observations: bool = False

    def __post_init__(self):
        sources = sum(x is not None for x in (self.map_spec, self.layout, self.map_text))
        if sources != 1:
            raise ValueError("exactly one of map_spec, layout, map_text must be set")
        if self.truncation_ticks < 1:
            raise ValueError("truncation_ticks must be >= 1")


@dataclass
class StepResult:
    observations: tuple[Observation, Observation]
    rewards: tuple[float, float]
    terminated: bool
    truncated: bool
    info: dict
    tensors: Optional[tuple[np.ndarray, np.ndarray]] = None


def encode_action(move: Move) -> np.ndarray:
    """Move -> [pass, i, j, direction, split] vector."""
    if move.is_pass:
        return np.array([1, 0, 0, 0, 0], dtype=np.int64)
    i, j = move.source
    return np.array([0, i, j, int(move.direction), int(move.split)], dtype=np.int64)


_DIRECTIONS = tuple(Direction)
_SPLITS = tuple(Split)


def decode_action(vector: Sequence[int], height: int, width: int) -> Move:
    """[pass, i, j, direction, split] -> Move; out-of-range vectors become a pass."""
    p, i, j, d, s = (int(x) for x in vector[:5])
    if p != 0:
        return core.PASS_MOVE
    if not (0 <= i < height and 0 <= j < width and 0 <= d < 4 and 0 <= s < 2):
        logger.debug("out-of-range action %s decoded to pass", list(vector))
        return core.PASS_MOVE
    return Move(is_pass=False, source=(i, j), direction=_DIRECTIONS[d], split=_SPLITS[s])


def head_index(i: int, j: int, k: int, height: int, width: int) -> int:
    """Flat index of head entry k at cell (i, j) in the H*W*9 policy layout.

    k = 0 is the pass entry; k = 1..8 encode direction (k-1)//2 and split
    (k-1)%2. The canonical pass index is 0, i.e. k=0 at cell (0, 0).
    """
    if not (0 <= i < height and 0 <= j < width and 0 <= k < HEAD_ACTIONS):
        raise ValueError(f"head entry ({i}, {j}, {k}) out of range")
    return (i * width + j) * HEAD_ACTIONS + k


def index_to_action(flat: int, height: int, width: int) -> np.ndarray:
    """Inverse of the head layout: flat index -> action vector."""
    if not 0 <= flat < height * width * HEAD_ACTIONS:
        raise ValueError(f"flat index {flat} out of range")
    cell, k = divmod(flat, HEAD_ACTIONS)
    i, j = divmod(cell, width)
    if k == 0:
        return np.array([1, 0, 0, 0, 0], dtype=np.int64)
    return np.array([0, i, j, (k - 1) // 2, (k - 1) % 2], dtype=np.int64)


def action_to_index(vector: Sequence[int], height: int, width: int) -> int:
    """Action vector -> canonical flat head index (every pass maps to 0)."""
    p, i, j, d, s = (int(x) for x in vector[:5])
    if p != 0:
        return 0
    return head_index(i, j, 1 + 2 * d + s, height, width)


def to_tensor(obs: Observation, memory: Optional[MemoryState] = None, *,
              growth_interval_turns: int = 25,
              truncation_ticks: int = 2000) -> np.ndarray:
    """Stack an observation (and optional memory) into a C x H x W tensor.

    Channel order and normalizers follow TENSOR_CHANNELS; memory planes,
    when given, are appended after the base 15 channels.
    """
    h, w = obs.visible_army.shape
    own = obs.player
    opp = 1 - own
    n_cells = float(h * w)
    period = 2 * growth_interval_turns
    remaining = period - (obs.tick % period)
    planes = np.empty((len(TENSOR_CHANNELS), h, w), dtype=np.float32)
    planes[0] = np.log1p(obs.visible_army)
    planes[1] = obs.owned_by_self
    planes[2] = obs.owned_by_opponent
    planes[3] = obs.neutral_visible
    planes[4] = obs.visible_mountain
    planes[5] = obs.visible_castle
    planes[6] = obs.visible_general
    planes[7] = obs.fog
    planes[8] = obs.scoreboard.land[own] / n_cells
    planes[9] = obs.scoreboard.land[opp] / n_cells
    planes[10] = np.log1p(obs.scoreboard.army[own]) / ARMY_LOG_NORM
    planes[11] = np.log1p(obs.scoreboard.army[opp]) / ARMY_LOG_NORM
    planes[12] = remaining / period
    planes[13] = 1.0 if obs.tick % 2 == own else 0.0
    planes[14] = obs.tick / truncation_ticks
    if memory is not None:
        planes = np.concatenate([planes, memory_mod.memory_planes(memory)])
    return planes


def _build_layout(config: EnvConfig, seed: int) -> GridLayout:
    if config.layout is not None:
        return config.layout
    if config.map_text is not None:
        return mapgen.parse_map_text(config.map_text)
    map_seed = config.map_seed if config.map_seed is not None else seed
    return mapgen.generate(config.map_spec, map_seed)


class Env:
    """One two-player episode at a time over a fixed configuration.

    Call :meth:`reset` before stepping. All methods are deterministic in
    (config, seed, actions); each instance must be driven by one actor.
    """

    def __init__(self, config: EnvConfig):
        self.config = config
        self.state: Optional[GridState] = None
        self.memories: Optional[tuple[MemoryState, MemoryState]] = None
        self._done = True

    @property
    def done(self) -> bool:
        return self._done

    def reset(self, seed: int = 0) -> tuple[tuple[Observation, Observation], dict]:
        layout = _build_layout(self.config, seed)
        self.state = GridState.from_layout(layout, self.config.rules)
        self._done = False
        observations = (core.observe(self.state, 0), core.observe(self.state, 1))
        if self.config.include_memory_planes:
            self.memories = (
                MemoryState.fresh(self.state.height, self.state.width, 0),
                MemoryState.fresh(self.state.height, self.state.width, 1),
            )
            for p in (0, 1):
                memory_mod.memory_update(self.memories[p], observations[p])
        info = {
            "tick": self.state.tick,
            "state_hash": core.state_hash(self.state),
            "priority_player": self.state.priority_player(),
        }
        return observations, info

    def observation_tensors(self, observations) -> tuple[np.ndarray, np.ndarray]:
        return tuple(
            to_tensor(
                observations[p],
                self.memories[p] if self.memories is not None else None,
                growth_interval_turns=self.config.rules.growth_interval_turns,
                truncation_ticks=self.config.truncation_ticks,
            )
            for p in (0, 1)
        )

    def step(self, actions: Sequence[Sequence[int]]) -> StepResult:
        """Advance one half-turn from a pair of raw action vectors."""
        if self.state is None or self._done:
            raise StepAfterDone("episode is finished; call reset() first")
        state = self.state
        moves = []
        decoded_to_pass = [False, False]
        for p in (0, 1):
            move = decode_action(actions[p], state.height, state.width)
            if move.is_pass and int(actions[p][0]) == 0:
                decoded_to_pass[p] = True
            moves.append(move)

        shaping = self.config.shaping
        if shaping is not None:
            prev_inputs = (PotentialInputs.from_state(state, 0),
                           PotentialInputs.from_state(state, 1))

        events = core._resolve_half_turn(state, moves)
        terminated = events.winner is not None
        truncated = not terminated and state.tick >= self.config.truncation_ticks

        if terminated:
            base = (1.0, -1.0) if events.winner == 0 else (-1.0, 1.0)
        else:
            base = (0.0, 0.0)
        if shaping is not None:
            next_inputs = (
                None if terminated else PotentialInputs.from_state(state, 0),
                None if terminated else PotentialInputs.from_state(state, 1),
            )
            step_rewards = tuple(
                rewards_mod.shaped_reward(prev_inputs[p], next_inputs[p], base[p], shaping)
                for p in (0, 1)
            )
        else:
            step_rewards = base

        observations = (core.observe(state, 0), core.observe(state, 1))
        if self.memories is not None:
            for p in (0, 1):
                executed = events.outcomes[p].move if events.outcomes[p].executed \
                    else core.PASS_MOVE
                memory_mod.memory_update(self.memories[p], observations[p], executed)

        self._done = terminated or truncated
        info = {
            "tick": state.tick,
            "state_hash": core.state_hash(state),
            "events": events,
            "priority_player": state.priority_player(),
            "decoded_to_pass": tuple(decoded_to_pass),
        }
        tensors = self.observation_tensors(observations) \
            if self.config.tensor_observations else None
        return StepResult(
            observations=observations,
            rewards=step_rewards,
            terminated=terminated,
            truncated=truncated,
            info=info,
            tensors=tensors,
        )


def step_batch(envs: Sequence[Env], actions: Sequence[Sequence[Sequence[int]]],
               executor: Optional[Executor] = None) -> list:
    """Step a batch of independent environments.

    Results are identical to stepping each env sequentially (the envs share
    no state). A failing env contributes its exception in place of a
    StepResult instead of poisoning the rest of the batch.
    """
    if len(envs) != len(actions):
        raise ValueError("envs and actions length mismatch")

    def one(pair):
        env, acts = pair
        try:
            return env.step(acts)
        except Exception as exc:  # noqa: BLE001 - isolation is the contract
            return exc

    if executor is None:
        return [one(pair) for pair in zip(envs, actions)]
    return list(executor.map(one, list(zip(envs, actions))))
