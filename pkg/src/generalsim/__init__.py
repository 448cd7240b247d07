"""Deterministic Generals-style RTS engine, environment, and arena."""

from .core import (
    Cell,
    CellKind,
    Direction,
    GridState,
    HalfTurnEvents,
    Move,
    MoveRejection,
    Observation,
    PASS_MOVE,
    RulesConfig,
    Scoreboard,
    Split,
    apply_growth,
    apply_half_turn,
    check_terminal,
    observe,
    resolve_movement,
    state_hash,
    validate_move,
)
from .mapgen import (
    GenerationExhausted,
    GridLayout,
    MapSpec,
    ParseError,
    bfs_distance,
    generate,
    parse_map_text,
    serialize_map_text,
    validate,
)
from .env import (
    Env,
    EnvConfig,
    StepAfterDone,
    StepResult,
    action_to_index,
    decode_action,
    encode_action,
    head_index,
    index_to_action,
    step_batch,
    to_tensor,
)
from .rewards import PotentialInputs, ShapingConfig, potential, shaped_reward
from .memory import MemoryState, memory_planes, memory_update
from .replay import (
    CorruptReplay,
    ReplayHeader,
    ReplayLog,
    ReplayRecord,
    load,
    record_step,
    replay_verify,
    save,
)
from .agents import AgentHandle, ExpanderAgent, RandomLegalAgent, make_agent
from .arena import (
    DegenerateRate,
    DisconnectedGraph,
    MatchResult,
    PoolConfig,
    SeriesResult,
    WinRateMatrix,
    elo_from_winrate,
    fit_elo,
    pool_update,
    run_match,
    run_series,
    wilson_interval,
)

__version__ = "0.1.0"
