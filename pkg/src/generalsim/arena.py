"""Match execution and evaluation statistics.

Series are mirrored (seats swap on the same map every second game), draws
count as half-wins, win-rates get Wilson score intervals, and ratings come
from an anchored logistic (Elo) fit over the pairwise win-rate matrix.
Also hosts the FIFO opponent-pool gating rule used for self-play candidate
promotion.
"""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from . import core, replay as replay_mod
from .agents import AgentHandle
from .core import Scoreboard
from .env import Env, EnvConfig
from .replay import ReplayLog


class DegenerateRate(Exception):
    """A win-rate of exactly 0 or 1 cannot be mapped to a rating delta."""


class DisconnectedGraph(Exception):
    """The comparison graph does not connect every agent to the anchor."""


@dataclass
class MatchResult:
    winner: Optional[str]  # agent identifier, or None for a truncation draw
    ticks: int
    scoreboard: Scoreboard
    agents: tuple[str, str]  # seat 0, seat 1
    seed: int
    replay: Optional[ReplayLog] = None


@dataclass
class SeriesResult:
    agent_a: str
    agent_b: str
    games: int
    wins_a: float  # draws count 0.5
    draws: int
    p_hat: float
    wilson_low: float
    wilson_high: float
    results: list[MatchResult] = field(default_factory=list)


@dataclass(frozen=True)
class PoolConfig:
    size: int = 3
    gate_threshold: float = 0.45

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("pool size must be >= 1")
        if not 0.0 < self.gate_threshold < 1.0:
            raise ValueError("gate threshold must be in (0, 1)")


def run_match(a: AgentHandle, b: AgentHandle, env_config: EnvConfig, seed: int,
              *, record: bool = False, record_digests: bool = False) -> MatchResult:
    """Play one match, seat 0 = a, seat 1 = b; deterministic in the seed."""
    env = Env(env_config)
    reset_ss, ss_a, ss_b = np.random.SeedSequence(seed).spawn(3)
    reset_seed = int(reset_ss.generate_state(1)[0])
    rngs = (np.random.default_rng(ss_a), np.random.default_rng(ss_b))
    observations, info = env.reset(reset_seed)

    log = None
    if record:
        layout = _layout_of(env)
        log = ReplayLog(header=replay_mod.make_header(
            layout, env_config.rules, env_config.shaping,
            (a.identifier, b.identifier), seed))

    handles = (a, b)
    winner_seat = None
    while True:
        actions = [
            handles[p].policy(
                observations[p],
                env.memories[p] if env.memories is not None else None,
                rngs[p],
            )
            for p in (0, 1)
        ]
        result = env.step(actions)
        observations = result.observations
        if log is not None:
            replay_mod.record_step(
                log, result.info["tick"], actions,
                digest=result.info["state_hash"] if record_digests else None)
        if result.terminated:
            winner_seat = result.info["events"].winner
            break
        if result.truncated:
            break

    if log is not None:
        replay_mod.finish(log, winner_seat, env.state)
    return MatchResult(
        winner=None if winner_seat is None else handles[winner_seat].identifier,
        ticks=env.state.tick,
        scoreboard=env.state.scoreboard(),
        agents=(a.identifier, b.identifier),
        seed=seed,
        replay=log,
    )


def _layout_of(env: Env) -> "mapgen.GridLayout":
    from . import mapgen

    state = env.state
    castles = {
        (int(i), int(j)): int(state.army[i, j])
        for i, j in np.argwhere(state.kind == core.CellKind.CASTLE)
        if state.owner[i, j] == core.NEUTRAL
    }
    return mapgen.GridLayout(
        cells=state.kind.copy(),
        general_positions=state.general_positions,
        castle_garrisons=castles,
    )


def run_series(a: AgentHandle, b: AgentHandle, n_games: int,
               env_config: EnvConfig, *, base_seed: int = 0,
               executor: Optional[Executor] = None,
               record: bool = False) -> SeriesResult:
    """Play a mirrored series and aggregate a's win-rate with a Wilson CI.

    Games are paired: both games of a pair share a map/match seed and swap
    seats, so neither agent benefits from a side assignment. Draws count
    as half a win. Matches are independent; an executor may run them
    concurrently, and aggregation is keyed by game index either way.
    """
    if n_games < 1:
        raise ValueError("n_games must be >= 1")
    jobs = []
    for game in range(n_games):
        pair_seed = int(np.random.SeedSequence([base_seed, game // 2]).generate_state(1)[0])
        swapped = game % 2 == 1
        jobs.append((game, pair_seed, swapped))

    def play(job):
        game, seed, swapped = job
        first, second = (b, a) if swapped else (a, b)
        return run_match(first, second, env_config, seed, record=record)

    if executor is None:
        results = [play(job) for job in jobs]
    else:
        results = list(executor.map(play, jobs))

    wins_a = 0.0
    draws = 0
    for res in results:
        if res.winner is None:
            wins_a += 0.5
            draws += 1
        elif res.winner == a.identifier:
            wins_a += 1.0
    p_hat = wins_a / n_games
    low, high = wilson_interval(wins_a, n_games)
    return SeriesResult(
        agent_a=a.identifier, agent_b=b.identifier, games=n_games,
        wins_a=wins_a, draws=draws, p_hat=p_hat,
        wilson_low=low, wilson_high=high, results=results,
    )


def wilson_interval(wins: float, n: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion.

    ``wins`` may be fractional when draws are counted as half-wins.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= wins <= n:
        raise ValueError("wins must lie in [0, n]")
    p = wins / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2.0 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def elo_from_winrate(p: float) -> float:
    """Rating gap implied by a head-to-head win-rate (logistic inverse)."""
    if not 0.0 < p < 1.0:
        raise DegenerateRate(f"win-rate {p} needs smoothing before rating")
    return 400.0 * math.log10(p / (1.0 - p))


def logistic_expectation(delta: float) -> float:
    """Expected score of a player rated ``delta`` points above the opponent."""
    return 1.0 / (1.0 + 10.0 ** (-delta / 400.0))


class WinRateMatrix:
    """Pairwise win/draw/game counts over a fixed agent list.

    wins[i][j] + wins[j][i] + draws[i][j] == games[i][j] == games[j][i];
    the win-rate used downstream counts a draw as half a win.
    """

    def __init__(self, agents: Sequence[str]):
        if len(set(agents)) != len(agents):
            raise ValueError("duplicate agent identifiers")
        self.agents = list(agents)
        n = len(agents)
        self.wins = np.zeros((n, n), dtype=np.int64)  # row beat column
        self.draws = np.zeros((n, n), dtype=np.int64)
        self.games = np.zeros((n, n), dtype=np.int64)

    def index(self, agent: str) -> int:
        return self.agents.index(agent)

    def add_series(self, result: SeriesResult) -> None:
        i, j = self.index(result.agent_a), self.index(result.agent_b)
        full_wins = int(result.wins_a - 0.5 * result.draws)
        self.wins[i, j] += full_wins
        self.wins[j, i] += result.games - result.draws - full_wins
        self.draws[i, j] += result.draws
        self.draws[j, i] += result.draws
        self.games[i, j] += result.games
        self.games[j, i] += result.games

    def rate(self, i: int, j: int) -> float:
        """Row agent's win-rate vs the column agent, draws as half-wins."""
        if self.games[i, j] == 0:
            raise ValueError(f"no games between {self.agents[i]} and {self.agents[j]}")
        return float((self.wins[i, j] + 0.5 * self.draws[i, j]) / self.games[i, j])


def fit_elo(matrix: WinRateMatrix, anchor: str,
            anchor_rating: float = 1500.0) -> dict[str, float]:
    """Least-squares logistic rating fit with one agent's rating pinned.

    Observed pairwise rates must already be smoothed away from 0 and 1.
    The comparison graph must be connected or ratings would be arbitrary.
    """
    n = len(matrix.agents)
    anchor_idx = matrix.index(anchor)
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)
             if matrix.games[i, j] > 0]

    adjacency = {i: set() for i in range(n)}
    for i, j in edges:
        adjacency[i].add(j)
        adjacency[j].add(i)
    seen = {anchor_idx}
    frontier = deque([anchor_idx])
    while frontier:
        cur = frontier.popleft()
        for nxt in adjacency[cur]:
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    if len(seen) != n:
        missing = [matrix.agents[i] for i in range(n) if i not in seen]
        raise DisconnectedGraph(f"no path from anchor to {missing}")

    rates = {}
    for i, j in edges:
        p = matrix.rate(i, j)
        if not 0.0 < p < 1.0:
            raise DegenerateRate(
                f"rate {p} between {matrix.agents[i]} and {matrix.agents[j]}")
        rates[(i, j)] = p

    if n == 1:
        return {anchor: anchor_rating}

    free = [i for i in range(n) if i != anchor_idx]
    position = {idx: k for k, idx in enumerate(free)}

    def rating_of(params, idx):
        return anchor_rating if idx == anchor_idx else params[position[idx]]

    def residuals(params):
        return np.array([
            rates[(i, j)] - logistic_expectation(rating_of(params, i) - rating_of(params, j))
            for i, j in edges
        ])

    # Log-odds start point: deltas relative to the anchor where measured.
    x0 = np.full(len(free), anchor_rating)
    for i, j in edges:
        delta = elo_from_winrate(rates[(i, j)])
        if i == anchor_idx:
            x0[position[j]] = anchor_rating - delta
        elif j == anchor_idx:
            x0[position[i]] = anchor_rating + delta
    fit = least_squares(residuals, x0, method="lm")
    return {
        agent: anchor_rating if idx == anchor_idx else float(fit.x[position[idx]])
        for idx, agent in enumerate(matrix.agents)
    }


def pool_update(pool: Sequence[str], candidate: str, win_rate: float,
                config: PoolConfig = PoolConfig()) -> list[str]:
    """FIFO opponent-pool gate: promote the candidate when it clears the bar.

    A candidate reaching the gate threshold against the current pool
    replaces the oldest member; otherwise the pool is returned unchanged.
    Pool size is invariant.
    """
    pool = list(pool)
    if len(pool) != config.size:
        raise ValueError(f"pool size {len(pool)} != configured {config.size}")
    if win_rate >= config.gate_threshold:
        return pool[1:] + [candidate]
    return pool
