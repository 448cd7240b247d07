"""Baseline scripted agents for arena matches and benchmarks.

Both agents act purely on their fogged observation (and the RNG stream
handed to them), so matches stay deterministic under fixed seeds.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import DIRECTION_DELTAS, Observation
from .memory import MemoryState

PASS_VECTOR = np.array([1, 0, 0, 0, 0], dtype=np.int64)


@dataclass(frozen=True)
class AgentHandle:
    """A named policy: (observation, memory, rng) -> 5-element action vector."""

    identifier: str
    policy: Callable[[Observation, Optional[MemoryState], np.random.Generator], np.ndarray]
    deterministic: bool = False


def _legal_directions(obs: Observation, i: int, j: int) -> list[int]:
    """Directions a stack at (i, j) may legally move; destinations adjacent
    to an owned cell are always inside the visible ring."""
    h, w = obs.owned_by_self.shape
    mountain = obs.visible_mountain
    dirs = []
    if i > 0 and not mountain[i - 1, j]:
        dirs.append(0)
    if i < h - 1 and not mountain[i + 1, j]:
        dirs.append(1)
    if j > 0 and not mountain[i, j - 1]:
        dirs.append(2)
    if j < w - 1 and not mountain[i, j + 1]:
        dirs.append(3)
    return dirs


class RandomLegalAgent:
    """Uniform random source stack, then a uniform legal direction from it."""

    def act(self, obs: Observation, memory: Optional[MemoryState],
            rng: np.random.Generator) -> np.ndarray:
        sources = np.flatnonzero(obs.owned_by_self & (obs.visible_army >= 2))
        if sources.size == 0:
            return PASS_VECTOR
        width = obs.width
        first = int(rng.integers(sources.size))
        i, j = divmod(int(sources[first]), width)
        dirs = _legal_directions(obs, i, j)
        if not dirs:
            # Rare: the sampled stack is boxed in; scan the rest in random order.
            for idx in rng.permutation(sources.size):
                if idx == first:
                    continue
                i, j = divmod(int(sources[idx]), width)
                dirs = _legal_directions(obs, i, j)
                if dirs:
                    break
            else:
                return PASS_VECTOR
        d = dirs[int(rng.integers(len(dirs)))] if len(dirs) > 1 else dirs[0]
        return np.array([0, i, j, d, int(rng.integers(2))], dtype=np.int64)


class ExpanderAgent:
    """Greedy frontier expansion.

    Captures an adjacent non-owned cell whenever some stack can take it
    outright: enemy generals immediately, cheap land always, garrisoned
    cells only in the window before the land-bonus tick so the spent army
    converts into fresh land right before reinforcement. With nothing
    capturable it walks its largest stack toward the nearest non-owned
    cell.
    """

    def __init__(self, growth_interval_turns: int = 25,
                 cheap_threshold: int = 2, grab_window: int = 10):
        self.period = 2 * growth_interval_turns
        self.cheap_threshold = cheap_threshold
        self.grab_window = grab_window

    def act(self, obs: Observation, memory: Optional[MemoryState],
            rng: np.random.Generator) -> np.ndarray:
        army = obs.visible_army
        owned = obs.owned_by_self
        h, w = owned.shape
        capturable = ~owned & ~obs.fog & ~obs.visible_mountain
        ticks_to_bonus = self.period - (obs.tick % self.period)

        best = None  # ((priority, defenders, moved, tiebreak), (i, j, d))
        for i, j in np.argwhere(owned & (army >= 2)):
            moved = int(army[i, j]) - 1
            for d, (di, dj) in enumerate(DIRECTION_DELTAS):
                ti, tj = i + di, j + dj
                if not (0 <= ti < h and 0 <= tj < w) or not capturable[ti, tj]:
                    continue
                defenders = int(army[ti, tj])
                if moved <= defenders:
                    continue
                if obs.visible_general[ti, tj]:
                    priority = 0  # winning move, take it
                elif defenders <= self.cheap_threshold:
                    priority = 1
                elif ticks_to_bonus <= self.grab_window:
                    priority = 2
                else:
                    continue
                key = (priority, defenders, moved, rng.random())
                if best is None or key < best[0]:
                    best = (key, (int(i), int(j), d))
        if best is not None:
            i, j, d = best[1]
            return np.array([0, i, j, d, 0], dtype=np.int64)
        return self._march(obs)

    def _march(self, obs: Observation) -> np.ndarray:
        """Send the largest stack one BFS step toward the closest frontier."""
        army = np.where(obs.owned_by_self, obs.visible_army, 0)
        if army.max() < 2:
            return PASS_VECTOR
        src = np.unravel_index(int(army.argmax()), army.shape)
        h, w = army.shape
        blocked = obs.visible_mountain
        target_mask = ~obs.owned_by_self & ~blocked
        seen = {tuple(src)}
        queue = deque([(src, None)])  # (cell, first step direction)
        while queue:
            (i, j), first = queue.popleft()
            for d, (di, dj) in enumerate(DIRECTION_DELTAS):
                ni, nj = i + di, j + dj
                if not (0 <= ni < h and 0 <= nj < w) or blocked[ni, nj]:
                    continue
                step = first if first is not None else d
                if target_mask[ni, nj]:
                    return np.array([0, src[0], src[1], step, 0], dtype=np.int64)
                if (ni, nj) not in seen:
                    seen.add((ni, nj))
                    queue.append(((ni, nj), step))
        return PASS_VECTOR


def make_agent(name: str, **kwargs) -> AgentHandle:
    """Build a registered baseline agent by name."""
    try:
        factory = AGENT_REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown agent {name!r}; known: {sorted(AGENT_REGISTRY)}") from None
    return factory(**kwargs)


AGENT_REGISTRY: dict[str, Callable[..., AgentHandle]] = {
    "random": lambda **kw: AgentHandle("random", RandomLegalAgent(**kw).act),
    "expander": lambda **kw: AgentHandle("expander", ExpanderAgent(**kw).act),
}
