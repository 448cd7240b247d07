"""Sparse win/lose rewards and potential-based shaping.

The potential is a weighted sum of clamped log-ratios of land, army, and
castle counts between the two players. Shaping adds ``gamma * phi(s') -
phi(s)`` to the original reward, which telescopes over an episode and
therefore leaves the set of optimal policies unchanged. The potential of a
terminal state is defined to be zero so the guarantee holds episodically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .core import GridState


@dataclass(frozen=True)
class ShapingConfig:
    gamma: float = 1.0
    max_ratio: float = 10.0
    weights: tuple[float, float, float] = (0.3, 0.3, 0.4)  # land, army, castle

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")
        if self.max_ratio <= 1.0:
            raise ValueError("max_ratio must be > 1")
        if abs(sum(self.weights) - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")


@dataclass(frozen=True)
class PotentialInputs:
    """Privileged full-state counts for both sides, from the agent's seat.

    Land and army counts are at least 1 for a live player (the general is
    always owned); castle counts may be zero and are add-one smoothed
    inside the potential.
    """

    agent_land: int
    agent_army: int
    agent_castles: int
    enemy_land: int
    enemy_army: int
    enemy_castles: int

    def swapped(self) -> "PotentialInputs":
        return PotentialInputs(
            agent_land=self.enemy_land, agent_army=self.enemy_army,
            agent_castles=self.enemy_castles, enemy_land=self.agent_land,
            enemy_army=self.agent_army, enemy_castles=self.agent_castles,
        )

    @classmethod
    def from_state(cls, state: GridState, player: int) -> "PotentialInputs":
        enemy = 1 - player
        return cls(
            agent_land=state.land[player],
            agent_army=state.army_total[player],
            agent_castles=state.castle_count[player],
            enemy_land=state.land[enemy],
            enemy_army=state.army_total[enemy],
            enemy_castles=state.castle_count[enemy],
        )


def _log_ratio_feature(agent: float, enemy: float, log_max: float) -> float:
    ratio = math.log(agent / enemy)
    if ratio > log_max:
        ratio = log_max
    elif ratio < -log_max:
        ratio = -log_max
    return ratio / log_max


def potential(inputs: PotentialInputs, cfg: ShapingConfig) -> float:
    """Weighted sum of clamped log-ratio features; antisymmetric in the seats."""
    log_max = math.log(cfg.max_ratio)
    w_land, w_army, w_castle = cfg.weights
    return (
        w_land * _log_ratio_feature(inputs.agent_land, inputs.enemy_land, log_max)
        + w_army * _log_ratio_feature(inputs.agent_army, inputs.enemy_army, log_max)
        + w_castle * _log_ratio_feature(inputs.agent_castles + 1,
                                        inputs.enemy_castles + 1, log_max)
    )


def shaped_reward(prev: PotentialInputs, nxt: Optional[PotentialInputs],
                  r_original: float, cfg: ShapingConfig) -> float:
    """Shaped reward for one transition; ``nxt=None`` marks a terminal state."""
    phi_next = 0.0 if nxt is None else potential(nxt, cfg)
    return r_original + cfg.gamma * phi_next - potential(prev, cfg)
