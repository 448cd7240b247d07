"""Environment adapters following the standard RL API conventions.

``ParallelBoundEnv`` mirrors the parallel multi-agent convention (dict-keyed
observations/rewards per named seat); ``SingleBoundEnv`` mirrors the
single-agent convention with a built-in scripted opponent on the other
seat. Neither contains any game logic: every value is handed through from
the primary engine, uncopied where possible, so any divergence from the
primary is by definition a bindings bug.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from generalsim import Env, Observation, StepAfterDone, to_tensor
from generalsim.core import state_hash

from .config import BindingConfig, load_binding_config

SEATS = ("player_0", "player_1")


class ResetNeeded(StepAfterDone):
    """Conventional name for stepping a finished episode (gymnasium-style)."""


def observation_dict(obs: Observation) -> dict:
    """Primary observation fields as a flat dict of arrays and scalars."""
    own = obs.player
    opp = 1 - own
    return {
        "army": obs.visible_army,
        "owned_by_self": obs.owned_by_self,
        "owned_by_opponent": obs.owned_by_opponent,
        "neutral": obs.neutral_visible,
        "mountain": obs.visible_mountain,
        "castle": obs.visible_castle,
        "general": obs.visible_general,
        "fog": obs.fog,
        "own_land_count": obs.scoreboard.land[own],
        "opponent_land_count": obs.scoreboard.land[opp],
        "own_army_count": obs.scoreboard.army[own],
        "opponent_army_count": obs.scoreboard.army[opp],
        "tick": obs.tick,
        "priority": 1 if obs.tick % 2 == own else 0,
    }


class _Bound:
    def __init__(self, config: BindingConfig):
        self.config = config
        self.env = Env(config.env)

    def _convert(self, obs: Observation, seat: int):
        if self.config.observation_mode == "tensor":
            memory = self.env.memories[seat] if self.env.memories is not None else None
            return to_tensor(
                obs, memory,
                growth_interval_turns=self.config.env.rules.growth_interval_turns,
                truncation_ticks=self.config.env.truncation_ticks)
        return observation_dict(obs)

    def state_digest(self) -> int:
        """Hash of the live engine state (parity checks and debugging)."""
        return state_hash(self.env.state)


class ParallelBoundEnv(_Bound):
    """Two-seat parallel env: dict-keyed per-agent views of one episode."""

    possible_agents = list(SEATS)

    def __init__(self, config: BindingConfig):
        super().__init__(config)
        self.agents: list[str] = []

    def reset(self, seed: int = 0, options: Optional[dict] = None):
        observations, info = self.env.reset(seed)
        self.agents = list(SEATS)
        obs = {SEATS[p]: self._convert(observations[p], p) for p in (0, 1)}
        infos = {SEATS[p]: dict(info) for p in (0, 1)}
        return obs, infos

    def step(self, actions: dict):
        if not self.agents:
            raise ResetNeeded("episode finished; call reset() first")
        missing = [seat for seat in SEATS if seat not in actions]
        if missing:
            raise KeyError(f"missing actions for {missing}")
        result = self.env.step([actions[SEATS[0]], actions[SEATS[1]]])
        done = result.terminated or result.truncated
        obs, rewards, terminations, truncations, infos = {}, {}, {}, {}, {}
        for p, seat in enumerate(SEATS):
            obs[seat] = self._convert(result.observations[p], p)
            rewards[seat] = result.rewards[p]
            terminations[seat] = result.terminated
            truncations[seat] = result.truncated
            infos[seat] = {
                "tick": result.info["tick"],
                "state_hash": result.info["state_hash"],
                "priority_player": result.info["priority_player"],
                "action_decoded_to_pass": result.info["decoded_to_pass"][p],
            }
        if done:
            self.agents = []
        return obs, rewards, terminations, truncations, infos


class SingleBoundEnv(_Bound):
    """Single-agent view: the configured seat acts, the opponent is scripted.

    The opponent acts on its own fogged observation with an RNG stream
    derived from the reset seed, so episodes are reproducible.
    """

    def __init__(self, config: BindingConfig):
        super().__init__(config)
        self.seat = config.seat
        self._opponent_seat = 1 - config.seat
        self._opponent_obs = None
        self._opponent_rng = None
        self._done = True

    def reset(self, seed: int = 0, options: Optional[dict] = None):
        observations, info = self.env.reset(seed)
        self._opponent_rng = np.random.default_rng(
            np.random.SeedSequence([seed, self._opponent_seat]))
        self._opponent_obs = observations[self._opponent_seat]
        self._done = False
        return self._convert(observations[self.seat], self.seat), dict(info)

    def step(self, action):
        if self._done:
            raise ResetNeeded("episode finished; call reset() first")
        memory = None
        if self.env.memories is not None:
            memory = self.env.memories[self._opponent_seat]
        opponent_action = self.config.opponent.policy(
            self._opponent_obs, memory, self._opponent_rng)
        pair = [None, None]
        pair[self.seat] = action
        pair[self._opponent_seat] = opponent_action
        result = self.env.step(pair)
        self._opponent_obs = result.observations[self._opponent_seat]
        self._done = result.terminated or result.truncated
        info = {
            "tick": result.info["tick"],
            "state_hash": result.info["state_hash"],
            "priority_player": result.info["priority_player"],
            "action_decoded_to_pass": result.info["decoded_to_pass"][self.seat],
            "opponent_reward": result.rewards[self._opponent_seat],
        }
        return (
            self._convert(result.observations[self.seat], self.seat),
            result.rewards[self.seat],
            result.terminated,
            result.truncated,
            info,
        )


def make_single(config) -> SingleBoundEnv:
    """Build a single-agent adapter from a config path or inline mapping."""
    return SingleBoundEnv(load_binding_config(config))


def make_parallel(config) -> ParallelBoundEnv:
    """Build a two-seat parallel adapter from a config path or inline mapping."""
    return ParallelBoundEnv(load_binding_config(config))
