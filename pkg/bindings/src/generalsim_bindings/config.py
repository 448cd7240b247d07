"""Binding configuration: a file path or inline mapping mirroring RunConfig.

The ``env`` section is exactly the primary package's RunConfig env schema
and is parsed by the primary itself; keys added here only select the
adapter shape (observation mode, controlled seat, built-in opponent).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from generalsim import EnvConfig
from generalsim.agents import AGENT_REGISTRY, AgentHandle, make_agent
from generalsim.cli import ConfigError, parse_env_config

OBSERVATION_MODES = ("dict", "tensor")


@dataclass
class BindingConfig:
    env: EnvConfig
    observation_mode: str = "dict"
    seat: int = 0
    opponent: Optional[AgentHandle] = None  # single-agent adapter only


def _parse_opponent(obj) -> AgentHandle:
    if isinstance(obj, str):
        obj = {"type": obj}
    if not isinstance(obj, dict) or "type" not in obj:
        raise ConfigError("opponent must be an agent name or {type, params} object")
    unknown = set(obj) - {"type", "params"}
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in opponent")
    if obj["type"] not in AGENT_REGISTRY:
        raise ConfigError(
            f"unknown opponent {obj['type']!r}; known: {sorted(AGENT_REGISTRY)}")
    return make_agent(obj["type"], **obj.get("params", {}))


def load_binding_config(source: Union[str, Path, dict]) -> BindingConfig:
    """Accepts a JSON file path or an inline mapping."""
    if isinstance(source, (str, Path)):
        try:
            obj = json.loads(Path(source).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    else:
        obj = dict(source)
    if not isinstance(obj, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(obj) - {"env", "observation_mode", "seat", "opponent"}
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in binding config")
    if "env" not in obj:
        raise ConfigError("config.env is required")

    mode = obj.get("observation_mode", "dict")
    if mode not in OBSERVATION_MODES:
        raise ConfigError(f"observation_mode must be one of {OBSERVATION_MODES}")
    seat = int(obj.get("seat", 0))
    if seat not in (0, 1):
        raise ConfigError("seat must be 0 or 1")
    opponent = _parse_opponent(obj.get("opponent", "random"))
    return BindingConfig(
        env=parse_env_config(obj["env"]),
        observation_mode=mode,
        seat=seat,
        opponent=opponent,
    )
