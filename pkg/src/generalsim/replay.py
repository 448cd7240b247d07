"""Match recording, canonical serialization, and re-simulation verification.

A replay is a line-delimited JSON file: the first line is the header, then
one record per half-turn, and a final result line. Canonical form uses
sorted keys and no insignificant whitespace, so byte equality is
meaningful; serializing the same log twice yields identical bytes.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import IO, Optional, Union

from . import core, mapgen
from .core import GridState, Move, RulesConfig
from .env import decode_action
from .rewards import PotentialInputs, ShapingConfig, shaped_reward

FORMAT_VERSION = 1


class CorruptReplay(Exception):
    """The replay file is malformed or internally inconsistent."""


@dataclass
class ReplayHeader:
    height: int
    width: int
    map_text: str
    rules: RulesConfig
    shaping: Optional[ShapingConfig]
    players: tuple[str, str]
    seed: int
    format_version: int = FORMAT_VERSION


@dataclass
class ReplayRecord:
    tick: int
    actions: tuple[tuple[int, ...], tuple[int, ...]]
    digest: Optional[int] = None  # state hash after this half-turn


@dataclass
class ReplayResult:
    winner: Optional[int]
    ticks: int
    final_hash: int
    land: tuple[int, int]
    army: tuple[int, int]


@dataclass
class ReplayLog:
    header: ReplayHeader
    records: list[ReplayRecord] = field(default_factory=list)
    result: Optional[ReplayResult] = None


@dataclass
class ReplayVerification:
    verified: bool
    final_hash: Optional[int] = None
    divergence_tick: Optional[int] = None
    reason: str = ""


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def make_header(layout: mapgen.GridLayout, rules: RulesConfig,
                shaping: Optional[ShapingConfig], players: tuple[str, str],
                seed: int) -> ReplayHeader:
    return ReplayHeader(
        height=layout.height, width=layout.width,
        map_text=mapgen.serialize_map_text(layout),
        rules=rules, shaping=shaping, players=tuple(players), seed=seed,
    )


def record_step(log: ReplayLog, tick: int, actions, digest: Optional[int] = None) -> ReplayLog:
    """Append one half-turn's action pair; ticks must arrive as 1, 2, 3, ..."""
    expected = len(log.records) + 1
    if tick != expected:
        raise ValueError(f"record tick {tick} out of order, expected {expected}")
    log.records.append(ReplayRecord(
        tick=tick,
        actions=(tuple(int(x) for x in actions[0]),
                 tuple(int(x) for x in actions[1])),
        digest=digest,
    ))
    return log


def finish(log: ReplayLog, winner: Optional[int], state: GridState) -> ReplayLog:
    board = state.scoreboard()
    log.result = ReplayResult(
        winner=winner, ticks=state.tick, final_hash=core.state_hash(state),
        land=board.land, army=board.army,
    )
    return log


def _header_to_dict(h: ReplayHeader) -> dict:
    shaping = None
    if h.shaping is not None:
        shaping = {
            "gamma": h.shaping.gamma,
            "max_ratio": h.shaping.max_ratio,
            "weights": list(h.shaping.weights),
        }
    return {
        "format_version": h.format_version,
        "height": h.height,
        "width": h.width,
        "map": h.map_text,
        "rules": {
            "growth_interval_turns": h.rules.growth_interval_turns,
            "half_turns_per_turn": h.rules.half_turns_per_turn,
            "castle_garrison_range": list(h.rules.castle_garrison_range),
        },
        "shaping": shaping,
        "players": list(h.players),
        "seed": h.seed,
    }


def _header_from_dict(d: dict) -> ReplayHeader:
    try:
        version = d["format_version"]
        if version != FORMAT_VERSION:
            raise CorruptReplay(f"unsupported format_version {version!r}")
        rules = RulesConfig(
            growth_interval_turns=d["rules"]["growth_interval_turns"],
            half_turns_per_turn=d["rules"]["half_turns_per_turn"],
            castle_garrison_range=tuple(d["rules"]["castle_garrison_range"]),
        )
        shaping = None
        if d["shaping"] is not None:
            shaping = ShapingConfig(
                gamma=d["shaping"]["gamma"],
                max_ratio=d["shaping"]["max_ratio"],
                weights=tuple(d["shaping"]["weights"]),
            )
        return ReplayHeader(
            height=d["height"], width=d["width"], map_text=d["map"],
            rules=rules, shaping=shaping,
            players=tuple(d["players"]), seed=d["seed"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptReplay(f"bad header: {exc}") from exc


def serialize(log: ReplayLog) -> bytes:
    """Canonical bytes for a finished log."""
    if log.result is None:
        raise ValueError("cannot serialize an unfinished replay")
    lines = [_canonical(_header_to_dict(log.header))]
    for rec in log.records:
        entry = {"tick": rec.tick, "actions": [list(rec.actions[0]), list(rec.actions[1])]}
        if rec.digest is not None:
            entry["digest"] = f"{rec.digest:016x}"
        lines.append(_canonical(entry))
    lines.append(_canonical({"result": {
        "winner": log.result.winner,
        "ticks": log.result.ticks,
        "final_hash": f"{log.result.final_hash:016x}",
        "land": list(log.result.land),
        "army": list(log.result.army),
    }}))
    return ("\n".join(lines) + "\n").encode("utf-8")


def save(log: ReplayLog, destination: Union[str, os.PathLike, IO[bytes]]) -> None:
    data = serialize(log)
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        with open(destination, "wb") as fh:
            fh.write(data)


def load(source: Union[str, os.PathLike, IO[bytes], bytes]) -> ReplayLog:
    """Parse and structurally check a replay; raises CorruptReplay on damage."""
    if isinstance(source, bytes):
        data = source
    elif hasattr(source, "read"):
        data = source.read()
    else:
        with open(source, "rb") as fh:
            data = fh.read()
    lines = data.decode("utf-8").splitlines()
    if not lines:
        raise CorruptReplay("empty file")

    def parse_line(line: str, what: str) -> dict:
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorruptReplay(f"malformed {what}: {exc}") from exc
        if not isinstance(obj, dict):
            raise CorruptReplay(f"malformed {what}: not an object")
        return obj

    header = _header_from_dict(parse_line(lines[0], "header"))
    if len(lines) < 2 or "result" not in parse_line(lines[-1], "trailer"):
        raise CorruptReplay("missing result line (truncated file?)")

    records = []
    for lineno, line in enumerate(lines[1:-1], start=2):
        obj = parse_line(line, f"record at line {lineno}")
        try:
            tick = obj["tick"]
            actions = obj["actions"]
            if tick != len(records) + 1:
                raise CorruptReplay(f"non-monotone tick {tick} at line {lineno}")
            if len(actions) != 2 or any(len(a) != 5 for a in actions):
                raise CorruptReplay(f"malformed action pair at line {lineno}")
            digest = int(obj["digest"], 16) if "digest" in obj else None
            records.append(ReplayRecord(
                tick=tick,
                actions=(tuple(int(x) for x in actions[0]),
                         tuple(int(x) for x in actions[1])),
                digest=digest,
            ))
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptReplay(f"bad record at line {lineno}: {exc}") from exc

    res = parse_line(lines[-1], "result")["result"]
    try:
        result = ReplayResult(
            winner=res["winner"], ticks=res["ticks"],
            final_hash=int(res["final_hash"], 16),
            land=tuple(res["land"]), army=tuple(res["army"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptReplay(f"bad result: {exc}") from exc
    return ReplayLog(header=header, records=records, result=result)


def _initial_state(header: ReplayHeader) -> GridState:
    layout = mapgen.parse_map_text(header.map_text)
    return GridState.from_layout(layout, header.rules)


def replay_verify(log: ReplayLog) -> ReplayVerification:
    """Re-simulate a replay and compare digests.

    Per-record digests are compared when present; the final hash in the
    result line is always compared. Returns the first divergence tick.
    """
    state = _initial_state(log.header)
    for rec in log.records:
        if state.winner is not None:
            return ReplayVerification(False, divergence_tick=rec.tick,
                                      reason="actions recorded after the game ended")
        moves = [_action_to_move(a, state) for a in rec.actions]
        core._resolve_half_turn(state, moves)
        if rec.digest is not None and core.state_hash(state) != rec.digest:
            return ReplayVerification(False, divergence_tick=rec.tick,
                                      reason="per-tick digest mismatch")
    final = core.state_hash(state)
    if log.result is not None and final != log.result.final_hash:
        return ReplayVerification(False, divergence_tick=state.tick,
                                  reason="final hash mismatch")
    return ReplayVerification(True, final_hash=final)


def replay_rewards(log: ReplayLog) -> list[tuple[float, float]]:
    """Recompute the per-half-turn reward stream from a replay.

    Uses the header's shaping config when present, otherwise sparse
    rewards. The last recorded half-turn of a terminal game carries the
    win/lose payoff.
    """
    state = _initial_state(log.header)
    shaping = log.header.shaping
    stream = []
    for rec in log.records:
        prev = (PotentialInputs.from_state(state, 0),
                PotentialInputs.from_state(state, 1)) if shaping else None
        moves = [_action_to_move(a, state) for a in rec.actions]
        events = core._resolve_half_turn(state, moves)
        if events.winner is not None:
            base = (1.0, -1.0) if events.winner == 0 else (-1.0, 1.0)
        else:
            base = (0.0, 0.0)
        if shaping is not None:
            nxt = (None, None) if events.winner is not None else (
                PotentialInputs.from_state(state, 0),
                PotentialInputs.from_state(state, 1),
            )
            stream.append(tuple(
                shaped_reward(prev[p], nxt[p], base[p], shaping) for p in (0, 1)
            ))
        else:
            stream.append(base)
    return stream


def _action_to_move(action, state: GridState) -> Move:
    return decode_action(action, state.height, state.width)
