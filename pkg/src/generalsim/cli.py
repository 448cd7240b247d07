"""Command-line harness: map generation, matches, benchmarks, replays.

Exit codes: 0 success, 1 domain failure (divergent replay, exhausted
generation, corrupt file), 2 usage or config error. All file outputs are
canonical (sorted keys, fixed separators) so reruns with the same seeds
are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import arena, core, mapgen, replay as replay_mod
from .agents import AGENT_REGISTRY, AgentHandle, RandomLegalAgent, make_agent
from .core import CellKind, RulesConfig
from .env import Env, EnvConfig, step_batch
from .mapgen import GenerationExhausted, MapSpec, ParseError
from .rewards import ShapingConfig

REPORT_VERSION = 1


class ConfigError(Exception):
    """Run configuration file failed schema validation."""


@dataclass
class RunConfig:
    env: EnvConfig
    agents: list[AgentHandle]
    games: int = 100
    record_replays: bool = False
    record_digests: bool = False
    elo_anchor: Optional[str] = None
    elo_anchor_rating: float = 1500.0


def _check_keys(obj: dict, allowed: set[str], context: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {context}")


def _pair(value, context: str) -> tuple[int, int]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{context} must be a [min, max] pair")
    return int(value[0]), int(value[1])


def parse_map_spec(obj: dict, context: str = "map spec") -> MapSpec:
    _check_keys(obj, {
        "height", "width", "mountain_density", "mountain_density_tolerance",
        "castle_count_range", "castle_garrison_range",
        "min_general_bfs_distance", "castle_within_radius", "max_attempts",
    }, context)
    kwargs = dict(obj)
    for key in ("castle_count_range", "castle_garrison_range"):
        if key in kwargs:
            kwargs[key] = _pair(kwargs[key], f"{context}.{key}")
    try:
        return MapSpec(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {context}: {exc}") from exc


def _parse_rules(obj: dict) -> RulesConfig:
    _check_keys(obj, {"growth_interval_turns", "half_turns_per_turn",
                      "castle_garrison_range"}, "rules")
    kwargs = dict(obj)
    if "castle_garrison_range" in kwargs:
        kwargs["castle_garrison_range"] = _pair(kwargs["castle_garrison_range"],
                                                "rules.castle_garrison_range")
    try:
        return RulesConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad rules: {exc}") from exc


def _parse_shaping(obj) -> Optional[ShapingConfig]:
    if obj == "sparse" or obj is None:
        return None
    if not isinstance(obj, dict):
        raise ConfigError("reward must be \"sparse\" or a shaping object")
    _check_keys(obj, {"gamma", "max_ratio", "weights"}, "reward")
    kwargs = dict(obj)
    if "weights" in kwargs:
        if len(kwargs["weights"]) != 3:
            raise ConfigError("reward.weights must have 3 entries")
        kwargs["weights"] = tuple(float(w) for w in kwargs["weights"])
    try:
        return ShapingConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad reward config: {exc}") from exc


def parse_env_config(obj: dict, map_override: Optional[str] = None) -> EnvConfig:
    _check_keys(obj, {"map", "rules", "truncation_ticks", "reward",
                      "include_memory_planes"}, "env")
    map_obj = obj.get("map")
    map_kwargs: dict = {}
    if map_override is not None:
        map_kwargs["map_text"] = Path(map_override).read_text()
    elif map_obj is None:
        raise ConfigError("env.map is required")
    else:
        _check_keys(map_obj, {"spec", "seed", "text", "file"}, "env.map")
        if "spec" in map_obj:
            map_kwargs["map_spec"] = parse_map_spec(map_obj["spec"], "env.map.spec")
            if "seed" in map_obj:
                map_kwargs["map_seed"] = int(map_obj["seed"])
        elif "text" in map_obj:
            map_kwargs["map_text"] = map_obj["text"]
        elif "file" in map_obj:
            map_kwargs["map_text"] = Path(map_obj["file"]).read_text()
        else:
            raise ConfigError("env.map needs one of: spec, text, file")
    try:
        return EnvConfig(
            rules=_parse_rules(obj.get("rules", {})),
            truncation_ticks=int(obj.get("truncation_ticks", 2000)),
            shaping=_parse_shaping(obj.get("reward", "sparse")),
            include_memory_planes=bool(obj.get("include_memory_planes", False)),
            **map_kwargs,
        )
    except ValueError as exc:
        raise ConfigError(f"bad env config: {exc}") from exc


def _parse_agent(obj, position: int) -> AgentHandle:
    if isinstance(obj, str):
        obj = {"type": obj}
    _check_keys(obj, {"type", "name", "params"}, f"agents[{position}]")
    agent_type = obj.get("type")
    if agent_type not in AGENT_REGISTRY:
        raise ConfigError(
            f"agents[{position}]: unknown type {agent_type!r}; known: {sorted(AGENT_REGISTRY)}")
    handle = make_agent(agent_type, **obj.get("params", {}))
    name = obj.get("name", agent_type)
    return AgentHandle(identifier=name, policy=handle.policy,
                       deterministic=handle.deterministic)


def load_run_config(path: str, *, map_override: Optional[str] = None) -> RunConfig:
    """Parse and schema-check a run configuration file (strict keys)."""
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(obj, {"format_version", "env", "agents", "games",
                      "record_replays", "record_digests", "elo"}, "config")
    if obj.get("format_version", REPORT_VERSION) != REPORT_VERSION:
        raise ConfigError(f"unsupported config format_version {obj.get('format_version')!r}")
    if "env" not in obj:
        raise ConfigError("config.env is required")
    agents_obj = obj.get("agents", ["random", "expander"])
    agents = [_parse_agent(entry, pos) for pos, entry in enumerate(agents_obj)]
    names = [a.identifier for a in agents]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate agent names {names}; use 'name' to disambiguate")
    elo_anchor = None
    elo_rating = 1500.0
    if "elo" in obj:
        _check_keys(obj["elo"], {"anchor", "anchor_rating"}, "elo")
        elo_anchor = obj["elo"].get("anchor")
        elo_rating = float(obj["elo"].get("anchor_rating", 1500.0))
        if elo_anchor not in names:
            raise ConfigError(f"elo.anchor {elo_anchor!r} is not one of {names}")
    games = int(obj.get("games", 100))
    if games < 1:
        raise ConfigError("games must be >= 1")
    return RunConfig(
        env=parse_env_config(obj["env"], map_override=map_override),
        agents=agents,
        games=games,
        record_replays=bool(obj.get("record_replays", False)),
        record_digests=bool(obj.get("record_digests", False)),
        elo_anchor=elo_anchor,
        elo_anchor_rating=elo_rating,
    )


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def _write_report(out_dir: Optional[str], report: dict) -> Optional[Path]:
    if out_dir is None:
        return None
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "report.json"
    path.write_text(_canonical_json(report))
    return path


def _emit(report: dict, fmt: str, text_lines: Sequence[str]) -> None:
    if fmt == "json":
        sys.stdout.write(_canonical_json(report))
    else:
        for line in text_lines:
            print(line)


def _series_entry(result: arena.SeriesResult) -> dict:
    return {
        "agent_a": result.agent_a,
        "agent_b": result.agent_b,
        "games": result.games,
        "wins_a": result.wins_a,
        "draws": result.draws,
        "p_hat": round(result.p_hat, 6),
        "wilson_low": round(result.wilson_low, 6),
        "wilson_high": round(result.wilson_high, 6),
    }


def _save_replays(results, out_dir: str, start_index: int = 0) -> int:
    replays = Path(out_dir) / "replays"
    replays.mkdir(parents=True, exist_ok=True)
    index = start_index
    for match in results:
        if match.replay is not None:
            replay_mod.save(match.replay, replays / f"game_{index:05d}.jsonl")
        index += 1
    return index


def cmd_generate_map(args) -> int:
    if args.spec:
        try:
            spec_obj = json.loads(Path(args.spec).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot load map spec: {exc}", file=sys.stderr)
            return 2
        try:
            spec = parse_map_spec(spec_obj)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    else:
        try:
            spec = MapSpec(
                height=args.height, width=args.width,
                mountain_density=args.mountain_density,
                castle_count_range=tuple(args.castles),
                castle_garrison_range=tuple(args.garrison),
                min_general_bfs_distance=args.min_general_distance,
                castle_within_radius=args.castle_radius,
                max_attempts=args.max_attempts,
            )
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    try:
        layout = mapgen.generate(spec, args.seed)
    except GenerationExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        try:
            sample = _last_resort_layout(spec, args.seed)
            violations = "; ".join(str(v) for v in mapgen.validate(sample, spec))
            if violations:
                print(f"sample candidate violations: {violations}", file=sys.stderr)
        except GenerationExhausted:
            pass
        return 1
    text = mapgen.serialize_map_text(layout)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _last_resort_layout(spec: MapSpec, seed: int):
    """One unvalidated candidate, used only to explain an exhausted run."""
    relaxed = MapSpec(
        height=spec.height, width=spec.width,
        mountain_density=spec.mountain_density,
        mountain_density_tolerance=1.0,
        castle_count_range=spec.castle_count_range,
        castle_garrison_range=spec.castle_garrison_range,
        min_general_bfs_distance=1,
        castle_within_radius=max(spec.height, spec.width) * 2,
        max_attempts=spec.max_attempts,
    )
    return mapgen.generate(relaxed, seed)


def cmd_match(args) -> int:
    cfg = _load_config_or_exit(args)
    if cfg is None:
        return 2
    if len(cfg.agents) < 2:
        print("error: match needs two agents in the config", file=sys.stderr)
        return 2
    a, b = cfg.agents[0], cfg.agents[1]
    result = arena.run_match(a, b, cfg.env, args.seed,
                             record=cfg.record_replays or args.out is not None,
                             record_digests=cfg.record_digests)
    report = {
        "format_version": REPORT_VERSION,
        "type": "match",
        "seed": args.seed,
        "agents": list(result.agents),
        "winner": result.winner,
        "ticks": result.ticks,
        "land": list(result.scoreboard.land),
        "army": list(result.scoreboard.army),
    }
    path = _write_report(args.out, report)
    if args.out and result.replay is not None:
        _save_replays([result], args.out)
    _emit(report, args.format, [
        f"{a.identifier} vs {b.identifier} (seed {args.seed})",
        f"winner: {result.winner or 'draw'} after {result.ticks} half-turns",
        f"land {result.scoreboard.land}, army {result.scoreboard.army}",
    ] + ([f"report: {path}"] if path else []))
    return 0


def cmd_series(args) -> int:
    cfg = _load_config_or_exit(args)
    if cfg is None:
        return 2
    if len(cfg.agents) < 2:
        print("error: series needs two agents in the config", file=sys.stderr)
        return 2
    games = args.games or cfg.games
    a, b = cfg.agents[0], cfg.agents[1]
    result = arena.run_series(a, b, games, cfg.env, base_seed=args.seed,
                              record=cfg.record_replays)
    report = {
        "format_version": REPORT_VERSION,
        "type": "series",
        "seed": args.seed,
        "series": [_series_entry(result)],
    }
    path = _write_report(args.out, report)
    if args.out and cfg.record_replays:
        _save_replays(result.results, args.out)
    entry = report["series"][0]
    _emit(report, args.format, [
        f"{a.identifier} vs {b.identifier}: {games} games, seed {args.seed}",
        f"win-rate {entry['p_hat']:.4f} "
        f"(95% Wilson {entry['wilson_low']:.4f}-{entry['wilson_high']:.4f}), "
        f"draws {entry['draws']}",
    ] + ([f"report: {path}"] if path else []))
    return 0


def cmd_tournament(args) -> int:
    cfg = _load_config_or_exit(args)
    if cfg is None:
        return 2
    if len(cfg.agents) < 2:
        print("error: tournament needs at least two agents", file=sys.stderr)
        return 2
    games = args.games or cfg.games
    matrix = arena.WinRateMatrix([a.identifier for a in cfg.agents])
    entries = []
    replay_index = 0
    text = [f"round-robin over {len(cfg.agents)} agents, {games} games per pair"]
    for i in range(len(cfg.agents)):
        for j in range(i + 1, len(cfg.agents)):
            pair_seed = int(np.random.SeedSequence([args.seed, i, j]).generate_state(1)[0])
            result = arena.run_series(cfg.agents[i], cfg.agents[j], games, cfg.env,
                                      base_seed=pair_seed, record=cfg.record_replays)
            matrix.add_series(result)
            entries.append(_series_entry(result))
            if args.out and cfg.record_replays:
                replay_index = _save_replays(result.results, args.out, replay_index)
            text.append(
                f"  {result.agent_a} vs {result.agent_b}: p={result.p_hat:.4f} "
                f"[{result.wilson_low:.4f}, {result.wilson_high:.4f}]")
    report = {
        "format_version": REPORT_VERSION,
        "type": "tournament",
        "seed": args.seed,
        "agents": matrix.agents,
        "games_per_pair": games,
        "series": entries,
        "wins": matrix.wins.tolist(),
        "draws": matrix.draws.tolist(),
        "games": matrix.games.tolist(),
    }
    if cfg.elo_anchor is not None:
        try:
            ratings = arena.fit_elo(matrix, cfg.elo_anchor, cfg.elo_anchor_rating)
        except (arena.DegenerateRate, arena.DisconnectedGraph) as exc:
            print(f"error: elo fit failed: {exc}", file=sys.stderr)
            return 1
        report["elo"] = {name: round(rating, 1) for name, rating in ratings.items()}
        text.append("elo ratings (anchor {} = {:.0f}):".format(
            cfg.elo_anchor, cfg.elo_anchor_rating))
        for name, rating in sorted(report["elo"].items(), key=lambda kv: -kv[1]):
            text.append(f"  {name}: {rating:.1f}")
    path = _write_report(args.out, report)
    if path:
        text.append(f"report: {path}")
    _emit(report, args.format, text)
    return 0


def run_benchmark(height: int, width: int, batch: int, duration: float,
                  seed: int = 0) -> dict:
    """Random-agent throughput benchmark over a batch of environments."""
    report = {
        "format_version": REPORT_VERSION,
        "type": "bench",
        "grid": [height, width],
        "batch": batch,
        "duration_s": duration,
        "total_steps": 0,
        "elapsed_s": 0.0,
        "steps_per_second": 0.0,
        "per_env": [],
    }
    if duration <= 0 or batch < 1:
        return report
    spec = MapSpec(height=height, width=width)
    config = EnvConfig(map_spec=spec)
    envs = [Env(config) for _ in range(batch)]
    agent = RandomLegalAgent()
    rngs = [np.random.default_rng(np.random.SeedSequence([seed, k])) for k in range(batch)]
    next_seed = seed
    observations = []
    episodes = [0] * batch
    steps = [0] * batch
    for env in envs:
        obs, _ = env.reset(next_seed)
        next_seed += 1
        observations.append(obs)

    t0 = time.perf_counter()
    while True:
        elapsed = time.perf_counter() - t0
        if elapsed >= duration:
            break
        actions = [
            [agent.act(observations[k][p], None, rngs[k]) for p in (0, 1)]
            for k in range(batch)
        ]
        results = step_batch(envs, actions)
        for k, res in enumerate(results):
            steps[k] += 1
            if res.terminated or res.truncated:
                obs, _ = envs[k].reset(next_seed)
                next_seed += 1
                episodes[k] += 1
                observations[k] = obs
            else:
                observations[k] = res.observations
    elapsed = time.perf_counter() - t0
    total = sum(steps)
    report.update(
        total_steps=total,
        elapsed_s=round(elapsed, 4),
        steps_per_second=round(total / elapsed, 1) if elapsed > 0 else 0.0,
        per_env=[{"env": k, "steps": steps[k], "episodes": episodes[k]}
                 for k in range(batch)],
    )
    return report


def cmd_bench(args) -> int:
    report = run_benchmark(args.height, args.width, args.batch,
                           args.duration, args.seed)
    lines = [
        f"bench {args.height}x{args.width}, batch {args.batch}, {args.duration}s",
        f"aggregate: {report['steps_per_second']} half-turn steps/s "
        f"({report['total_steps']} steps in {report['elapsed_s']}s)",
    ]
    for entry in report["per_env"]:
        lines.append(f"  env {entry['env']}: {entry['steps']} steps, "
                     f"{entry['episodes']} episode resets")
    _emit(report, args.format, lines)
    if args.out:
        _write_report(args.out, report)
    return 0


_FOG_GLYPH = "~"


def _render_cell(state: core.GridState, i: int, j: int, visible: bool) -> str:
    if not visible:
        return _FOG_GLYPH
    kind = int(state.kind[i, j])
    owner = int(state.owner[i, j])
    army = int(state.army[i, j])
    if kind == CellKind.MOUNTAIN:
        return "#"
    prefix = "." if owner == core.NEUTRAL else "ab"[owner]
    kind_char = {int(CellKind.PLAIN): "", int(CellKind.CASTLE): "C",
                 int(CellKind.GENERAL): "G"}[kind]
    body = f"{prefix}{kind_char}{army if army or kind_char else ''}"
    return body or "."


def render_frame(state: core.GridState, perspective: str) -> str:
    """One text frame; hidden cells render as '~' in player perspectives."""
    if perspective == "full":
        visible = np.ones((state.height, state.width), dtype=bool)
    else:
        player = 0 if perspective == "player0" else 1
        visible = core.dilate8(state.owner == player)
    board = state.scoreboard()
    lines = [
        f"tick {state.tick} land {board.land} army {board.army}"
        + (f" winner {state.winner}" if state.winner is not None else "")
    ]
    width = 5
    for i in range(state.height):
        lines.append("".join(
            _render_cell(state, i, j, bool(visible[i, j])).ljust(width)
            for j in range(state.width)).rstrip())
    return "\n".join(lines) + "\n"


def cmd_replay(args) -> int:
    try:
        log = replay_mod.load(args.path)
    except replay_mod.CorruptReplay as exc:
        print(f"error: corrupt replay: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.mode == "verify":
        verdict = replay_mod.replay_verify(log)
        if verdict.verified:
            print(f"Verified final_hash={verdict.final_hash:016x} "
                  f"ticks={len(log.records)}")
            if args.rewards:
                stream = replay_mod.replay_rewards(log)
                Path(args.rewards).write_text(_canonical_json({
                    "format_version": REPORT_VERSION,
                    "type": "rewards",
                    "rewards": [[r[0], r[1]] for r in stream],
                }))
            return 0
        print(f"Divergence at tick {verdict.divergence_tick}: {verdict.reason}")
        return 1

    out = Path(args.out or "frames")
    out.mkdir(parents=True, exist_ok=True)
    state = core.GridState.from_layout(
        mapgen.parse_map_text(log.header.map_text), log.header.rules)
    (out / "frame_000000.txt").write_text(render_frame(state, args.perspective))
    from .env import decode_action

    for rec in log.records:
        moves = [decode_action(a, state.height, state.width) for a in rec.actions]
        core._resolve_half_turn(state, moves)
        frame = render_frame(state, args.perspective)
        (out / f"frame_{rec.tick:06d}.txt").write_text(frame)
    print(f"wrote {len(log.records) + 1} frames to {out}")
    return 0


def _load_config_or_exit(args) -> Optional[RunConfig]:
    try:
        return load_run_config(args.spec, map_override=args.map)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None
    except ParseError as exc:
        print(f"error: bad map override: {exc}", file=sys.stderr)
        return None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="generalsim",
        description="Generals-style RTS engine: maps, matches, benchmarks, replays.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate-map", help="generate a validated map text file")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--spec", help="JSON MapSpec file (overrides the flags)")
    gen.add_argument("--out", help="output path (stdout when omitted)")
    gen.add_argument("--height", type=int, default=24)
    gen.add_argument("--width", type=int, default=24)
    gen.add_argument("--mountain-density", type=float, default=0.20)
    gen.add_argument("--castles", type=int, nargs=2, default=[9, 11],
                     metavar=("MIN", "MAX"))
    gen.add_argument("--garrison", type=int, nargs=2, default=[40, 50],
                     metavar=("MIN", "MAX"))
    gen.add_argument("--min-general-distance", type=int, default=15)
    gen.add_argument("--castle-radius", type=int, default=6)
    gen.add_argument("--max-attempts", type=int, default=1000)
    gen.set_defaults(func=cmd_generate_map)

    for name, fn, help_text in (
        ("match", cmd_match, "play one recorded match between two agents"),
        ("series", cmd_series, "play a mirrored series with a Wilson interval"),
        ("tournament", cmd_tournament, "round-robin with win-rate matrix and Elo"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--spec", required=True, help="run config JSON file")
        cmd.add_argument("--map", help="map text file overriding the config map")
        cmd.add_argument("--seed", type=int, default=0)
        cmd.add_argument("--out", help="output directory for report and replays")
        cmd.add_argument("--games", type=int, help="override config game count")
        cmd.add_argument("--format", choices=("text", "json"), default="text")
        cmd.set_defaults(func=fn)

    bench = sub.add_parser("bench", help="random-agent throughput benchmark")
    bench.add_argument("--height", type=int, default=24)
    bench.add_argument("--width", type=int, default=24)
    bench.add_argument("--batch", type=int, default=8)
    bench.add_argument("--duration", type=float, default=10.0, help="seconds")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out", help="output directory for the report")
    bench.add_argument("--format", choices=("text", "json"), default="text")
    bench.set_defaults(func=cmd_bench)

    rep = sub.add_parser("replay", help="verify or render a recorded replay")
    rep.add_argument("mode", choices=("verify", "render"))
    rep.add_argument("path", help="replay file")
    rep.add_argument("--perspective", choices=("full", "player0", "player1"),
                     default="full")
    rep.add_argument("--out", help="frame output directory (render)")
    rep.add_argument("--rewards", help="write the reward stream here (verify)")
    rep.set_defaults(func=cmd_replay)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
