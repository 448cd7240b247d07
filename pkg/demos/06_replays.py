"""Recording matches, canonical replay files, and divergence detection.

Run: python3 demos/06_replays.py
"""

import io

from generalsim import EnvConfig, MapSpec, load, replay_verify, save
from generalsim import replay as replay_mod
from generalsim.agents import make_agent
from generalsim.arena import run_match

config = EnvConfig(
    map_spec=MapSpec(height=12, width=12, castle_count_range=(3, 4),
                     min_general_bfs_distance=6),
    truncation_ticks=500,
)
result = run_match(make_agent("expander"), make_agent("random"), config,
                   seed=5, record=True, record_digests=True)
print("winner:", result.winner, "in", result.ticks, "half-turns")

# Canonical serialization: same log, same bytes, every time.
buffer = io.BytesIO()
save(result.replay, buffer)
data = buffer.getvalue()
print("replay size:", len(data), "bytes,", len(result.replay.records), "records")
assert replay_mod.serialize(load(data)) == data

# Re-simulation reproduces the live game's final hash exactly.
verdict = replay_verify(load(data))
print("verified:", verdict.verified,
      "| final hash matches live:",
      verdict.final_hash == result.replay.result.final_hash)

# Flip one recorded action: the per-tick digests pin the divergence tick.
log = load(data)
target = next(i for i, r in enumerate(log.records) if r.actions[0][0] == 0)
record = log.records[target]
log.records[target] = replay_mod.ReplayRecord(
    tick=record.tick,
    actions=((1,) + record.actions[0][1:], record.actions[1]),
    digest=record.digest,
)
verdict = replay_verify(log)
print("\nafter corrupting tick", record.tick, "->",
      "diverged at", verdict.divergence_tick, f"({verdict.reason})")

# The reward stream can be recomputed from the file alone.
stream = replay_mod.replay_rewards(load(data))
print("\nlast three reward pairs:", stream[-3:])
