"""The two-player environment: action vectors, head indices, tensors, batching.

Run: python3 demos/04_environment_and_actions.py
"""

import numpy as np

from generalsim import (
    Env, EnvConfig, MapSpec, RandomLegalAgent, action_to_index, decode_action,
    head_index, index_to_action, step_batch, to_tensor,
)

config = EnvConfig(
    map_spec=MapSpec(height=10, width=10, castle_count_range=(2, 3),
                     min_general_bfs_distance=5),
    truncation_ticks=200,
)
env = Env(config)
observations, info = env.reset(seed=3)
print("reset info:", info)

# Actions are 5-vectors: [pass, i, j, direction, split].
print("\n[1,*,*,*,*] is a pass:", decode_action([1, 0, 0, 0, 0], 10, 10))
print("[0,2,3,1,0] moves all units down from (2,3):",
      decode_action([0, 2, 3, 1, 0], 10, 10))
print("out-of-range decodes to a pass:", decode_action([0, 42, 0, 0, 0], 10, 10))

# The policy head flattens (cell, k) pairs; k=0 is the canonical pass.
flat = head_index(2, 3, 3, 10, 10)
print("\nhead entry (2,3,k=3) -> flat", flat, "->", index_to_action(flat, 10, 10))
print("round trip:", action_to_index(index_to_action(flat, 10, 10), 10, 10) == flat)

# Step with random agents and look at the observation tensor.
agent = RandomLegalAgent()
rngs = [np.random.default_rng(p) for p in (0, 1)]
for _ in range(10):
    actions = [agent.act(observations[p], None, rngs[p]) for p in (0, 1)]
    result = env.step(actions)
    observations = result.observations

tensor = to_tensor(observations[0],
                   growth_interval_turns=config.rules.growth_interval_turns,
                   truncation_ticks=config.truncation_ticks)
print("\ntensor shape (channels, H, W):", tensor.shape)
print("army plane is log-scaled; max:", float(tensor[0].max()))
print("tick plane constant:", float(tensor[14, 0, 0]))

# Batched stepping over independent envs matches per-env stepping exactly.
envs = [Env(config) for _ in range(4)]
batch_obs = [e.reset(seed)[0] for seed, e in enumerate(envs)]
actions = [
    [agent.act(batch_obs[k][p], None, np.random.default_rng([k, p]))
     for p in (0, 1)]
    for k in range(4)
]
results = step_batch(envs, actions)
print("\nbatch hashes:", [hex(r.info["state_hash"]) for r in results])
