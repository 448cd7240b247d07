"""Potential-based reward shaping and its policy-invariance property.

Run: python3 demos/05_reward_shaping.py
"""

import numpy as np

from generalsim import (
    Env, EnvConfig, MapSpec, PotentialInputs, RandomLegalAgent, ShapingConfig,
    potential, shaped_reward,
)

cfg = ShapingConfig(gamma=1.0, max_ratio=10.0)

# The potential is a weighted sum of clamped log-ratios: land, army, castles.
balanced = PotentialInputs(10, 50, 1, 10, 50, 1)
ahead = PotentialInputs(20, 50, 1, 10, 50, 1)
crushed = PotentialInputs(1, 1, 0, 400, 5000, 11)
print("balanced position:", potential(balanced, cfg))
print("double the land:  ", potential(ahead, cfg), "(= 0.3*log2/log10)")
print("hopeless position:", potential(crushed, cfg), "(clamped near -1)")
print("antisymmetry:", potential(ahead, cfg), "=", -potential(ahead.swapped(), cfg))

# One shaped transition: r + gamma*phi(s') - phi(s).
r = shaped_reward(balanced, ahead, 0.0, cfg)
print("\nreward for gaining land:", r)
r_terminal = shaped_reward(ahead, None, 1.0, cfg)
print("terminal win from a winning position:", r_terminal,
      "(potential of terminal states is zero)")

# Over a whole episode the shaping telescopes: the return shifts by
# phi(s_T) - phi(s_0) only, so optimal policies are unchanged.
env = Env(EnvConfig(
    map_spec=MapSpec(height=8, width=8, castle_count_range=(1, 2),
                     min_general_bfs_distance=4, castle_within_radius=8,
                     mountain_density=0.1, mountain_density_tolerance=0.2),
    truncation_ticks=150,
    shaping=cfg,
))
obs, _ = env.reset(seed=11)
agent = RandomLegalAgent()
rngs = [np.random.default_rng(p) for p in (0, 1)]
phi_0 = potential(PotentialInputs.from_state(env.state, 0), cfg)
shaped_sum = 0.0
original_sum = 0.0
while True:
    result = env.step([agent.act(obs[p], None, rngs[p]) for p in (0, 1)])
    obs = result.observations
    shaped_sum += result.rewards[0]
    if result.terminated:
        original_sum = 1.0 if result.info["events"].winner == 0 else -1.0
        phi_T = 0.0
        break
    if result.truncated:
        phi_T = potential(PotentialInputs.from_state(env.state, 0), cfg)
        break

print(f"\nepisode shaped return: {shaped_sum:.12f}")
print(f"original + phi_T - phi_0: {original_sum + phi_T - phi_0:.12f}")
print("telescoping error:", abs(shaped_sum - (original_sum + phi_T - phi_0)))
