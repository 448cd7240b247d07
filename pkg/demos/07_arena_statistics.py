"""Series, Wilson intervals, anchored Elo, and the opponent-pool gate.

Run: python3 demos/07_arena_statistics.py
"""

from generalsim import (
    EnvConfig, MapSpec, PoolConfig, WinRateMatrix, elo_from_winrate, fit_elo,
    pool_update, run_series, wilson_interval,
)
from generalsim.agents import make_agent

# Wilson score interval: robust binomial CI, matching the published numbers.
low, high = wilson_interval(290, 529, z=1.96)
print(f"290/529 wins -> 95% Wilson CI [{low:.4f}, {high:.4f}]")
print(f"  5 /  10 wins -> {wilson_interval(5, 10)}")

# A head-to-head win-rate maps to a rating gap on the logistic curve.
print("\n96% win-rate is a gap of", round(elo_from_winrate(0.96), 1),
      "rating points; anchored at 1500 that puts the winner at",
      round(1500 + elo_from_winrate(0.96)))

# Play a real (small) series: mirrored seats, draws count half.
config = EnvConfig(
    map_spec=MapSpec(height=10, width=10, castle_count_range=(2, 3),
                     min_general_bfs_distance=5),
    truncation_ticks=300,
)
series = run_series(make_agent("expander"), make_agent("random"), 30, config,
                    base_seed=1)
print(f"\nexpander vs random over {series.games} games: "
      f"p = {series.p_hat:.3f} "
      f"[{series.wilson_low:.3f}, {series.wilson_high:.3f}], "
      f"draws {series.draws}")

# Fit anchored ratings from the pairwise matrix.
matrix = WinRateMatrix(["expander", "random"])
matrix.add_series(series)
ratings = fit_elo(matrix, anchor="random", anchor_rating=1500.0)
print("anchored ratings:", {k: round(v) for k, v in ratings.items()})

# Self-play pool gating: >= 45% against the pool replaces the oldest member.
pool = ["gen0", "gen1", "gen2"]
for candidate, rate in [("gen3", 0.52), ("gen4", 0.31), ("gen5", 0.45)]:
    pool = pool_update(pool, candidate, rate, PoolConfig())
    print(f"candidate {candidate} at {rate:.0%} -> pool {pool}")
