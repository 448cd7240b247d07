"""Fog-of-war observations and the persistent memory planes.

Run: python3 demos/03_fog_and_memory.py
"""

from generalsim import (
    Direction, MemoryState, Move, PASS_MOVE, apply_half_turn, memory_planes,
    memory_update, observe, parse_map_text,
)
from generalsim.core import GridState

state = GridState.from_layout(parse_map_text(
    "A....\n"
    ".....\n"
    "..C..\n"
    ".....\n"
    "....B\n"
))

obs = observe(state, 0)
print("visible cells for player 0 (True = visible):")
print(~obs.fog)
print("the castle at (2,2) is hidden:", bool(obs.fog[2, 2]))
print("scoreboard is global:", obs.scoreboard)

# Send a scout toward the castle; memory keeps what we uncover.
memory = memory_update(MemoryState.fresh(5, 5, 0), obs)
state.army[0, 0] = 6
state.army_total[0] = 6
path = [Direction.DOWN, Direction.DOWN]
sources = [(0, 0), (1, 0)]
for src, direction in zip(sources, path):
    move = Move(source=src, direction=direction)
    state, events = apply_half_turn(state, [move, PASS_MOVE])
    obs = observe(state, 0)
    memory = memory_update(memory, obs, events.outcomes[0].move)

print("\ncastle visible now:", bool(obs.visible_castle[2, 2]))
print("memory marks the castle as revealed:", memory.revealed[2, 2] == 1)

# Retreat: the castle falls back into fog but memory keeps it.
state, _ = apply_half_turn(
    state, [Move(source=(2, 0), direction=Direction.UP), PASS_MOVE])
state, _ = apply_half_turn(
    state, [Move(source=(1, 0), direction=Direction.UP), PASS_MOVE])
obs = observe(state, 0)
memory = memory_update(memory, obs)
print("castle fogged again:", bool(obs.fog[2, 2]),
      "| still in memory:", memory.revealed[2, 2] == 1)

planes = memory_planes(memory)
print("\nmemory stack shape:", planes.shape,
      "(5 sticky planes + 7 own + 7 opponent move planes)")
print("explored cells so far:", int(planes[3].sum()))
print("last own move plane (direction value at the source cell):")
print(planes[5])
