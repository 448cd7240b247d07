"""Walk through the core rules by hand: moves, combat, growth, capture.

Run: python3 demos/01_rules_and_combat.py
"""

from generalsim import (
    Direction, Move, PASS_MOVE, Split, apply_half_turn, check_terminal,
    parse_map_text, validate_move,
)
from generalsim.core import GridState

# A tiny hand-written map: generals A and B, one neutral castle, a mountain.
state = GridState.from_layout(parse_map_text(
    "A..C.\n"
    ".#...\n"
    "....B\n"
    "---\n"
    "C 0 3 5\n"
))
print("initial armies:\n", state.army)
print("scoreboard:", state.scoreboard())

# Generals start with a single unit, so no move is legal yet.
move = Move(source=(0, 0), direction=Direction.RIGHT)
print("move from 1-army general:", validate_move(state, 0, move))

# Let production run for a few turns (two half-turns per turn).
for _ in range(6):
    state, _ = apply_half_turn(state, [PASS_MOVE, PASS_MOVE])
print("\nafter 3 turns, general armies:",
      state.army[0, 0], "and", state.army[2, 4])

# March player 0 right and take the neutral castle (garrison 5).
state.army[0, 0] = 9  # pretend we saved up
state.army_total[0] = 9
state, events = apply_half_turn(
    state, [Move(source=(0, 0), direction=Direction.RIGHT), PASS_MOVE])
state, events = apply_half_turn(
    state, [Move(source=(0, 1), direction=Direction.RIGHT), PASS_MOVE])
state, events = apply_half_turn(
    state, [Move(source=(0, 2), direction=Direction.RIGHT), PASS_MOVE])
outcome = events.outcomes[0]
print("\ncastle assault: moved", outcome.moved, "captured:", outcome.captured)
print("castle cell now owner", state.owner[0, 3], "army", state.army[0, 3])
print("castles owned:", state.castle_count)

# Half splits move floor(n/2) and never strand the source.
state.army[0, 3] = 9
state.army_total[0] = int(state.recount_scoreboard().army[0])
state, events = apply_half_turn(
    state, [Move(source=(0, 3), direction=Direction.LEFT, split=Split.HALF),
            PASS_MOVE])
print("\nhalf split of 9:", events.outcomes[0].moved, "moved,",
      state.army[0, 3], "remain on the castle (incl. +1 turn production)")

# Equal forces never flip ownership: the defender keeps the cell at zero.
print("\nterminal check before any capture:", check_terminal(state))
