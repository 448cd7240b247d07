import numpy as np
import pytest

from generalsim import GridState, RulesConfig, parse_map_text


def state_from_text(text: str, rules: RulesConfig | None = None) -> GridState:
    return GridState.from_layout(parse_map_text(text), rules)


def resync_counters(state: GridState) -> None:
    """Recompute the incremental counters after tests poke the arrays."""
    state.rebuild_derived()


def give(state: GridState, pos, owner: int, army: int) -> None:
    """Hand a cell to a player with a set army, keeping counters honest."""
    state.owner[pos] = owner
    state.army[pos] = army
    resync_counters(state)


@pytest.fixture
def open5() -> GridState:
    return state_from_text("A....\n.....\n.....\n.....\n....B\n")


@pytest.fixture
def corridor() -> GridState:
    # Two generals on one open row with room to collide in the middle.
    return state_from_text("A.....B\n.......\n")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
