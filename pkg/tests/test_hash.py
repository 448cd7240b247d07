"""State digest stability and sensitivity."""

from generalsim import state_hash

from conftest import resync_counters, state_from_text

# Frozen digest of the fixture below; guards cross-platform / cross-version
# stability of the hash layout. Regenerate only on a deliberate format bump.
GOLDEN_TEXT = "A..#.\n..C..\n.#...\n....B\n---\nC 1 2 42\n"
GOLDEN_HASH = 0xC02F8C45568CDE7B


def test_copy_hashes_equal():
    state = state_from_text(GOLDEN_TEXT)
    assert state_hash(state) == state_hash(state.copy())


def test_single_field_mutations_change_hash():
    state = state_from_text(GOLDEN_TEXT)
    base = state_hash(state)
    seen = {base}
    count = 0
    for i in range(state.height):
        for j in range(state.width):
            army_bump = state.copy()
            army_bump.army[i, j] += 1
            owner_cycle = state.copy()
            owner_cycle.owner[i, j] = (int(owner_cycle.owner[i, j]) + 2) % 3 - 1
            for mutated in (army_bump, owner_cycle):
                resync_counters(mutated)
                digest = state_hash(mutated)
                assert digest != base
                seen.add(digest)
                count += 2
    ticked = state.copy()
    ticked.tick += 17
    seen.add(state_hash(ticked))
    # Every distinct one-step mutation hashes distinctly.
    assert len(seen) == 2 * state.height * state.width + 2


def test_golden_hash_fixture():
    state = state_from_text(GOLDEN_TEXT)
    assert state_hash(state) == GOLDEN_HASH


def test_hash_covers_tick():
    state = state_from_text(GOLDEN_TEXT)
    ticked = state.copy()
    ticked.tick = 5
    assert state_hash(state) != state_hash(ticked)
