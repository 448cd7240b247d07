"""Environment lifecycle, action codecs, tensors, and batched stepping."""

import numpy as np
import pytest

from generalsim import (
    Direction, Env, EnvConfig, MapSpec, Move, ParseError, PASS_MOVE,
    ShapingConfig, Split, StepAfterDone, action_to_index, decode_action,
    encode_action, head_index, index_to_action, state_hash, step_batch,
    to_tensor, observe,
)
from generalsim.env import ARMY_LOG_NORM, TENSOR_CHANNELS

from conftest import give, state_from_text

PASS_ACTION = [1, 0, 0, 0, 0]
OPEN_MAP = "A....\n.....\n.....\n.....\n....B\n"


def open_env(**overrides) -> Env:
    kwargs = dict(map_text=OPEN_MAP, truncation_ticks=50)
    kwargs.update(overrides)
    return Env(EnvConfig(**kwargs))


class TestActionCodec:
    def test_pass_decodes_regardless_of_fields(self):
        move = decode_action([1, 9, 9, 9, 9], 5, 5)
        assert move.is_pass

    def test_direct_field_mapping(self):
        move = decode_action([0, 2, 3, 1, 0], 5, 5)
        assert move == Move(is_pass=False, source=(2, 3),
                            direction=Direction.DOWN, split=Split.ALL)

    def test_out_of_range_becomes_pass(self):
        assert decode_action([0, 5, 0, 0, 0], 5, 5).is_pass
        assert decode_action([0, 0, 0, 4, 0], 5, 5).is_pass
        assert decode_action([0, 0, 0, 0, 2], 5, 5).is_pass
        assert decode_action([0, -1, 0, 0, 0], 5, 5).is_pass

    def test_roundtrip_all_moves(self):
        for i in range(3):
            for j in range(4):
                for d in Direction:
                    for s in Split:
                        move = Move(is_pass=False, source=(i, j), direction=d, split=s)
                        assert decode_action(encode_action(move), 3, 4) == move
        assert decode_action(encode_action(PASS_MOVE), 3, 4).is_pass


class TestHeadIndex:
    def test_pass_is_flat_zero(self):
        assert head_index(0, 0, 0, 4, 5) == 0
        assert index_to_action(0, 4, 5)[0] == 1

    def test_k_table_matches_direction_split_layout(self):
        # k = 1 + 2*direction + split, cross-checked against the decoder.
        expected = {}
        for d in range(4):
            for s in range(2):
                expected[1 + 2 * d + s] = (d, s)
        for k, (d, s) in expected.items():
            vec = index_to_action(head_index(1, 2, k, 4, 5), 4, 5)
            assert list(vec) == [0, 1, 2, d, s]
        assert expected[3] == (1, 0)  # direction DOWN, split ALL

    def test_bijection_exhaustive_4x5(self):
        h, w = 4, 5
        seen = set()
        for i in range(h):
            for j in range(w):
                for k in range(9):
                    flat = head_index(i, j, k, h, w)
                    assert 0 <= flat < h * w * 9
                    seen.add(flat)
                    vec = index_to_action(flat, h, w)
                    if k == 0:
                        assert vec[0] == 1
                        assert action_to_index(vec, h, w) == 0
                    else:
                        assert action_to_index(vec, h, w) == flat
        assert len(seen) == h * w * 9

    def test_range_checks(self):
        with pytest.raises(ValueError):
            head_index(4, 0, 0, 4, 5)
        with pytest.raises(ValueError):
            index_to_action(4 * 5 * 9, 4, 5)


class TestReset:
    def test_same_seed_identical_observations(self):
        cfg = EnvConfig(map_spec=MapSpec(height=10, width=10,
                                         castle_count_range=(2, 3),
                                         min_general_bfs_distance=5))
        a_obs, a_info = Env(cfg).reset(5)
        b_obs, b_info = Env(cfg).reset(5)
        assert a_info["state_hash"] == b_info["state_hash"]
        for p in (0, 1):
            assert np.array_equal(a_obs[p].visible_army, b_obs[p].visible_army)
            assert np.array_equal(a_obs[p].fog, b_obs[p].fog)

    def test_fixture_map_fog_hand_computed(self):
        env = open_env()
        obs, _ = env.reset(0)
        visible0 = np.zeros((5, 5), dtype=bool)
        visible0[0:2, 0:2] = True
        assert np.array_equal(~obs[0].fog, visible0)
        assert obs[0].scoreboard.land == (1, 1)
        assert obs[0].scoreboard.army == (1, 1)

    def test_bad_map_text_raises(self):
        env = Env(EnvConfig(map_text="A..\n..\n"))
        with pytest.raises(ParseError):
            env.reset(0)

    def test_infeasible_spec_propagates(self):
        from generalsim import GenerationExhausted

        spec = MapSpec(min_general_bfs_distance=24 * 24, max_attempts=5)
        with pytest.raises(GenerationExhausted):
            Env(EnvConfig(map_spec=spec)).reset(0)

    def test_map_source_exclusivity(self):
        with pytest.raises(ValueError):
            EnvConfig(map_text=OPEN_MAP, map_spec=MapSpec())
        with pytest.raises(ValueError):
            EnvConfig()


class TestStep:
    def test_double_pass_sparse(self):
        env = open_env()
        env.reset(0)
        result = env.step([PASS_ACTION, PASS_ACTION])
        assert result.rewards == (0.0, 0.0)
        assert not result.terminated and not result.truncated
        assert result.info["tick"] == 1

    def test_terminal_rewards_and_flags(self):
        env = Env(EnvConfig(map_text="A.B\n...\n", truncation_ticks=50))
        env.reset(0)
        give(env.state, (0, 1), owner=0, army=5)
        result = env.step([[0, 0, 1, 3, 0], PASS_ACTION])
        assert result.terminated and not result.truncated
        assert result.rewards == (1.0, -1.0)
        assert env.done

    def test_truncation_flags_and_zero_reward(self):
        env = open_env(truncation_ticks=3)
        env.reset(0)
        for _ in range(2):
            result = env.step([PASS_ACTION, PASS_ACTION])
            assert not result.truncated
        result = env.step([PASS_ACTION, PASS_ACTION])
        assert result.truncated and not result.terminated
        assert result.rewards == (0.0, 0.0)

    def test_terminated_takes_precedence_on_truncation_tick(self):
        env = Env(EnvConfig(map_text="A.B\n...\n", truncation_ticks=1))
        env.reset(0)
        give(env.state, (0, 1), owner=0, army=5)
        result = env.step([[0, 0, 1, 3, 0], PASS_ACTION])
        assert result.terminated and not result.truncated

    def test_step_after_done_raises(self):
        env = open_env(truncation_ticks=1)
        env.reset(0)
        env.step([PASS_ACTION, PASS_ACTION])
        with pytest.raises(StepAfterDone):
            env.step([PASS_ACTION, PASS_ACTION])

    def test_out_of_range_action_flagged(self):
        env = open_env()
        env.reset(0)
        result = env.step([[0, 99, 99, 0, 0], PASS_ACTION])
        assert result.info["decoded_to_pass"] == (True, False)

    def test_shaped_rewards_follow_formula(self):
        shaping = ShapingConfig(gamma=0.99)
        env = open_env(shaping=shaping)
        env.reset(0)
        from generalsim import PotentialInputs, potential

        prev = [PotentialInputs.from_state(env.state, p) for p in (0, 1)]
        result = env.step([[0, 0, 0, 3, 0], PASS_ACTION])  # general can't move (army 1)
        nxt = [PotentialInputs.from_state(env.state, p) for p in (0, 1)]
        for p in (0, 1):
            expected = 0.99 * potential(nxt[p], shaping) - potential(prev[p], shaping)
            assert result.rewards[p] == pytest.approx(expected, abs=1e-12)

    def test_sparse_episode_rewards_zero_sum(self):
        env = Env(EnvConfig(map_text="A.B\n...\n", truncation_ticks=30))
        env.reset(0)
        give(env.state, (1, 0), owner=0, army=9)
        totals = [0.0, 0.0]
        result = env.step([[0, 1, 0, 3, 0], PASS_ACTION])
        totals[0] += result.rewards[0]
        totals[1] += result.rewards[1]
        while not (result.terminated or result.truncated):
            result = env.step([[0, 1, 1, 3, 0], PASS_ACTION])
            totals[0] += result.rewards[0]
            totals[1] += result.rewards[1]
        assert totals[0] + totals[1] == 0.0


class TestTensor:
    def test_channel_values(self):
        state = state_from_text(OPEN_MAP)
        give(state, (0, 1), owner=0, army=9)
        obs = observe(state, 0)
        tensor = to_tensor(obs, truncation_ticks=50)
        assert tensor.shape == (len(TENSOR_CHANNELS), 5, 5)
        assert tensor[0, 0, 1] == pytest.approx(np.log(10.0))
        assert tensor[1, 0, 0] == 1.0                       # own general cell
        assert tensor[7, 4, 4] == 1.0                       # far corner fogged
        assert tensor[8].max() == tensor[8].min() == 2 / 25  # own land / (H*W)
        assert tensor[10, 0, 0] == pytest.approx(np.log1p(10) / ARMY_LOG_NORM)
        assert tensor[12, 0, 0] == 1.0                      # full period remaining
        assert tensor[13, 0, 0] == 1.0                      # player 0 priority at tick 0
        assert tensor[14, 0, 0] == 0.0

    def test_fogged_cells_all_zero_structure(self):
        state = state_from_text(OPEN_MAP)
        obs = observe(state, 0)
        tensor = to_tensor(obs)
        fogged = obs.fog
        for channel in range(7):
            assert np.all(tensor[channel][fogged] == 0.0)

    def test_scalar_planes_are_constant(self):
        state = state_from_text(OPEN_MAP)
        obs = observe(state, 1)
        tensor = to_tensor(obs)
        for channel in range(8, len(TENSOR_CHANNELS)):
            assert tensor[channel].min() == tensor[channel].max()

    def test_priority_plane_tracks_tick_parity(self):
        state = state_from_text(OPEN_MAP)
        state.tick = 3
        obs0, obs1 = observe(state, 0), observe(state, 1)
        assert to_tensor(obs0)[13, 0, 0] == 0.0
        assert to_tensor(obs1)[13, 0, 0] == 1.0

    def test_memory_planes_appended(self):
        from generalsim import MemoryState, memory_update

        state = state_from_text(OPEN_MAP)
        obs = observe(state, 0)
        mem = memory_update(MemoryState.fresh(5, 5, 0), obs)
        tensor = to_tensor(obs, mem)
        assert tensor.shape[0] == len(TENSOR_CHANNELS) + 19

    def test_pure_function_of_inputs(self):
        state = state_from_text(OPEN_MAP)
        obs = observe(state, 0)
        assert np.array_equal(to_tensor(obs), to_tensor(obs))


class TestMemoryIntegration:
    def test_env_maintains_per_player_memories(self):
        env = open_env(include_memory_planes=True, tensor_observations=True)
        obs, _ = env.reset(0)
        assert env.memories is not None
        assert env.memories[0].explored.sum() == np.count_nonzero(~obs[0].fog)
        result = env.step([PASS_ACTION, PASS_ACTION])
        assert result.tensors is not None
        assert result.tensors[0].shape[0] == len(TENSOR_CHANNELS) + 19
        assert len(env.memories[0].own_moves) == 1  # the executed pass

    def test_memories_reset_between_episodes(self):
        env = open_env(include_memory_planes=True, truncation_ticks=2)
        env.reset(0)
        env.step([PASS_ACTION, PASS_ACTION])
        env.step([PASS_ACTION, PASS_ACTION])
        explored_after = env.memories[0].explored.sum()
        env.reset(0)
        assert env.memories[0].explored.sum() == explored_after  # same map, fresh fold
        assert len(env.memories[0].own_moves) == 0


class TestStepBatch:
    def test_batch_of_one_equals_step(self):
        env_a, env_b = open_env(), open_env()
        env_a.reset(4)
        env_b.reset(4)
        batch = step_batch([env_a], [[PASS_ACTION, PASS_ACTION]])
        single = env_b.step([PASS_ACTION, PASS_ACTION])
        assert batch[0].info["state_hash"] == single.info["state_hash"]

    def test_batch_matches_sequential_hashes(self, rng):
        spec = MapSpec(height=10, width=10, castle_count_range=(2, 3),
                       min_general_bfs_distance=5)
        cfg = EnvConfig(map_spec=spec, truncation_ticks=40)
        batched = [Env(cfg) for _ in range(6)]
        sequential = [Env(cfg) for _ in range(6)]
        for k in range(6):
            batched[k].reset(k)
            sequential[k].reset(k)
        from generalsim import RandomLegalAgent

        agent = RandomLegalAgent()
        for step in range(30):
            actions = []
            for k in range(6):
                moves = [agent.act(observe(batched[k].state, p), None,
                                   np.random.default_rng(1000 * step + 10 * k + p))
                         for p in (0, 1)]
                actions.append(moves)
            results = step_batch(batched, actions)
            for k in range(6):
                expected = sequential[k].step(actions[k])
                assert results[k].info["state_hash"] == expected.info["state_hash"]

    def test_batch_isolates_failures(self):
        healthy, finished = open_env(), open_env(truncation_ticks=1)
        healthy.reset(0)
        finished.reset(0)
        finished.step([PASS_ACTION, PASS_ACTION])  # exhausts the episode
        results = step_batch([finished, healthy],
                             [[PASS_ACTION, PASS_ACTION], [PASS_ACTION, PASS_ACTION]])
        assert isinstance(results[0], StepAfterDone)
        assert results[1].info["tick"] == 1

    def test_thread_executor_equivalent(self):
        from concurrent.futures import ThreadPoolExecutor

        cfg = EnvConfig(map_text=OPEN_MAP, truncation_ticks=50)
        serial = [Env(cfg) for _ in range(4)]
        threaded = [Env(cfg) for _ in range(4)]
        for k in range(4):
            serial[k].reset(k)
            threaded[k].reset(k)
        actions = [[PASS_ACTION, PASS_ACTION]] * 4
        expected = step_batch(serial, actions)
        with ThreadPoolExecutor(2) as pool:
            got = step_batch(threaded, actions, executor=pool)
        assert [r.info["state_hash"] for r in got] == \
               [r.info["state_hash"] for r in expected]

    def test_length_mismatch_rejected(self):
        env = open_env()
        env.reset(0)
        with pytest.raises(ValueError):
            step_batch([env], [])
