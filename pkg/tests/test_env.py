"""Environment and configuration tests.

The channel formulas are checked against closed forms recomputed inline and
against a flat per-link interference re-summation, deliberately written
differently from the package's per-station aggregation.
"""
import math

import numpy as np
import pytest

from scenecast.config import (AgentConfig, EpisodeConfig, agent_config,
                              episode_config, parse_scenario)
from scenecast.env import (IDLE, AllocationAction, DownlinkEnv, WorldState,
                           apply_mobility, apply_step, as_assignment,
                           channel_gains, data_rate, decode_action_index,
                           draw_tape, encode_assignment, encode_state,
                           mobility_update, path_loss, per_ue_rates,
                           reset_episode, sinr, step_dynamics)
from scenecast.errors import (InvalidActionError, InvalidParameterError,
                              InvalidStateError)


def hand_state(gains, powers, remaining, step_index=1, finish=None):
    """WorldState with explicit channel numbers; positions are placeholders."""
    gains = np.asarray(gains, dtype=np.float64)
    n, m = gains.shape
    return WorldState(
        step_index=step_index,
        ue_positions=np.zeros((n, 2)),
        station_positions=np.zeros((m, 2)),
        remaining_bits=np.asarray(remaining, dtype=np.float64),
        powers_w=np.asarray(powers, dtype=np.float64),
        gains=gains,
        finish_steps=(np.zeros(n, dtype=np.int64) if finish is None
                      else np.asarray(finish, dtype=np.int64)),
    )


def brute_sinr(state, assignment, ue, noise_w):
    """Independent SINR: sum interference link by link over all served UEs."""
    v = assignment[ue]
    signal = state.gains[ue, v - 1] * state.powers_w[ue]
    denom = noise_w
    for n in range(state.num_ues):
        if n == ue or assignment[n] == IDLE:
            continue
        denom += state.gains[ue, assignment[n] - 1] * state.powers_w[n]
    return signal / denom


@pytest.fixture
def cfg22():
    return episode_config("2x2")


@pytest.fixture
def cfg43():
    return episode_config("4x3")


class TestPathLoss:
    def test_closed_form_values(self):
        # (wl / (4 pi d))^2 recomputed inline
        for d, wl in ((1000.0, 3e-4), (100.0, 0.1), (1.0, 30.0), (523.7, 30.0)):
            expected = (wl / (4.0 * math.pi * d)) ** 2
            got = path_loss(d, wl)
            assert got == pytest.approx(expected, rel=1e-12), f"d={d} wl={wl}"

    def test_literal_carrier_km_cell(self):
        # published carrier over a km: attenuation ~5.7e-16
        assert path_loss(1000.0, 3e-4) == pytest.approx(5.699316579881e-16, rel=1e-9)

    def test_monotone_in_distance(self):
        d = np.linspace(1.0, 2000.0, 50)
        g = path_loss(d, 30.0)
        assert np.all(np.diff(g) < 0), "gain must fall with distance"

    def test_invalid_inputs(self):
        with pytest.raises(InvalidParameterError):
            path_loss(0.0, 0.1)
        with pytest.raises(InvalidParameterError):
            path_loss(10.0, -1.0)

    def test_distance_floor(self, cfg22):
        ue = np.array([[500.0, 500.0], [500.0, 500.0]])
        st = np.array([[500.0, 500.0], [0.0, 0.0]])
        g = channel_gains(ue, st, cfg22)
        # co-located pair is floored to min_distance_m, not infinite
        expected = path_loss(cfg22.min_distance_m, cfg22.wavelength_m)
        assert g[0, 0] == pytest.approx(expected, rel=1e-12)
        assert np.all(np.isfinite(g))


class TestSinrAndRates:
    GAINS = [[1e-6, 2e-6], [3e-6, 4e-6]]
    POWERS = [1.0, 2.0]

    def test_hand_case_separate_stations(self, cfg22):
        state = hand_state(self.GAINS, self.POWERS, [2e7, 8e7])
        a = np.array([1, 2])
        # UE0: sig 1e-6, inter 2e-6*2, noise 1e-6 -> 0.2
        assert sinr(state, a, 0, cfg22) == pytest.approx(0.2, rel=1e-12)
        # UE1: sig 4e-6*2, inter 3e-6*1 -> 8/(3+1) = 2
        assert sinr(state, a, 1, cfg22) == pytest.approx(2.0, rel=1e-12)

    def test_hand_case_shared_station(self, cfg22):
        state = hand_state(self.GAINS, self.POWERS, [2e7, 8e7])
        a = np.array([1, 1])
        # UE0: sig 1e-6, intra 1e-6*2 -> 1/(2+1) = 1/3
        assert sinr(state, a, 0, cfg22) == pytest.approx(1.0 / 3.0, rel=1e-12)
        # UE1: sig 3e-6*2, intra 3e-6*1 -> 6/(3+1) = 1.5
        assert sinr(state, a, 1, cfg22) == pytest.approx(1.5, rel=1e-12)

    def test_idle_ue_has_no_sinr(self, cfg22):
        state = hand_state(self.GAINS, self.POWERS, [2e7, 8e7])
        with pytest.raises(InvalidActionError):
            sinr(state, np.array([0, 1]), 0, cfg22)

    def test_rate_closed_form(self, cfg22):
        assert data_rate(0.0, cfg22) == 0.0
        assert data_rate(1.0, cfg22) == pytest.approx(1e7, rel=1e-12)
        assert data_rate(3.0, cfg22) == pytest.approx(2e7, rel=1e-12)
        with pytest.raises(InvalidParameterError):
            data_rate(-0.5, cfg22)

    def test_vectorized_matches_scalar_path(self, cfg22):
        state = hand_state(self.GAINS, self.POWERS, [2e7, 8e7])
        a = np.array([1, 2])
        rates = per_ue_rates(state, a, cfg22)
        for i in range(2):
            expected = data_rate(sinr(state, a, i, cfg22), cfg22)
            assert rates[i] == pytest.approx(expected, rel=1e-12)

    def test_idle_gets_zero_rate(self, cfg22):
        state = hand_state(self.GAINS, self.POWERS, [2e7, 8e7])
        rates = per_ue_rates(state, np.array([0, 2]), cfg22)
        assert rates[0] == 0.0 and rates[1] > 0.0

    def test_brute_force_resummation_random_states(self):
        # flat per-link re-summation vs the structured formula
        rng = np.random.default_rng(7)
        for trial in range(30):
            n = int(rng.integers(1, 7))
            m = int(rng.integers(1, 5))
            cfg = episode_config(f"{n}x{m}")
            state = hand_state(
                rng.uniform(1e-9, 1e-5, size=(n, m)),
                rng.uniform(0.5, 2.0, size=n),
                rng.uniform(1e8, 3e8, size=n),
            )
            assignment = rng.integers(0, m + 1, size=n)
            rates = per_ue_rates(state, assignment, cfg)
            for i in range(n):
                if assignment[i] == IDLE:
                    assert rates[i] == 0.0
                    continue
                expected = brute_sinr(state, assignment, i, cfg.noise_power_w)
                got = sinr(state, assignment, i, cfg)
                assert got == pytest.approx(expected, rel=1e-10), \
                    f"trial {trial} ue {i}"
                assert rates[i] == pytest.approx(
                    cfg.bandwidth_hz * math.log2(1.0 + expected), rel=1e-10)

    def test_interference_monotone_in_power(self, cfg22):
        # raising an interferer's power can only lower everyone else's SINR
        state = hand_state(self.GAINS, self.POWERS, [2e7, 8e7])
        bumped = hand_state(self.GAINS, [1.0, 5.0], [2e7, 8e7])
        a = np.array([1, 2])
        assert sinr(bumped, a, 0, cfg22) < sinr(state, a, 0, cfg22)


class TestActionCodec:
    def test_reference_encoding(self):
        # 2 UEs, 2 stations: (1, 1) -> 1 + 1*3 = 4
        assert encode_assignment([1, 1], 2) == 4
        assert list(decode_action_index(4, 2, 2)) == [1, 1]

    def test_ue0_least_significant(self):
        assert encode_assignment([1, 0], 2) == 1
        assert encode_assignment([0, 1], 2) == 3
        assert encode_assignment([2, 1], 3) == 2 + 1 * 4

    def test_round_trip_full_space(self):
        n, m = 3, 2
        seen = set()
        for idx in range((m + 1) ** n):
            a = decode_action_index(idx, n, m)
            back = encode_assignment(a, m)
            assert back == idx
            seen.add(tuple(a))
        assert len(seen) == (m + 1) ** n, "codec must be a bijection"

    def test_invalid_rejected(self):
        with pytest.raises(InvalidActionError):
            decode_action_index(9, 2, 2)
        with pytest.raises(InvalidActionError):
            decode_action_index(-1, 2, 2)
        with pytest.raises(InvalidActionError):
            encode_assignment([0, 3], 2)

    def test_allocation_action_constructors(self):
        act = AllocationAction.from_index(4, 2, 2)
        assert list(act.assignment) == [1, 1] and act.action_index == 4
        act2 = AllocationAction.from_assignment([2, 0], 2)
        assert act2.action_index == 2

    def test_as_assignment_accepts_all_forms(self, cfg22):
        ref = np.array([1, 2])
        for form in (ref, AllocationAction.from_assignment(ref, 2),
                     int(encode_assignment(ref, 2))):
            assert np.array_equal(as_assignment(form, cfg22), ref)
        with pytest.raises(InvalidActionError):
            as_assignment(np.array([1, 2, 0]), cfg22)
        with pytest.raises(InvalidActionError):
            as_assignment(np.array([1, 3]), cfg22)


class TestStateEncoding:
    def test_layout_and_values(self, cfg22):
        g_mid = path_loss(500.0, cfg22.wavelength_m)
        state = hand_state([[g_mid] * 2] * 2, [0.5, 2.0], [3e8, 1.5e8])
        vec = encode_state(state, cfg22)
        assert vec.shape == (cfg22.state_dim,) == (8,)
        # backlog block: D / data_max
        assert vec[0] == pytest.approx(1.0)
        assert vec[1] == pytest.approx(0.5)
        # gain block: log-interpolated between floor distance and area diagonal
        g_hi = path_loss(cfg22.min_distance_m, cfg22.wavelength_m)
        g_lo = path_loss(math.sqrt(2.0) * cfg22.area_m, cfg22.wavelength_m)
        expected = (math.log(g_mid) - math.log(g_lo)) / (math.log(g_hi) - math.log(g_lo))
        assert np.allclose(vec[2:6], expected)
        # power block: min-max over the configured range
        assert vec[6] == pytest.approx(0.0)
        assert vec[7] == pytest.approx(1.0)

    def test_everything_in_unit_interval(self, cfg43):
        env = DownlinkEnv(cfg43, seed=3)
        state = env.reset()
        rng = np.random.default_rng(0)
        for _ in range(15):
            vec = encode_state(state, cfg43)
            assert vec.shape == (cfg43.state_dim,)
            assert np.all(vec >= 0.0) and np.all(vec <= 1.0), f"{vec}"
            state, out = env.step(int(rng.integers(cfg43.num_actions)))
            if out.done:
                break

    def test_zero_backlog_block(self, cfg22):
        state = hand_state([[1e-6] * 2] * 2, [1.0, 1.0], [0.0, 0.0])
        vec = encode_state(state, cfg22)
        assert np.all(vec[:2] == 0.0)


class TestStepDynamics:
    GAINS = [[1e-6, 2e-6], [3e-6, 4e-6]]
    POWERS = [1.0, 2.0]

    def drain_for(self, gamma, cfg):
        return 5.0 * cfg.bandwidth_hz * math.log2(1.0 + gamma)

    def test_drain_arithmetic(self, cfg22):
        state = hand_state(self.GAINS, self.POWERS, [2e7, 8e7])
        rng = np.random.default_rng(0)
        nxt, out = apply_step(state, np.array([1, 2]), cfg22, rng)
        # gammas are 0.2 and 2.0 (see TestSinrAndRates)
        exp0 = 2e7 - self.drain_for(0.2, cfg22)
        exp1 = 8e7 - self.drain_for(2.0, cfg22)
        assert nxt.remaining_bits[0] == pytest.approx(exp0, rel=1e-12)
        assert nxt.remaining_bits[1] == pytest.approx(exp1, rel=1e-12)
        assert out.reward == -1.0 and out.waste_count == 0
        assert not out.done and nxt.step_index == 2

    def test_clip_to_zero_and_finish_step(self, cfg22):
        state = hand_state(self.GAINS, self.POWERS, [1e6, 8e7])
        nxt, out = apply_step(state, np.array([1, 2]), cfg22,
                              np.random.default_rng(0))
        assert nxt.remaining_bits[0] == 0.0, "backlog clips at zero"
        assert nxt.finish_steps[0] == 1 and nxt.finish_steps[1] == 0
        assert not out.done

    def test_exact_finish_counts(self, cfg22):
        state0 = hand_state(self.GAINS, self.POWERS, [1.0, 8e7])
        # backlog equal to one step's drain finishes exactly
        exact = self.drain_for(0.2, cfg22)
        state = hand_state(self.GAINS, self.POWERS, [exact, 8e7])
        nxt, _ = apply_step(state, np.array([1, 2]), cfg22,
                            np.random.default_rng(0))
        assert nxt.remaining_bits[0] == 0.0 and nxt.finish_steps[0] == 1

    def test_waste_penalty(self, cfg22):
        state = hand_state(self.GAINS, self.POWERS, [0.0, 8e7],
                           step_index=3, finish=[1, 0])
        nxt, out = apply_step(state, np.array([1, 2]), cfg22,
                              np.random.default_rng(0))
        assert out.waste_count == 1
        assert out.reward == -4.0, "time penalty plus one waste penalty"
        assert nxt.finish_steps[0] == 1, "finish step must not be rewritten"
        assert nxt.remaining_bits[0] == 0.0

    def test_served_finished_ue_still_interferes(self, cfg22):
        state = hand_state(self.GAINS, self.POWERS, [5e7, 0.0])
        alone = per_ue_rates(state, np.array([1, 0]), cfg22)[0]
        crowded = per_ue_rates(state, np.array([1, 1]), cfg22)[0]
        assert crowded < alone, "wasted allocation must still cost interference"

    def test_all_idle_changes_nothing_but_time(self, cfg22):
        state = hand_state(self.GAINS, self.POWERS, [2e7, 8e7])
        nxt, out = apply_step(state, np.array([0, 0]), cfg22,
                              np.random.default_rng(0))
        assert np.array_equal(nxt.remaining_bits, state.remaining_bits)
        assert np.all(out.per_ue_rate_bps == 0.0)
        assert out.reward == -1.0

    def test_truncation_penalty_and_freeze(self):
        cfg = episode_config("2x2", max_steps=3)
        state = hand_state(self.GAINS, self.POWERS, [1e12, 1e12], step_index=3)
        nxt, out = apply_step(state, np.array([0, 0]), cfg,
                              np.random.default_rng(0))
        assert out.done and out.truncated
        assert out.reward == -101.0, "time penalty plus fail penalty"
        assert nxt.step_index == 3, "terminal state stays at its final step"

    def test_finishing_on_last_step_is_not_truncation(self):
        cfg = episode_config("2x2", max_steps=3)
        state = hand_state(self.GAINS, self.POWERS, [1.0, 1.0], step_index=3)
        nxt, out = apply_step(state, np.array([1, 2]), cfg,
                              np.random.default_rng(0))
        assert out.done and not out.truncated
        assert out.reward == -1.0

    def test_all_finished_state_ends_with_waste_only(self, cfg22):
        state = hand_state(self.GAINS, self.POWERS, [0.0, 0.0],
                           step_index=4, finish=[2, 3])
        nxt, out = apply_step(state, np.array([1, 0]), cfg22,
                              np.random.default_rng(0))
        assert out.done and not out.truncated
        assert out.reward == -3.0, "no backlog, so only the waste penalty"

    def test_beyond_cap_rejected(self):
        cfg = episode_config("2x2", max_steps=3)
        state = hand_state(self.GAINS, self.POWERS, [1e7, 1e7], step_index=4)
        with pytest.raises(InvalidStateError):
            apply_step(state, np.array([0, 0]), cfg, np.random.default_rng(0))


class TestMobilityAndReset:
    def test_mobility_clamped(self, cfg43):
        rng = np.random.default_rng(5)
        pos = np.array([[0.0, 0.0], [1000.0, 1000.0], [500.0, 500.0],
                        [999.0, 1.0]])
        for _ in range(200):
            pos = mobility_update(pos, cfg43, rng)
            assert np.all(pos >= 0.0) and np.all(pos <= cfg43.area_m)

    def test_mobility_bounded_displacement(self, cfg43):
        pos = np.full((4, 2), 500.0)
        moved = apply_mobility(pos, np.array([[150.0, -150.0]] * 4),
                               episode_config("4x3", max_move_m=100.0))
        # apply_mobility only clamps to the area; the draw itself is bounded
        rng = np.random.default_rng(1)
        deltas = mobility_update(pos, cfg43, rng) - pos
        assert np.all(np.abs(deltas) <= cfg43.max_move_m + 1e-12)

    def test_reset_ranges(self, cfg43):
        rng = np.random.default_rng(11)
        state = reset_episode(cfg43, rng)
        assert state.step_index == 1
        assert state.ue_positions.shape == (4, 2)
        assert state.station_positions.shape == (3, 2)
        assert np.all((state.ue_positions >= 0) & (state.ue_positions <= 1000))
        lo, hi = cfg43.data_range_bits
        assert np.all((state.remaining_bits >= lo) & (state.remaining_bits <= hi))
        lo, hi = cfg43.power_range_w
        assert np.all((state.powers_w >= lo) & (state.powers_w <= hi))
        assert np.all(state.finish_steps == 0)

    def test_reset_gains_consistent(self, cfg43):
        state = reset_episode(cfg43, np.random.default_rng(2))
        expected = channel_gains(state.ue_positions, state.station_positions,
                                 cfg43)
        assert np.allclose(state.gains, expected, rtol=1e-14)

    def test_tape_shapes(self, cfg43):
        tape = draw_tape(cfg43, np.random.default_rng(0))
        assert tape.mobility_deltas.shape == (100, 4, 2)
        assert tape.powers.shape == (100, 4)
        assert np.all(np.abs(tape.mobility_deltas) <= cfg43.max_move_m)

    def test_zero_move_config(self):
        cfg = episode_config("2x2", max_move_m=0.0)
        tape = draw_tape(cfg, np.random.default_rng(0))
        assert np.all(tape.mobility_deltas == 0.0)


class TestEpisodeLifecycle:
    def run_episode(self, env, cfg, policy_rng):
        state = env.state
        total, waste_total, rewards = 0.0, 0, []
        prev_remaining = state.remaining_bits.copy()
        truncated = False
        while True:
            a = int(policy_rng.integers(cfg.num_actions))
            state, out = env.step(a)
            rewards.append(out.reward)
            total += out.reward
            waste_total += out.waste_count
            assert np.all(state.remaining_bits <= prev_remaining + 1e-9), \
                "backlogs must never grow"
            prev_remaining = state.remaining_bits.copy()
            assert state.step_index <= cfg.max_steps
            if out.done:
                truncated = out.truncated
                break
        return state, total, waste_total, len(rewards), truncated

    def test_reward_decomposition(self, cfg43):
        env = DownlinkEnv(cfg43)
        policy_rng = np.random.default_rng(99)
        for seed in range(5):
            env.reset(seed=seed)
            state, total, waste, steps, truncated = self.run_episode(
                env, cfg43, policy_rng)
            expected = -1.0 * steps - 3.0 * waste - (100.0 if truncated else 0.0)
            assert total == pytest.approx(expected), \
                f"seed {seed}: reward must decompose into its three terms"

    def test_completion_bookkeeping(self, cfg43):
        env = DownlinkEnv(cfg43)
        policy_rng = np.random.default_rng(4)
        env.reset(seed=123)
        state, _, _, steps, truncated = self.run_episode(env, cfg43, policy_rng)
        if not truncated:
            assert state.all_finished
            assert np.all(state.finish_steps >= 1)
            assert int(state.finish_steps.max()) == state.step_index
        assert steps == state.step_index

    def test_default_profile_completable(self, cfg43):
        # calibration requirement: random allocation finishes nearly always
        env = DownlinkEnv(cfg43)
        policy_rng = np.random.default_rng(7)
        finished = 0
        for seed in range(30):
            env.reset(seed=seed)
            *_, truncated = self.run_episode(env, cfg43, policy_rng)
            finished += not truncated
        assert finished >= 27, f"only {finished}/30 random episodes completed"

    def test_literal_profile_starves(self):
        # published carrier: even greedy single-terminal service moves nothing
        cfg = episode_config("2x2", paper_literal=True)
        env = DownlinkEnv(cfg, seed=0)
        state = env.reset()
        rates = per_ue_rates(state, np.array([1, 0]), cfg)
        assert rates[0] * cfg.step_seconds < 1e3, \
            "THz carrier over km cells cannot deliver meaningful data"

    def test_step_after_done_rejected(self):
        cfg = episode_config("2x2", max_steps=2)
        env = DownlinkEnv(cfg, seed=0)
        env.reset()
        env.step(0)
        env.step(0)  # hits the cap
        with pytest.raises(InvalidStateError):
            env.step(0)

    def test_env_requires_reset(self, cfg22):
        env = DownlinkEnv(cfg22)
        with pytest.raises(InvalidStateError):
            _ = env.state
        with pytest.raises(InvalidStateError):
            env.step(0)


class TestFrozenRandomness:
    def test_same_seed_same_episode(self, cfg43):
        env1, env2 = DownlinkEnv(cfg43), DownlinkEnv(cfg43)
        s1, s2 = env1.reset(seed=42), env2.reset(seed=42)
        assert np.array_equal(s1.ue_positions, s2.ue_positions)
        assert np.array_equal(s1.remaining_bits, s2.remaining_bits)
        assert np.array_equal(env1.tape.mobility_deltas, env2.tape.mobility_deltas)
        assert np.array_equal(env1.tape.powers, env2.tape.powers)

    def test_future_is_action_independent(self, cfg43):
        # different policies must see identical positions and powers
        env1, env2 = DownlinkEnv(cfg43), DownlinkEnv(cfg43)
        env1.reset(seed=17)
        env2.reset(seed=17)
        rng = np.random.default_rng(3)
        for _ in range(10):
            if env1.done or env2.done:
                break
            s1, _ = env1.step(int(rng.integers(cfg43.num_actions)))
            s2, _ = env2.step(int(rng.integers(cfg43.num_actions)))
            if s1.step_index == s2.step_index:
                assert np.array_equal(s1.ue_positions, s2.ue_positions)
                assert np.array_equal(s1.powers_w, s2.powers_w)

    def test_identical_policy_identical_trajectory(self, cfg43):
        env1, env2 = DownlinkEnv(cfg43), DownlinkEnv(cfg43)
        env1.reset(seed=5)
        env2.reset(seed=5)
        for _ in range(8):
            if env1.done:
                break
            s1, o1 = env1.step(7)
            s2, o2 = env2.step(7)
            assert o1.reward == o2.reward
            assert np.array_equal(s1.remaining_bits, s2.remaining_bits)


class TestConfig:
    def test_cardinalities(self):
        cfg = episode_config("4x3")
        assert cfg.num_actions == 4 ** 4 == 256
        assert cfg.state_dim == 4 * 5 == 20
        cfg = episode_config("7x4")
        assert cfg.num_actions == 5 ** 7
        assert cfg.state_dim == 7 * 6

    def test_noise_power(self):
        assert episode_config("4x3").noise_power_w == pytest.approx(1e-6)

    def test_scenario_parsing(self):
        assert parse_scenario("6x3") == (6, 3)
        assert parse_scenario("7x3") == (7, 3)
        assert parse_scenario("5x2") == (5, 2)
        with pytest.raises(InvalidParameterError):
            parse_scenario("huge")

    def test_paper_literal_flag(self):
        assert episode_config("4x3").wavelength_m == 30.0
        assert episode_config("4x3", paper_literal=True).wavelength_m == 3e-4

    def test_overrides_and_unknown_keys(self):
        cfg = episode_config("4x3", max_steps=17)
        assert cfg.max_steps == 17
        with pytest.raises(InvalidParameterError):
            episode_config("4x3", steps_max=17)

    def test_invalid_physics_rejected(self):
        with pytest.raises(InvalidParameterError):
            EpisodeConfig(num_ues=0)
        with pytest.raises(InvalidParameterError):
            EpisodeConfig(bandwidth_hz=-1.0)
        with pytest.raises(InvalidParameterError):
            EpisodeConfig(power_range_w=(2.0, 0.5))

    def test_tuned_agent_rows(self):
        a2c = agent_config("a2c", "4x3")
        assert (a2c.lr, a2c.hidden, a2c.gamma) == (5e-4, (256,), 0.99)
        assert a2c.entropy_coefficient == 1e-3 and a2c.gae_lambda == 0.95
        # on-policy batch per update = workers x segment steps = batch size
        assert a2c.num_workers * a2c.segment_steps == a2c.batch_size == 64
        ppo = agent_config("ppo", "7x4")
        assert (ppo.lr, ppo.hidden) == (5e-5, (512,))
        assert ppo.gae_lambda == 0.93 and ppo.gamma == 0.95
        assert ppo.num_workers == 8
        ddqn = agent_config("ddqn", "6x3")
        assert ddqn.hidden == (256,) and ddqn.head_hidden == (64,)
        dqn = agent_config("dqn", "7x3")
        assert dqn.lr == 5e-4 and dqn.hidden == (128,)

    def test_agent_config_validation(self):
        with pytest.raises(InvalidParameterError):
            AgentConfig(algorithm="sarsa")
        with pytest.raises(InvalidParameterError):
            AgentConfig(gamma=1.5)
        with pytest.raises(InvalidParameterError):
            agent_config("a2c", "4x3", learning_rate=1.0)

    def test_fallback_scenario_uses_small_row(self):
        cfg = agent_config("a2c", "2x2")
        assert cfg.lr == 5e-4 and cfg.hidden == (256,)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
