import math

import numpy as np
import pytest
from scipy import stats

from mecbandits.env import (
    PAPER5_SERVERS,
    PRESETS,
    ServerConfig,
    StepOutcome,
    TaskProfile,
    availability,
    computation_delay,
    env_step,
    init_env_state,
    make_server_bank,
    sample_connected,
    sample_epoch_duration,
    sample_offloaders,
    transmission_delay,
)

# Frozen by hand-evaluating the delay formula with the default profile,
# r = 7 m, LOS (gamma = 2): 1.6e8 bits / (5e8 * log2(1 + 100/49))
# + 1.6e8 / (5e8 * log2(1 + 1e4/49)).
TAU_LOS_R7 = 0.24111058535658242


def test_server_config_validation():
    base = dict(psi0=0.5, psi1=0.5, w=10, n_max=10, lam=10.0, r=1.0, p_b=0.1, c=1e9)
    ServerConfig(**base)
    for bad in (dict(psi0=1.5), dict(psi1=-0.1), dict(p_b=2.0), dict(w=0),
                dict(n_max=0), dict(lam=0.5), dict(r=0.0), dict(c=0.0)):
        with pytest.raises(ValueError):
            ServerConfig(**{**base, **bad})


def test_task_profile_validation():
    TaskProfile()
    for bad in (dict(l_u=0.0), dict(kappa=-1.0), dict(b_u=0.0), dict(d_max=0.0),
                dict(gamma_los=5.0, gamma_nlos=2.0)):
        with pytest.raises(ValueError):
            TaskProfile(**bad)


def test_epoch_duration_lam_one_is_always_one():
    rng = np.random.default_rng(0)
    assert all(sample_epoch_duration(1.0, rng) == 1 for _ in range(500))


def test_epoch_duration_rejects_lam_below_one():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        sample_epoch_duration(0.99, rng)


def test_epoch_duration_mean_100():
    rng = np.random.default_rng(1)
    draws = [sample_epoch_duration(100.0, rng) for _ in range(100_000)]
    assert abs(np.mean(draws) - 100.0) < 2.0


def test_epoch_duration_tail_lam_50():
    # Pr{duration > 50} = (1 - 1/50)^50 = 0.36417 for the memoryless draw.
    rng = np.random.default_rng(2)
    draws = np.array([sample_epoch_duration(50.0, rng) for _ in range(100_000)])
    assert abs(np.mean(draws > 50) - 0.36416968008711675) < 0.02


@pytest.mark.parametrize("lam", [50.0, 100.0, 150.0])
def test_epoch_duration_mean_within_two_percent(lam):
    rng = np.random.default_rng(3)
    draws = [sample_epoch_duration(lam, rng) for _ in range(100_000)]
    assert abs(np.mean(draws) - lam) < 0.02 * lam


def test_connected_degenerate_and_mean():
    rng = np.random.default_rng(4)
    assert all(sample_connected(100, 0.0, rng) == 0 for _ in range(100))
    draws = [sample_connected(100, 0.7, rng) for _ in range(100_000)]
    assert abs(np.mean(draws) - 70.0) < 0.5
    assert 0 <= min(draws) and max(draws) <= 100


def test_connected_pmf_point():
    # Pr{v = 5} for Binomial(10, 0.5) is C(10,5)/2^10 = 0.24609375.
    rng = np.random.default_rng(5)
    draws = np.array([sample_connected(10, 0.5, rng) for _ in range(100_000)])
    assert abs(np.mean(draws == 5) - 0.24609375) < 0.01
    assert np.isclose(stats.binom.pmf(5, 10, 0.5), 0.24609375)


def test_offloaders_empty_mean_and_pmf():
    rng = np.random.default_rng(6)
    assert all(sample_offloaders(0, 0.7, rng) == 0 for _ in range(100))
    draws = [sample_offloaders(100, 0.5, rng) for _ in range(100_000)]
    assert abs(np.mean(draws) - 50.0) < 0.5
    zero = np.array([sample_offloaders(4, 0.25, rng) for _ in range(100_000)])
    assert abs(np.mean(zero == 0) - 0.31640625) < 0.01
    assert np.isclose(stats.binom.pmf(0, 4, 0.25), 0.31640625)


def test_offloaders_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(ValueError):
        sample_offloaders(-1, 0.5, rng)
    with pytest.raises(ValueError):
        sample_offloaders(5, 1.5, rng)


def test_availability_exact_values_and_errors():
    assert availability(0, 100) == 1.0
    assert availability(100, 100) == 0.0
    assert availability(50, 100) == 0.5
    with pytest.raises(ValueError):
        availability(101, 100)
    with pytest.raises(ValueError):
        availability(-1, 100)
    with pytest.raises(ValueError):
        availability(0, 0)


def test_transmission_delay_regression_constant():
    profile = TaskProfile()
    los = transmission_delay(profile, 7.0, blocked=False)
    assert los == pytest.approx(TAU_LOS_R7, rel=1e-12)


def test_transmission_delay_blocked_is_larger():
    profile = TaskProfile()
    assert transmission_delay(profile, 7.0, True) > transmission_delay(profile, 7.0, False)


def test_transmission_delay_linear_in_payload():
    small = TaskProfile(l_u=1e6)
    large = TaskProfile(l_u=2e6)
    r = 9.0
    assert transmission_delay(large, r, False) == pytest.approx(
        2.0 * transmission_delay(small, r, False), rel=1e-12)


def test_transmission_delay_rejects_nonpositive_distance():
    with pytest.raises(ValueError):
        transmission_delay(TaskProfile(), 0.0, False)


def test_transmission_delay_monotone_in_distance():
    profile = TaskProfile()
    delays = [transmission_delay(profile, r, False) for r in (1.0, 2.0, 7.0, 16.0)]
    assert all(d1 < d2 for d1, d2 in zip(delays, delays[1:]))


def test_computation_delay_cases():
    profile = TaskProfile(l_u=2e7, kappa=10.0)
    assert computation_delay(profile, 5e9, 1.0) == pytest.approx(0.04, rel=1e-12)
    assert computation_delay(profile, 5e9, 0.0) == math.inf
    assert computation_delay(profile, 5e9, 0.25) == pytest.approx(
        2.0 * computation_delay(profile, 5e9, 0.5), rel=1e-12)
    assert computation_delay(profile, 10e9, 0.5) == pytest.approx(
        0.5 * computation_delay(profile, 5e9, 0.5), rel=1e-12)
    with pytest.raises(ValueError):
        computation_delay(profile, 0.0, 0.5)
    with pytest.raises(ValueError):
        computation_delay(profile, 5e9, 1.5)


def test_delay_monotone_in_kappa():
    a, c = 0.7, 3.3e9
    etas = [computation_delay(TaskProfile(kappa=k), c, a) for k in (1.0, 5.0, 10.0)]
    assert etas[0] < etas[1] < etas[2]


def _idle_server(p_b=0.0):
    return ServerConfig(psi0=0.5, psi1=0.0, w=10, n_max=10, lam=20.0,
                        r=2.0, p_b=p_b, c=5e9)


def test_env_step_unloaded_unblocked_always_rewards():
    profile = TaskProfile(l_u=1e3)
    configs = [_idle_server()]
    state = init_env_state(configs, profile, seed=0)
    for _ in range(200):
        out = env_step(state, configs, profile)
        assert out.rho[0] == 1.0
        assert out.a[0] == 1.0
        assert not out.blocked[0]


def test_env_step_default_bank_rewards_are_nondegenerate():
    profile = TaskProfile()
    configs = make_server_bank(5)
    state = init_env_state(configs, profile, seed=11)
    rewards = np.array([env_step(state, configs, profile).rho for _ in range(3000)])
    means = rewards.mean(axis=0)
    assert np.all(means > 0.0) and np.all(means < 1.0)
    assert len(set(np.round(means, 2))) > 1


def test_env_step_epoch_boundary_bookkeeping():
    profile = TaskProfile()
    configs = [_idle_server()]
    state = init_env_state(configs, profile, seed=3)
    state.epoch_remaining[0] = 1
    env_step(state, configs, profile)
    assert state.epoch_remaining[0] == 0
    env_step(state, configs, profile)
    # the second call opened a fresh epoch and consumed its first step
    assert state.epoch_remaining[0] >= 0


def test_connected_count_constant_within_epoch():
    profile = TaskProfile()
    configs = [ServerConfig(psi0=0.5, psi1=0.5, w=1000, n_max=1000, lam=1e9,
                            r=2.0, p_b=0.5, c=5e9)]
    state = init_env_state(configs, profile, seed=4)
    v0 = int(state.v[0])
    blocked0 = bool(state.blocked[0])
    for _ in range(200):
        env_step(state, configs, profile)
        assert int(state.v[0]) == v0
        assert bool(state.blocked[0]) == blocked0


def test_connected_count_redrawn_every_step_when_lam_is_one():
    profile = TaskProfile()
    configs = [ServerConfig(psi0=0.5, psi1=0.5, w=1000, n_max=1000, lam=1.0,
                            r=2.0, p_b=0.5, c=5e9)]
    state = init_env_state(configs, profile, seed=5)
    seen_v = {int(state.v[0])}
    blocked = []
    for _ in range(500):
        out = env_step(state, configs, profile)
        seen_v.add(int(state.v[0]))
        blocked.append(bool(out.blocked[0]))
    assert len(seen_v) > 5
    assert abs(np.mean(blocked) - 0.5) < 0.1


def test_load_chain_and_availability_identity():
    profile = TaskProfile()
    configs = make_server_bank(5)
    state = init_env_state(configs, profile, seed=6)
    for _ in range(500):
        out = env_step(state, configs, profile)
        for i, cfg in enumerate(configs):
            q = round((1.0 - out.a[i]) * cfg.n_max)
            assert 0 <= q <= state.v[i] <= cfg.w
            assert out.a[i] == 1.0 - q / cfg.n_max


def test_env_step_outcome_assembly():
    profile = TaskProfile()
    configs = make_server_bank(3)
    state = init_env_state(configs, profile, seed=7)
    for _ in range(200):
        out = env_step(state, configs, profile)
        finite = np.isfinite(out.eta)
        assert np.all(out.d[finite] == out.tau[finite] + out.eta[finite])
        assert np.all((out.rho == 1.0) == (out.d <= profile.d_max))
        assert np.all((out.a >= 0.0) & (out.a <= 1.0))


def test_env_trajectory_is_seed_reproducible():
    profile = TaskProfile()
    configs = make_server_bank(5)
    outs = []
    for _ in range(2):
        state = init_env_state(configs, profile, seed=42)
        outs.append([env_step(state, configs, profile) for _ in range(300)])
    for a, b in zip(*outs):
        assert np.array_equal(a.rho, b.rho)
        assert np.array_equal(a.d, b.d)
        assert np.array_equal(a.a, b.a)
        assert np.array_equal(a.blocked, b.blocked)


def test_server_streams_do_not_depend_on_bank_size():
    # arm 0 sees the same draws whether it is alone or one of five
    profile = TaskProfile()
    small = make_server_bank(1)
    large = make_server_bank(5)
    s1 = init_env_state(small, profile, seed=9)
    s5 = init_env_state(large, profile, seed=9)
    for _ in range(200):
        o1 = env_step(s1, small, profile)
        o5 = env_step(s5, large, profile)
        assert o1.rho[0] == o5.rho[0]
        assert o1.d[0] == o5.d[0]


def test_make_server_bank_cycles_classes():
    assert make_server_bank(5) == list(PAPER5_SERVERS)
    bank7 = make_server_bank(7)
    assert bank7[5] == PAPER5_SERVERS[0]
    assert bank7[6] == PAPER5_SERVERS[1]
    assert make_server_bank(1) == [PAPER5_SERVERS[0]]
    with pytest.raises(ValueError):
        make_server_bank(0)


def test_paper5_preset_registered():
    assert PRESETS["paper-5"] == PAPER5_SERVERS
    assert len(PAPER5_SERVERS) == 5
    assert [cfg.psi0 for cfg in PAPER5_SERVERS] == [0.7, 0.6, 0.5, 0.4, 0.3]
    assert [cfg.p_b for cfg in PAPER5_SERVERS] == [0.3, 0.4, 0.5, 0.6, 0.7]


def test_step_outcome_is_plain_data():
    out = StepOutcome(a=np.array([1.0]), blocked=np.array([False]),
                      tau=np.array([0.1]), eta=np.array([0.2]),
                      d=np.array([0.3]), rho=np.array([1.0]))
    assert out.d[0] == pytest.approx(0.3)
