"""Seeded episode runner, regret/latency metrics, and parameter sweeps.

An episode couples one policy to one environment trajectory. The
trajectory is simulated once per run seed and replayed for every policy
under test, so two policies compared at the same seed face bit-identical
environments and any metric gap is attributable to the policies alone.
Run i of a batch uses seed ``base_seed + i``; each run seed is split
into an environment stream (one child per server) and a policy stream.
"""

from dataclasses import dataclass, field

import numpy as np

from .env import TaskProfile, env_step, init_env_state, make_server_bank
from .policies import Sisyphus, make_policy


@dataclass
class PolicySpec:
    """A policy name plus the hyperparameters to build it with."""

    name: str
    params: dict = field(default_factory=dict)

    def build(self, n_arms):
        return make_policy(self.name, n_arms, **self.params)


DEFAULT_COMPARISON = (
    PolicySpec("ssph"),
    PolicySpec("ts"),
    PolicySpec("dts"),
    PolicySpec("dots"),
    PolicySpec("ducb"),
)


@dataclass
class RunConfig:
    """Everything one Monte Carlo batch needs besides the policy list.

    ``servers`` overrides ``num_arms`` when given; otherwise the bank is
    built by cycling the built-in server classes.
    """

    horizon: int = 5000
    num_runs: int = 50
    base_seed: int = 0
    num_arms: int = 5
    servers: list | None = None
    profile: TaskProfile = field(default_factory=TaskProfile)
    latency_cap_s: float = 10.0
    policy: PolicySpec | None = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if self.num_runs < 1:
            raise ValueError(f"num_runs must be >= 1, got {self.num_runs}")
        if self.latency_cap_s <= 0:
            raise ValueError(f"latency_cap_s must be positive, got {self.latency_cap_s}")
        if self.servers is not None:
            self.num_arms = len(self.servers)
        elif self.num_arms < 1:
            raise ValueError(f"num_arms must be >= 1, got {self.num_arms}")

    def resolve_servers(self):
        return list(self.servers) if self.servers is not None else make_server_bank(self.num_arms)


def split_run_seed(seed):
    """Derive the (environment, policy) seed streams of one run."""
    env_ss, policy_ss = np.random.SeedSequence(seed).spawn(2)
    return env_ss, policy_ss


@dataclass
class Trajectory:
    """Counterfactual rollout: outcome of every arm at every step."""

    rho: np.ndarray          # (T, A) realized rewards
    delay: np.ndarray        # (T, A) total delays [s], +inf when saturated
    tau: np.ndarray          # (T, A) transmission delays
    eta: np.ndarray          # (T, A) computation delays
    a: np.ndarray            # (T, A) availability fractions
    blocked: np.ndarray      # (T, A) NLOS flags
    best_reward: np.ndarray  # (T,) max over arms of rho

    @property
    def horizon(self):
        return self.rho.shape[0]

    @property
    def num_arms(self):
        return self.rho.shape[1]


def simulate_trajectory(servers, profile, horizon, seed):
    """Roll the environment forward for every arm over ``horizon`` steps.

    ``seed`` is an int run seed (split the same way run_episode splits
    it) or a SeedSequence used for the environment directly. The result
    does not depend on any policy.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    env_ss = seed if isinstance(seed, np.random.SeedSequence) else split_run_seed(seed)[0]
    state = init_env_state(servers, profile, env_ss)
    num = len(servers)
    rho = np.empty((horizon, num))
    delay = np.empty((horizon, num))
    tau = np.empty((horizon, num))
    eta = np.empty((horizon, num))
    avail = np.empty((horizon, num))
    blocked = np.empty((horizon, num), dtype=bool)
    for t in range(horizon):
        out = env_step(state, servers, profile)
        rho[t] = out.rho
        delay[t] = out.d
        tau[t] = out.tau
        eta[t] = out.eta
        avail[t] = out.a
        blocked[t] = out.blocked
    return Trajectory(rho=rho, delay=delay, tau=tau, eta=eta, a=avail,
                      blocked=blocked, best_reward=rho.max(axis=1))


@dataclass
class RunRecord:
    """Per-step log of one episode; delays are capped for reporting."""

    chosen: np.ndarray       # (T,) played arm
    reward: np.ndarray       # (T,) obtained reward
    best_reward: np.ndarray  # (T,) realized best reward over all arms
    delay_s: np.ndarray      # (T,) chosen-arm delay, capped

    def __len__(self):
        return len(self.chosen)

    def running_regret(self):
        steps = np.arange(1, len(self) + 1, dtype=float)
        return np.cumsum(self.best_reward - self.reward) / steps

    def running_latency(self):
        steps = np.arange(1, len(self) + 1, dtype=float)
        return np.cumsum(self.delay_s) / steps

    @property
    def final_regret(self):
        return float(normalized_regret(self, len(self)))

    @property
    def final_latency(self):
        return float(normalized_latency(self, len(self)))


def normalized_regret(record, upto):
    """Mean best-minus-obtained reward gap over the first ``upto`` steps."""
    if not 1 <= upto <= len(record):
        raise ValueError(f"upto must lie in [1, {len(record)}], got {upto}")
    gap = record.best_reward[:upto] - record.reward[:upto]
    return float(gap.sum() / upto)


def normalized_latency(record, upto):
    """Mean capped chosen-arm delay [s] over the first ``upto`` steps."""
    if not 1 <= upto <= len(record):
        raise ValueError(f"upto must lie in [1, {len(record)}], got {upto}")
    return float(record.delay_s[:upto].sum() / upto)


def replay(policy, trajectory, policy_seed=None, latency_cap_s=10.0):
    """Run one policy against a precomputed trajectory.

    The policy sees only the reward of the arm it plays; the oracle is
    fed the realized per-arm rewards and delays of the current step.
    """
    policy.reset(policy_seed)
    horizon = trajectory.horizon
    rho = trajectory.rho
    delay = trajectory.delay
    chosen = np.empty(horizon, dtype=np.int64)
    reward = np.empty(horizon)
    delay_out = np.empty(horizon)
    needs_outcome = policy.requires_outcome
    for t in range(horizon):
        if needs_outcome:
            arm = policy.select_from_outcome(rho[t], delay[t])
        else:
            arm = policy.select(t)
        r = float(rho[t, arm])
        policy.update(arm, r)
        chosen[t] = arm
        reward[t] = r
        delay_out[t] = min(float(delay[t, arm]), latency_cap_s)
    return RunRecord(chosen=chosen, reward=reward,
                     best_reward=trajectory.best_reward.copy(), delay_s=delay_out)


def run_episode(config, seed):
    """One seeded episode of ``config.policy``: simulate, then replay."""
    if config.policy is None:
        raise ValueError("RunConfig.policy is not set")
    servers = config.resolve_servers()
    trajectory = simulate_trajectory(servers, config.profile, config.horizon, seed)
    _, policy_ss = split_run_seed(seed)
    policy = config.policy.build(len(servers))
    return replay(policy, trajectory, policy_ss, config.latency_cap_s)


def compare(config, policy_specs=None):
    """Run every policy over the same ``num_runs`` trajectories.

    Returns {policy display name: [RunRecord per run]} in spec order.
    The environment is simulated once per run seed and shared, and every
    policy is reset from the same policy stream, so differences between
    policies are not attributable to the draw of the environment.
    """
    specs = list(DEFAULT_COMPARISON if policy_specs is None else policy_specs)
    servers = config.resolve_servers()
    policies = [spec.build(len(servers)) for spec in specs]
    names = [p.name for p in policies]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate policy names in comparison: {names}")
    results = {name: [] for name in names}
    for i in range(config.num_runs):
        seed = config.base_seed + i
        trajectory = simulate_trajectory(servers, config.profile, config.horizon, seed)
        _, policy_ss = split_run_seed(seed)
        for name, policy in zip(names, policies):
            results[name].append(replay(policy, trajectory, policy_ss, config.latency_cap_s))
    return results


@dataclass
class Aggregate:
    """Across-run statistics of the running metrics (population variance)."""

    mean_regret: np.ndarray
    var_regret: np.ndarray
    mean_latency: np.ndarray
    var_latency: np.ndarray

    @property
    def final_regret_mean(self):
        return float(self.mean_regret[-1])

    @property
    def final_regret_std(self):
        return float(np.sqrt(self.var_regret[-1]))

    @property
    def final_latency_mean(self):
        return float(self.mean_latency[-1])

    @property
    def final_latency_std(self):
        return float(np.sqrt(self.var_latency[-1]))


def aggregate(records):
    """Pointwise mean/variance of the running regret and latency curves."""
    if not records:
        raise ValueError("records must be non-empty")
    reg = np.stack([r.running_regret() for r in records])
    lat = np.stack([r.running_latency() for r in records])
    return Aggregate(mean_regret=reg.mean(axis=0), var_regret=reg.var(axis=0),
                     mean_latency=lat.mean(axis=0), var_latency=lat.var(axis=0))


@dataclass
class SweepPoint:
    """Final-regret statistics of one (swept value, policy) cell."""

    value: float
    policy: str
    mean_regret: float
    stdev_regret: float


def sweep_alpha(grid, config, sigma=0.1):
    """Final regret of the retention-score learner per retention rate.

    Each grid point replays the same ``num_runs`` trajectories, so the
    sweep isolates the effect of alpha.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("alpha grid must be non-empty")
    for alpha in grid:
        if not 0.0 <= alpha < 1.0:
            raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    servers = config.resolve_servers()
    finals = np.empty((len(grid), config.num_runs))
    for i in range(config.num_runs):
        seed = config.base_seed + i
        trajectory = simulate_trajectory(servers, config.profile, config.horizon, seed)
        _, policy_ss = split_run_seed(seed)
        for gi, alpha in enumerate(grid):
            policy = Sisyphus(len(servers), alpha=alpha, sigma=sigma)
            record = replay(policy, trajectory, policy_ss, config.latency_cap_s)
            finals[gi, i] = record.final_regret
    return [SweepPoint(value=float(alpha), policy="SSPH",
                       mean_regret=float(finals[gi].mean()),
                       stdev_regret=float(finals[gi].std()))
            for gi, alpha in enumerate(grid)]


def sweep_arms(arm_counts, policy_specs, config):
    """Final regret of every policy at every arm count.

    Banks are rebuilt by the cycling rule at each count; rows come back
    count-major in the given policy order.
    """
    counts = list(arm_counts)
    if not counts:
        raise ValueError("arm_counts must be non-empty")
    for count in counts:
        if count < 1:
            raise ValueError(f"arm counts must be >= 1, got {count}")
    specs = list(DEFAULT_COMPARISON if policy_specs is None else policy_specs)
    points = []
    for count in counts:
        servers = make_server_bank(count)
        policies = [spec.build(count) for spec in specs]
        finals = np.empty((len(policies), config.num_runs))
        for i in range(config.num_runs):
            seed = config.base_seed + i
            trajectory = simulate_trajectory(servers, config.profile, config.horizon, seed)
            _, policy_ss = split_run_seed(seed)
            for pi, policy in enumerate(policies):
                record = replay(policy, trajectory, policy_ss, config.latency_cap_s)
                finals[pi, i] = record.final_regret
        for pi, policy in enumerate(policies):
            points.append(SweepPoint(value=float(count), policy=policy.name,
                                     mean_regret=float(finals[pi].mean()),
                                     stdev_regret=float(finals[pi].std())))
    return points
