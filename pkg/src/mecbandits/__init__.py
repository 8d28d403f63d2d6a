"""Non-stationary bandit toolkit for edge-computing offload benchmarks."""

__version__ = "0.1.0"

from .env import (
    PAPER5_SERVERS,
    PRESETS,
    EnvState,
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
from .policies import (
    DiscountedUCB,
    OraclePolicy,
    Policy,
    Sisyphus,
    ThompsonSampling,
    UniformRandom,
    best_arm,
    make_policy,
    memory_weight,
    oracle_select,
    score_update,
)
from .harness import (
    Aggregate,
    PolicySpec,
    RunConfig,
    RunRecord,
    SweepPoint,
    Trajectory,
    aggregate,
    compare,
    normalized_latency,
    normalized_regret,
    replay,
    run_episode,
    simulate_trajectory,
    split_run_seed,
    sweep_alpha,
    sweep_arms,
)
