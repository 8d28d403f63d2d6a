"""Doubly-stochastic edge-computing environment.

Every arm is an edge server whose state fluctuates on two time scales.
Epoch scale: when a server's epoch ends (epoch lengths are geometric
with a per-server mean), the number of connected users and the LOS/NLOS
blockage state of the link are redrawn and then hold for the whole next
epoch. Step scale: the number of connected users actually offloading
work is redrawn every step, which jitters the free compute fraction.
Setting a server's mean epoch length to 1 degenerates its dynamics to
fully independent per-step redraws.

The environment is restless: all servers evolve at every step no matter
which arm a learner plays, and ``env_step`` returns the full per-arm
outcome so a harness can score the realized best arm after the fact.
"""

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ServerConfig:
    """Static per-server parameters (one bandit arm)."""

    psi0: float  # P(an in-range UE is connected), drawn once per epoch
    psi1: float  # P(a connected UE offloads), drawn every step
    w: int       # UEs in communication range
    n_max: int   # maximum concurrent users the server accepts
    lam: float   # mean epoch duration in time-steps
    r: float     # UE-server distance [m]
    p_b: float   # per-step blockage probability
    c: float     # peak computing capacity [Hz]

    def __post_init__(self):
        for name in ("psi0", "psi1", "p_b"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.w < 1:
            raise ValueError(f"w must be >= 1, got {self.w}")
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        if self.lam < 1:
            raise ValueError(f"lam must be >= 1, got {self.lam}")
        if self.r <= 0:
            raise ValueError(f"r must be positive, got {self.r}")
        if self.c <= 0:
            raise ValueError(f"c must be positive, got {self.c}")


@dataclass(frozen=True)
class TaskProfile:
    """Offloaded-task and radio-link parameters shared by all servers.

    Defaults are the standard benchmark constants: a 20 MB task
    (MB = 1e6 bytes, converted to bits on the wire), symmetric 500 MHz
    links, 20/40 dB reference SINR at 1 m, and a 1 s latency budget.
    """

    l_u: float = 20e6        # uplink task size [bytes]
    omega: float = 1.0       # downlink-to-uplink size ratio
    kappa: float = 10.0      # processing intensity [cycles/byte]
    b_u: float = 500e6       # uplink bandwidth [Hz]
    b_d: float = 500e6       # downlink bandwidth [Hz]
    p_u_db: float = 20.0     # uplink reference SINR at 1 m [dB]
    p_d_db: float = 40.0     # downlink reference SINR at 1 m [dB]
    gamma_los: float = 2.0   # path-loss exponent, line of sight
    gamma_nlos: float = 4.0  # path-loss exponent, blocked
    d_max: float = 1.0       # latency requirement [s]
    delta: float = 1.0       # step duration [s]; bookkeeping only

    def __post_init__(self):
        for name in ("l_u", "omega", "kappa", "b_u", "b_d", "d_max", "delta"):
            v = getattr(self, name)
            if v <= 0:
                raise ValueError(f"{name} must be positive, got {v}")
        if self.gamma_los > self.gamma_nlos:
            raise ValueError(
                f"gamma_los must not exceed gamma_nlos, "
                f"got {self.gamma_los} > {self.gamma_nlos}"
            )


# Built-in "paper-5" bank: five server classes sharing w = n_max = 100 and
# psi1 = 0.5. Banks larger than five arms cycle through these classes.
PAPER5_SERVERS = (
    ServerConfig(psi0=0.7, psi1=0.5, w=100, n_max=100, lam=100.0, r=7.0, p_b=0.3, c=5.0e9),
    ServerConfig(psi0=0.6, psi1=0.5, w=100, n_max=100, lam=150.0, r=10.0, p_b=0.4, c=3.3e9),
    ServerConfig(psi0=0.5, psi1=0.5, w=100, n_max=100, lam=100.0, r=12.0, p_b=0.5, c=3.3e9),
    ServerConfig(psi0=0.4, psi1=0.5, w=100, n_max=100, lam=100.0, r=14.0, p_b=0.6, c=3.3e9),
    ServerConfig(psi0=0.3, psi1=0.5, w=100, n_max=100, lam=50.0, r=16.0, p_b=0.7, c=5.0e9),
)

PRESETS = {"paper-5": PAPER5_SERVERS}


def make_server_bank(num_arms, classes=None):
    """Build a bank of ``num_arms`` servers cycling through the class list.

    Arm j (0-based) gets class j mod len(classes); the default classes
    are the five built-in ones, so e.g. arms 5 and 6 replicate the first
    two classes.
    """
    if num_arms < 1:
        raise ValueError(f"num_arms must be >= 1, got {num_arms}")
    classes = PAPER5_SERVERS if classes is None else tuple(classes)
    return [classes[j % len(classes)] for j in range(num_arms)]


def sample_epoch_duration(lam, rng):
    """Draw an epoch length (in steps) with mean ``lam``.

    Geometric on {1, 2, ...} with success probability 1/lam, so lam = 1
    forces length-1 epochs.
    """
    if lam < 1:
        raise ValueError(f"lam must be >= 1, got {lam}")
    return int(rng.geometric(1.0 / lam))


def sample_connected(w, psi0, rng):
    """Number of the ``w`` in-range UEs connected for an epoch: Binomial(w, psi0)."""
    if not 0.0 <= psi0 <= 1.0:
        raise ValueError(f"psi0 must lie in [0, 1], got {psi0}")
    return int(rng.binomial(w, psi0))


def sample_offloaders(v, psi1, rng):
    """Number of the ``v`` connected UEs offloading this step: Binomial(v, psi1)."""
    if not 0.0 <= psi1 <= 1.0:
        raise ValueError(f"psi1 must lie in [0, 1], got {psi1}")
    if v < 0:
        raise ValueError(f"v must be >= 0, got {v}")
    return int(rng.binomial(v, psi1))


def availability(q, n):
    """Fraction of compute left with q of n slots busy: 1 - q/n."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 <= q <= n:
        raise ValueError(f"q must lie in [0, n], got q={q}, n={n}")
    return 1.0 - q / n


def transmission_delay(profile, r, blocked):
    """Uplink plus downlink transfer time [s] at distance ``r``.

    Each direction moves its payload at the Shannon rate
    B * log2(1 + P * r^-gamma), with P the linear reference SINR at 1 m
    and gamma the LOS or NLOS path-loss exponent. Payloads are bytes;
    the wire carries bits.
    """
    if r <= 0:
        raise ValueError(f"r must be positive, got {r}")
    gamma = profile.gamma_nlos if blocked else profile.gamma_los
    total = 0.0
    for bits, bw, p_db in (
        (profile.l_u * 8.0, profile.b_u, profile.p_u_db),
        (profile.omega * profile.l_u * 8.0, profile.b_d, profile.p_d_db),
    ):
        sinr = 10.0 ** (p_db / 10.0) * r ** (-gamma)
        total += bits / (bw * math.log2(1.0 + sinr))
    return total


def computation_delay(profile, c, a):
    """Processing time [s] of the uploaded task at availability ``a``.

    kappa * l_u cycles run on the free share a of capacity c; a saturated
    server (a = 0) yields +inf, which downstream forces a zero reward.
    """
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"a must lie in [0, 1], got {a}")
    if a == 0.0:
        return math.inf
    return profile.kappa * profile.l_u / (c * a)


@dataclass
class StepOutcome:
    """Per-arm outcome of one time-step (arrays indexed by server)."""

    a: np.ndarray        # availability fraction
    blocked: np.ndarray  # True where the link was NLOS
    tau: np.ndarray      # transmission delay [s]
    eta: np.ndarray      # computation delay [s], +inf when saturated
    d: np.ndarray        # total delay [s]
    rho: np.ndarray      # reward: 1.0 where d <= d_max else 0.0


@dataclass
class EnvState:
    """Mutable per-server simulation state.

    Each server owns an independent random stream so its trajectory does
    not depend on how many other servers exist or on what a policy does.
    ``v`` and ``blocked`` hold for the current epoch; the LOS/NLOS
    transmission delays are constants of (config, profile) cached at
    init.
    """

    epoch_remaining: np.ndarray  # steps left in the current epoch
    v: np.ndarray                # connected UEs for the current epoch
    blocked: np.ndarray          # NLOS state for the current epoch
    rngs: list                   # one np.random.Generator per server
    tau_los: np.ndarray
    tau_nlos: np.ndarray


def _begin_epoch(state, i, cfg):
    # Draw order per epoch is fixed: duration, connected count, blockage.
    rng = state.rngs[i]
    state.epoch_remaining[i] = sample_epoch_duration(cfg.lam, rng)
    state.v[i] = sample_connected(cfg.w, cfg.psi0, rng)
    state.blocked[i] = rng.random() < cfg.p_b


def init_env_state(configs, profile, seed=None):
    """Create an EnvState with fresh epochs drawn for every server.

    ``seed`` may be an int or a numpy SeedSequence; one child stream is
    spawned per server.
    """
    if not configs:
        raise ValueError("configs must contain at least one server")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rngs = [np.random.default_rng(child) for child in ss.spawn(len(configs))]
    num = len(configs)
    state = EnvState(
        epoch_remaining=np.zeros(num, dtype=np.int64),
        v=np.zeros(num, dtype=np.int64),
        blocked=np.zeros(num, dtype=bool),
        rngs=rngs,
        tau_los=np.array([transmission_delay(profile, cfg.r, False) for cfg in configs]),
        tau_nlos=np.array([transmission_delay(profile, cfg.r, True) for cfg in configs]),
    )
    for i, cfg in enumerate(configs):
        _begin_epoch(state, i, cfg)
    return state


def env_step(state, configs, profile):
    """Advance every server by one step and return the per-arm outcome.

    When a server's epoch is exhausted, a new epoch (duration, connected
    count, blockage state) is drawn before the step is played out.
    ``configs`` and ``profile`` must be the ones the state was
    initialized with.
    """
    num = len(configs)
    a = np.empty(num)
    blocked = np.empty(num, dtype=bool)
    tau = np.empty(num)
    eta = np.empty(num)
    d = np.empty(num)
    rho = np.empty(num)
    for i, cfg in enumerate(configs):
        if state.epoch_remaining[i] == 0:
            _begin_epoch(state, i, cfg)
        q = sample_offloaders(int(state.v[i]), cfg.psi1, state.rngs[i])
        blk = bool(state.blocked[i])
        a_i = availability(q, cfg.n_max)
        tau_i = state.tau_nlos[i] if blk else state.tau_los[i]
        eta_i = computation_delay(profile, cfg.c, a_i)
        d_i = tau_i + eta_i
        a[i] = a_i
        blocked[i] = blk
        tau[i] = tau_i
        eta[i] = eta_i
        d[i] = d_i
        rho[i] = 1.0 if d_i <= profile.d_max else 0.0
        state.epoch_remaining[i] -= 1
    return StepOutcome(a=a, blocked=blocked, tau=tau, eta=eta, d=d, rho=rho)
