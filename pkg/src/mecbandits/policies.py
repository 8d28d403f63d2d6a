"""Bandit policies: the retention-score learner and its baselines.

All policies share one interface: ``reset(seed)``, ``select(t) -> arm``,
``update(arm, reward)``. A policy only ever observes the reward of the
arm it played. The oracle is the one exception: it reads the realized
per-arm outcome of the current step and defines the zero-regret line.
"""

import numpy as np


def score_update(mu_prev, reward, k, alpha):
    """Score of an arm after its k-th play.

    mu(k) = (1 - alpha^(k-1)) / (2 - alpha - alpha^k) * mu(k-1)
          + (1 - alpha)       / (2 - alpha - alpha^k) * reward

    The retention rate alpha in [0, 1) sets how slowly older rewards
    fade; the first play lands on reward / 2 for every alpha. With
    rewards in [0, 1] the score stays in [0, 1] because the two
    coefficients never sum past one.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    # Writing the denominator as (1-a) + (1-a^k) keeps the first-play
    # coefficient at exactly one half in floating point.
    denom = (1.0 - alpha) + (1.0 - alpha ** k)
    a_k = (1.0 - alpha ** (k - 1)) / denom
    b_k = (1.0 - alpha) / denom
    return a_k * mu_prev + b_k * reward


def memory_weight(k, m, alpha):
    """Effective weight of the m-th reward inside the score after k plays.

    phi(k, m) = (1 - alpha) / (2 - alpha - alpha^m)
              * prod_{j=m+1..k} (1 - alpha^(j-1)) / (2 - alpha - alpha^j)

    Unrolling the score recursion gives the score as
    sum_m phi(k, m) * reward(m); this closed form is for analysis and
    testing, not the per-step update path.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    if m < 1 or m > k:
        raise ValueError(f"m must lie in [1, k], got m={m}, k={k}")
    weight = (1.0 - alpha) / ((1.0 - alpha) + (1.0 - alpha ** m))
    for j in range(m + 1, k + 1):
        weight *= (1.0 - alpha ** (j - 1)) / ((1.0 - alpha) + (1.0 - alpha ** j))
    return weight


def best_arm(rewards, delays):
    """Arm with the highest reward; ties broken by lower delay, then lower index."""
    rewards = np.asarray(rewards)
    delays = np.asarray(delays)
    candidates = np.flatnonzero(rewards == rewards.max())
    return int(candidates[np.argmin(delays[candidates])])


def oracle_select(outcome):
    """Best arm of a full per-arm step outcome (max reward, min-delay tie-break)."""
    return best_arm(outcome.rho, outcome.d)


class Policy:
    """Base class fixing the select/update/reset contract."""

    name = "policy"
    requires_outcome = False

    def __init__(self, n_arms, seed=None):
        if n_arms < 1:
            raise ValueError(f"n_arms must be >= 1, got {n_arms}")
        self.n_arms = n_arms
        self.reset(seed)

    def reset(self, seed=None):
        """Restore the initial state; equal seeds reproduce runs bit-exactly."""
        self.rng = np.random.default_rng(seed)

    def select(self, t):
        raise NotImplementedError

    def update(self, arm, reward):
        raise NotImplementedError

    def _check_feedback(self, arm, reward):
        if not 0 <= arm < self.n_arms:
            raise ValueError(f"arm index {arm} out of range for {self.n_arms} arms")
        if not 0.0 <= reward <= 1.0:
            raise ValueError(f"reward must lie in [0, 1], got {reward}")


class Sisyphus(Policy):
    """Retention-score learner with Gaussian-perturbed greedy selection.

    Each arm keeps a score, a weighted average of its own past rewards in
    which old rewards fade at a rate set by ``alpha`` (0 forgets fastest).
    Selection draws theta_i ~ Normal(score_i, sigma^2) for every arm and
    plays the argmax, so near-tied arms keep competing instead of the
    current leader being locked in. Arms never played track the mean
    score of the played ones, which keeps them in the race too.
    """

    name = "SSPH"

    def __init__(self, n_arms, alpha=0.6, sigma=0.1, seed=None):
        if not 0.0 <= alpha < 1.0:
            raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
        if sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        self.alpha = alpha
        self.sigma = sigma
        super().__init__(n_arms, seed)

    def reset(self, seed=None):
        super().reset(seed)
        self.mu = np.zeros(self.n_arms)
        self.k = np.zeros(self.n_arms, dtype=np.int64)

    def select(self, t=None):
        theta = self.rng.normal(self.mu, self.sigma)
        return int(np.argmax(theta))

    def update(self, arm, reward):
        self._check_feedback(arm, reward)
        self.k[arm] += 1
        self.mu[arm] = score_update(self.mu[arm], reward, int(self.k[arm]), self.alpha)
        never_played = self.k == 0
        if never_played.any():
            self.mu[never_played] = self.mu[~never_played].mean()


class ThompsonSampling(Policy):
    """Beta-posterior sampling over binary rewards.

    ``discount`` < 1 multiplies every arm's success/failure mass by the
    discount on each update before crediting the played arm, so stale
    evidence decays geometrically; ``discount`` = 1 is the classical
    sampler. The optimistic variant never samples below the posterior
    mean.
    """

    def __init__(self, n_arms, discount=1.0, optimistic=False, name=None, seed=None):
        if not 0.0 < discount <= 1.0:
            raise ValueError(f"discount must lie in (0, 1], got {discount}")
        self.discount = discount
        self.optimistic = optimistic
        if name is None:
            if discount == 1.0 and not optimistic:
                name = "TS"
            else:
                name = "dOTS" if optimistic else "dTS"
        self.name = name
        super().__init__(n_arms, seed)

    def reset(self, seed=None):
        super().reset(seed)
        self.s = np.zeros(self.n_arms)
        self.f = np.zeros(self.n_arms)

    def select(self, t=None):
        theta = self.rng.beta(self.s + 1.0, self.f + 1.0)
        if self.optimistic:
            theta = np.maximum(theta, (self.s + 1.0) / (self.s + self.f + 2.0))
        return int(np.argmax(theta))

    def update(self, arm, reward):
        self._check_feedback(arm, reward)
        self.s *= self.discount
        self.f *= self.discount
        self.s[arm] += reward
        self.f[arm] += 1.0 - reward


class DiscountedUCB(Policy):
    """UCB index over geometrically discounted reward sums and play counts.

    Every update decays all arms' discounted statistics by ``discount``
    and credits the played arm with (reward, 1). The index is the
    discounted mean plus 2 * b * sqrt(xi * log(n) / N_i), n being the
    total discounted count; arms whose discounted count is zero are
    played first, lowest index first. ``discount`` = 1 gives plain
    undiscounted UCB sums.
    """

    name = "D-UCB"

    def __init__(self, n_arms, discount=0.5, xi=0.5, b=1.0, seed=None):
        if not 0.0 < discount <= 1.0:
            raise ValueError(f"discount must lie in (0, 1], got {discount}")
        if xi <= 0.0:
            raise ValueError(f"xi must be positive, got {xi}")
        if b <= 0.0:
            raise ValueError(f"b must be positive, got {b}")
        self.discount = discount
        self.xi = xi
        self.b = b
        super().__init__(n_arms, seed)

    def reset(self, seed=None):
        super().reset(seed)
        self.s = np.zeros(self.n_arms)
        self.n = np.zeros(self.n_arms)

    def select(self, t=None):
        unplayed = self.n == 0.0
        if unplayed.any():
            return int(np.argmax(unplayed))
        total = self.n.sum()
        index = self.s / self.n + 2.0 * self.b * np.sqrt(self.xi * np.log(total) / self.n)
        return int(np.argmax(index))

    def update(self, arm, reward):
        self._check_feedback(arm, reward)
        self.s *= self.discount
        self.n *= self.discount
        self.s[arm] += reward
        self.n[arm] += 1.0


class UniformRandom(Policy):
    """Plays arms uniformly at random; the no-learning reference."""

    name = "random"

    def select(self, t=None):
        return int(self.rng.integers(self.n_arms))

    def update(self, arm, reward):
        self._check_feedback(arm, reward)


class OraclePolicy(Policy):
    """Plays the realized best arm each step; defines zero regret.

    Unlike the learners it must be fed the full per-arm outcome through
    ``select_from_outcome``; it keeps no state.
    """

    name = "oracle"
    requires_outcome = True

    def select(self, t=None):
        raise RuntimeError("oracle selection needs the per-arm outcome; "
                           "use select_from_outcome")

    def select_from_outcome(self, rewards, delays):
        return best_arm(rewards, delays)

    def update(self, arm, reward):
        self._check_feedback(arm, reward)


POLICY_NAMES = ("ssph", "ts", "dts", "dots", "ducb", "oracle", "random")


def make_policy(name, n_arms, *, alpha=0.6, sigma=0.1, dts_discount=0.8,
                dots_discount=0.7, ducb_discount=0.5, ducb_xi=0.5, seed=None):
    """Build a policy from its short name; unused hyperparameters are ignored."""
    key = name.lower()
    if key == "ssph":
        return Sisyphus(n_arms, alpha=alpha, sigma=sigma, seed=seed)
    if key == "ts":
        return ThompsonSampling(n_arms, seed=seed)
    if key == "dts":
        return ThompsonSampling(n_arms, discount=dts_discount, name="dTS", seed=seed)
    if key == "dots":
        return ThompsonSampling(n_arms, discount=dots_discount, optimistic=True,
                                name="dOTS", seed=seed)
    if key == "ducb":
        return DiscountedUCB(n_arms, discount=ducb_discount, xi=ducb_xi, seed=seed)
    if key == "oracle":
        return OraclePolicy(n_arms, seed=seed)
    if key == "random":
        return UniformRandom(n_arms, seed=seed)
    raise ValueError(f"unknown policy '{name}'")
