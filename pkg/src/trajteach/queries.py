"""Information-gain scoring of candidate preference queries.

A candidate is a pair of trajectories. Each ensemble member assigns the
pair a preference probability; the expected information gain (in bits) of
asking the human is highest when individual members are confident but
disagree with each other, and zero when they all agree exactly. Queries
are selected greedily from a pool of noisy goal-reaching trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envs import Environment, FeatureMap
from .feedback import RankedPair, pair_prob
from .reward_net import RewardEnsemble
from .trajectory import DeformationConfig, Trajectory, sample_alternatives

__all__ = [
    "QueryCandidate",
    "QueryPool",
    "PoolScorer",
    "info_gain",
    "select_query",
    "generate_pool",
]


@dataclass(frozen=True)
class QueryCandidate:
    """Two equal-horizon trajectories to show the teacher."""

    a: Trajectory
    b: Trajectory

    def __post_init__(self):
        if len(self.a) != len(self.b):
            raise ValueError("query trajectories must share the horizon")


@dataclass(frozen=True)
class QueryPool:
    candidates: tuple[QueryCandidate, ...]

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))

    def __len__(self) -> int:
        return len(self.candidates)


def _gain_from_probs(probs: np.ndarray) -> float:
    """Expected information gain in bits given per-member P(a beats b).

    Averages, over both possible answers, each member's surprise relative
    to the ensemble consensus; zero when members agree, capped at log2(m).
    """
    probs = np.asarray(probs, dtype=np.float64)
    m = probs.size
    total = 0.0
    for outcome in (probs, 1.0 - probs):
        denom = outcome.sum()
        if denom <= 0:
            continue  # no member puts mass on this answer; zero contribution
        ratio = np.where(outcome > 0, m * outcome / denom, 1.0)
        total += float(np.sum(outcome * np.log2(ratio)))
    return total / m


def info_gain(ensemble: RewardEnsemble, query: QueryCandidate) -> float:
    """Expected bits gained about the reward by asking this query."""
    probs = np.array(
        [pair_prob(member, RankedPair(query.a, query.b)) for member in ensemble.members]
    )
    return _gain_from_probs(probs)


class PoolScorer:
    """Scores a whole pool at once by batching every candidate state.

    Same math as info_gain candidate-by-candidate (asserted in tests),
    but one forward pass per ensemble member instead of one per pair.
    """

    def __init__(self, pool: QueryPool):
        from .reward_net import _traj_matrix  # import here to avoid a cycle

        self.pool = pool
        self._traj_matrix = _traj_matrix
        self._X = None
        self._bounds = None

    def _ensure_tensors(self, member):
        if self._X is None:
            mats, bounds = [], [0]
            for q in self.pool.candidates:
                for traj in (q.a, q.b):
                    m = self._traj_matrix(member, traj)
                    mats.append(m)
                    bounds.append(bounds[-1] + m.shape[0])
            self._X = np.vstack(mats)
            self._bounds = np.array(bounds)

    def gains(self, ensemble: RewardEnsemble) -> np.ndarray:
        from .reward_net import batch_state_rewards

        self._ensure_tensors(ensemble.members[0])
        n = len(self.pool)
        probs = np.empty((ensemble.m, n))
        for i, member in enumerate(ensemble.members):
            r = batch_state_rewards(member, self._X)
            sums = np.add.reduceat(r, self._bounds[:-1])
            gaps = sums[1::2] - sums[0::2]  # R(b) - R(a) per candidate
            probs[i] = np.exp(-np.logaddexp(0.0, gaps))
        m = ensemble.m
        total = np.zeros(n)
        for outcome in (probs, 1.0 - probs):
            denom = outcome.sum(axis=0)
            safe = np.where(denom > 0, denom, 1.0)
            ratio = np.where(outcome > 0, m * outcome / safe, 1.0)
            total += np.where(denom > 0, np.sum(outcome * np.log2(ratio), axis=0), 0.0)
        return total / m

    def select(self, ensemble: RewardEnsemble) -> int:
        """Index of the highest-gain candidate (lowest index on ties)."""
        if len(self.pool) == 0:
            raise ValueError("query pool is empty")
        return int(np.argmax(self.gains(ensemble)))


def select_query(ensemble: RewardEnsemble, pool: QueryPool) -> QueryCandidate:
    """Pool candidate with the highest information gain; ties to lowest index."""
    if len(pool) == 0:
        raise ValueError("query pool is empty")
    gains = [info_gain(ensemble, q) for q in pool.candidates]
    return pool.candidates[int(np.argmax(gains))]


def generate_pool(
    env: Environment,
    start: np.ndarray,
    size: int,
    H: int,
    rng: np.random.Generator,
    sigma: float | None = None,
    featmap: FeatureMap | None = None,
) -> QueryPool:
    """Candidate queries: two noisy trajectories to a random workspace goal.

    Every candidate draws a goal uniformly in the box, takes the straight
    line from the session start, and deforms it twice independently.
    ``featmap`` (when given) annotates the candidates with features.
    """
    if size < 1:
        raise ValueError("pool size must be >= 1")
    cfg = DeformationConfig(sigma=sigma, preserve_endpoints=True)
    start = np.asarray(start, dtype=np.float64)
    candidates = []
    for _ in range(size):
        goal = env.sample_point(rng)
        line = env.straight_line(start, goal, H)
        a, b = sample_alternatives(line, 2, cfg, rng)
        a = Trajectory(env.clip(a.coords))
        b = Trajectory(env.clip(b.coords))
        if featmap is not None and featmap.n > 0:
            a, b = featmap.annotate(a), featmap.annotate(b)
        candidates.append(QueryCandidate(a, b))
    return QueryPool(tuple(candidates))
