"""Feedback buffers, ranking losses, and ensemble training.

All three feedback modalities reduce to ranked trajectory pairs:

* a demonstration outranks its own smooth deformations,
* a correction snippet outranks both the trajectory segment it replaced
  and deformations of itself,
* a preference ranking outranks pairwise.

The flattened pair buffer trains every ensemble member with the same
cross-entropy objective: -log of the softmax preference probability,
computed in log-space (softplus of the reward gap) so saturated pairs
stay finite. Minimizing the buffer loss is the Monte-Carlo version of
summing the per-modality losses into one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .reward_net import (
    NetParams,
    RewardEnsemble,
    _backward_raw,
    _forward,
    _forward_raw,
    _traj_matrix,
    init_net,
    traj_reward,
)
from .trajectory import (
    DeformationConfig,
    Trajectory,
    Window,
    sample_alternatives,
    slice_window,
)

__all__ = [
    "Demonstration",
    "Correction",
    "PreferenceQuery",
    "FeedbackStore",
    "RankedPair",
    "TrainConfig",
    "TrainingError",
    "pair_prob",
    "pair_loss",
    "unified_loss",
    "build_rankings_buffer",
    "train_ensemble",
]


@dataclass(frozen=True)
class Demonstration:
    """A full-horizon trajectory supplied by the teacher."""

    traj: Trajectory


@dataclass(frozen=True)
class Correction:
    """The robot's trajectory plus a human replacement for one window."""

    robot_traj: Trajectory
    window: Window
    snippet: Trajectory

    def __post_init__(self):
        self.window.validate_for(self.robot_traj)
        if len(self.snippet) != self.window.length:
            raise ValueError(
                f"snippet length {len(self.snippet)} != window length {self.window.length}"
            )

    def replaced_slice(self) -> Trajectory:
        return slice_window(self.robot_traj, self.window)


@dataclass(frozen=True)
class PreferenceQuery:
    """Trajectories ranked best-first, k >= 2, equal horizons."""

    ranking: tuple[Trajectory, ...]

    def __post_init__(self):
        ranking = tuple(self.ranking)
        if len(ranking) < 2:
            raise ValueError("a preference needs at least two trajectories")
        if len({len(t) for t in ranking}) != 1:
            raise ValueError("ranked trajectories must share the horizon")
        object.__setattr__(self, "ranking", ranking)


@dataclass
class FeedbackStore:
    """The three feedback buffers of one teaching session."""

    demos: list[Demonstration] = field(default_factory=list)
    corrections: list[Correction] = field(default_factory=list)
    prefs: list[PreferenceQuery] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.demos) + len(self.corrections) + len(self.prefs)

    def to_json_dict(self) -> dict:
        return {
            "demos": [d.traj.to_json_dict() for d in self.demos],
            "corrections": [
                {
                    "robot": c.robot_traj.to_json_dict(),
                    "window": [c.window.start, c.window.end],
                    "snippet": c.snippet.to_json_dict(),
                }
                for c in self.corrections
            ],
            "prefs": [
                [t.to_json_dict() for t in q.ranking] for q in self.prefs
            ],
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "FeedbackStore":
        return cls(
            demos=[Demonstration(Trajectory.from_json_dict(d)) for d in obj["demos"]],
            corrections=[
                Correction(
                    robot_traj=Trajectory.from_json_dict(c["robot"]),
                    window=Window(*c["window"]),
                    snippet=Trajectory.from_json_dict(c["snippet"]),
                )
                for c in obj["corrections"]
            ],
            prefs=[
                PreferenceQuery(tuple(Trajectory.from_json_dict(t) for t in q))
                for q in obj["prefs"]
            ],
        )


@dataclass(frozen=True)
class RankedPair:
    """One (winner, loser) comparison over equal-length trajectories."""

    winner: Trajectory
    loser: Trajectory

    def __post_init__(self):
        if len(self.winner) != len(self.loser):
            raise ValueError(
                f"compared trajectories must have equal length, "
                f"got {len(self.winner)} and {len(self.loser)}"
            )


@dataclass(frozen=True)
class TrainConfig:
    """Sampling counts and optimization knobs for one retraining run."""

    n_demo_alts: int = 10
    n_corr_alts: int = 10
    n_pref_pairs: int = 10
    epochs: int = 200
    batch_size: int = 32
    sigma: float | None = None
    warm_start: bool = False
    seed: int = 0

    def __post_init__(self):
        if min(self.n_demo_alts, self.n_corr_alts, self.n_pref_pairs) < 1:
            raise ValueError("alternative counts must be >= 1")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch size must be >= 1")


class TrainingError(RuntimeError):
    """Training diverged; carries the offending Adam step index."""

    def __init__(self, step: int, message: str):
        super().__init__(f"step {step}: {message}")
        self.step = step


def _reward_gap(theta: NetParams, pair: RankedPair) -> float:
    return traj_reward(theta, pair.loser) - traj_reward(theta, pair.winner)


def pair_prob(theta: NetParams, pair: RankedPair) -> float:
    """Softmax probability that the winner outranks the loser under theta."""
    return float(np.exp(-np.logaddexp(0.0, _reward_gap(theta, pair))))


def pair_loss(theta: NetParams, pair: RankedPair) -> float:
    """Cross entropy of one ranked pair: softplus of the reward gap."""
    return float(np.logaddexp(0.0, _reward_gap(theta, pair)))


def unified_loss(theta: NetParams, buffer) -> float:
    """Mean ranking loss over the buffer (every modality reduced to pairs)."""
    buffer = list(buffer)
    if not buffer:
        raise ValueError("rankings buffer is empty")
    return float(np.mean([pair_loss(theta, p) for p in buffer]))


def build_rankings_buffer(
    store: FeedbackStore,
    cfg: TrainConfig,
    rng: np.random.Generator,
    annotate=None,
) -> list[RankedPair]:
    """Flatten the feedback store into ranked pairs with fresh deformations.

    ``annotate`` recomputes features on newly deformed trajectories (they
    come back coordinates-only); pass the environment's annotator whenever
    the reward nets consume features.
    """
    deform_cfg = DeformationConfig(sigma=cfg.sigma, preserve_endpoints=True)

    def prep(traj: Trajectory) -> Trajectory:
        if annotate is not None and traj.features is None:
            return annotate(traj)
        return traj

    pairs: list[RankedPair] = []
    for demo in store.demos:
        winner = prep(demo.traj)
        for alt in sample_alternatives(demo.traj, cfg.n_demo_alts, deform_cfg, rng):
            pairs.append(RankedPair(winner, prep(alt)))
    for corr in store.corrections:
        snippet = prep(corr.snippet)
        pairs.append(RankedPair(snippet, prep(corr.replaced_slice())))
        if cfg.n_corr_alts > 1:
            alts = sample_alternatives(
                corr.snippet, cfg.n_corr_alts - 1, deform_cfg, rng
            )
            pairs.extend(RankedPair(snippet, prep(alt)) for alt in alts)
    for query in store.prefs:
        ranking = [prep(t) for t in query.ranking]
        ordered = [
            (i, j)
            for i in range(len(ranking))
            for j in range(i + 1, len(ranking))
        ]
        picks = rng.integers(0, len(ordered), size=cfg.n_pref_pairs)
        for k in picks:
            i, j = ordered[k]
            pairs.append(RankedPair(ranking[i], ranking[j]))
    return pairs


class _BufferTensors:
    """Buffer states stacked once so minibatch steps reuse the same arrays."""

    def __init__(self, theta: NetParams, buffer: list[RankedPair]):
        mats, bounds = [], [0]
        for pair in buffer:
            for traj in (pair.winner, pair.loser):
                m = _traj_matrix(theta, traj)
                mats.append(m)
                bounds.append(bounds[-1] + m.shape[0])
        self.X = np.vstack(mats)
        self.bounds = np.array(bounds)
        self.n_pairs = len(buffer)

    def gather(self, pair_idx: np.ndarray):
        segs = np.empty(2 * pair_idx.size, dtype=np.int64)
        segs[0::2] = 2 * pair_idx
        segs[1::2] = 2 * pair_idx + 1
        rows = np.concatenate(
            [np.arange(self.bounds[s], self.bounds[s + 1]) for s in segs]
        )
        lengths = self.bounds[segs + 1] - self.bounds[segs]
        starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
        return self.X[rows], starts, lengths

    def mean_loss(self, theta: NetParams) -> float:
        r, _ = _forward(theta, self.X)
        sums = np.add.reduceat(r, self.bounds[:-1])
        gaps = sums[1::2] - sums[0::2]  # loser minus winner
        return float(np.mean(np.logaddexp(0.0, gaps)))


def _train_member(
    theta: NetParams,
    tensors: _BufferTensors,
    cfg: TrainConfig,
    seed: int,
) -> NetParams:
    # hot loop: works on raw arrays (no per-step dataclass validation) with
    # Adam inlined; identical math to adam_step, checked in tests
    rng = np.random.default_rng(seed)
    if not cfg.warm_start:
        theta = init_net(theta.d_aug, theta.width, rng, theta.alpha_leak)
    initial_loss = tensors.mean_loss(theta)
    initial = theta
    alpha = theta.alpha_leak
    params = [np.array(a) for a in theta.arrays()]
    m = [np.zeros_like(a) for a in params]
    v = [np.zeros_like(a) for a in params]
    lr, beta1, beta2, eps = 0.001, 0.9, 0.999, 1e-8
    n = tensors.n_pairs
    step = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for at in range(0, n, cfg.batch_size):
            batch = order[at : at + cfg.batch_size]
            X, starts, lengths = tensors.gather(batch)
            r, cache = _forward_raw(params, alpha, X)
            sums = np.add.reduceat(r, starts)
            gaps = sums[1::2] - sums[0::2]
            losses = np.logaddexp(0.0, gaps)
            if not np.all(np.isfinite(losses)):
                raise TrainingError(step, "non-finite ranking loss")
            sig = 1.0 / (1.0 + np.exp(-gaps))  # dloss/dgap
            traj_adj = np.empty(2 * batch.size)
            traj_adj[0::2] = -sig / batch.size
            traj_adj[1::2] = sig / batch.size
            per_state = np.repeat(traj_adj, lengths)
            grads, _ = _backward_raw(params, alpha, cache, per_state)
            step += 1
            bc1 = 1.0 - beta1**step
            bc2 = 1.0 - beta2**step
            for k, g in enumerate(grads):
                m[k] = beta1 * m[k] + (1.0 - beta1) * g
                v[k] = beta2 * v[k] + (1.0 - beta2) * (g * g)
                params[k] -= lr * (m[k] / bc1) / (np.sqrt(v[k] / bc2) + eps)
    theta = theta.replace_arrays(params)
    final_loss = tensors.mean_loss(theta)
    if not np.isfinite(final_loss):
        raise TrainingError(step, "non-finite loss after training")
    # training must never leave the member worse than where it started
    return theta if final_loss <= initial_loss else initial


def train_ensemble(
    ensemble: RewardEnsemble,
    store: FeedbackStore,
    cfg: TrainConfig,
    rng: np.random.Generator | None = None,
    annotate=None,
) -> RewardEnsemble:
    """Retrain every member on the flattened feedback buffer.

    Members train independently from distinct derived seeds; by default
    each one restarts from a fresh initialization (cold restart), matching
    per-interaction retraining with a fixed seed schedule.
    """
    if len(store) == 0:
        raise ValueError("feedback store is empty")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    buffer = build_rankings_buffer(store, cfg, rng, annotate)
    member_seeds = rng.integers(0, 2**63, size=ensemble.m)
    tensors = _BufferTensors(ensemble.members[0], buffer)
    members = [
        _train_member(member, tensors, cfg, int(seed))
        for member, seed in zip(ensemble.members, member_seeds)
    ]
    return RewardEnsemble(tuple(members))
