"""Simplified feature-based baselines for the comparison studies.

Both baselines assume the reward is linear in a *known* feature subset
and cannot respond to anything outside it.

* Coactive: perceptron-style weight updates from (human input - robot
  trajectory) feature differences, one update per demonstration or
  correction.
* Linear Bayes: a particle filter over unit-sphere weight vectors,
  reweighted per preference answer with the softmax likelihood; the
  trajectory comes from the posterior-mean weights.
"""

from __future__ import annotations

import time
import warnings

import numpy as np

from .envs import Environment, FeatureMap
from .optimize import LinearStateReward, default_seeds, optimize
from .queries import QueryCandidate
from .teachers import (
    oracle_optimum,
    regret,
    teacher_correction,
    teacher_demo,
    teacher_preference,
)
from .trajectory import Trajectory, splice_window

__all__ = [
    "coactive_update",
    "bayes_reweight",
    "particle_entropy",
    "run_baseline_session",
]


def coactive_update(
    theta_hat: np.ndarray,
    featmap: FeatureMap,
    human_traj: Trajectory,
    robot_traj: Trajectory,
    rate: float = 1.0,
) -> np.ndarray:
    """Shift weights toward features the human's input had more of."""
    diff = featmap.values(human_traj.coords).sum(axis=0) - featmap.values(
        robot_traj.coords
    ).sum(axis=0)
    return theta_hat + rate * diff


def bayes_reweight(
    particles: np.ndarray,
    weights: np.ndarray,
    featmap: FeatureMap,
    winner: Trajectory,
    loser: Trajectory,
) -> np.ndarray:
    """Multiply particle weights by the softmax preference likelihood."""
    delta = featmap.values(winner.coords).sum(axis=0) - featmap.values(
        loser.coords
    ).sum(axis=0)
    logits = particles @ delta
    with np.errstate(over="ignore"):  # exp overflow saturates to likelihood 0
        likelihood = 1.0 / (1.0 + np.exp(-logits))
    new = weights * likelihood
    total = new.sum()
    if total <= 0.0 or not np.isfinite(total):
        warnings.warn(
            "degenerate particle weights; re-uniformizing", RuntimeWarning
        )
        return np.full_like(weights, 1.0 / weights.size)
    return new / total


def particle_entropy(weights: np.ndarray) -> float:
    nz = weights[weights > 0]
    return float(-(nz * np.log(nz)).sum())


def _sample_particles(n: int, dims: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=(n, dims))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def run_baseline_session(cfg, seed: int):
    """Schedule-driven session for a feature-based baseline learner."""
    from .experiments import SessionResult, _ground_truth, _session_rngs, round_ms
    from .queries import generate_pool

    env: Environment = cfg.environment()
    H = cfg.horizon if cfg.horizon is not None else env.default_horizon
    theta_rng, init_rng, pool_rng, opt0_rng, loop_rngs = _session_rngs(
        seed, len(cfg.schedule)
    )
    gt = _ground_truth(cfg, env, theta_rng)
    known = env.feature_map(cfg.baseline_features)
    if known.n == 0:
        raise ValueError("baselines need at least one known feature")
    start, goal = env.start, env.goal
    optimum = oracle_optimum(env, gt, start, goal, H)

    pool = None
    if any(k.startswith("preference") for k in cfg.schedule):
        pool = generate_pool(
            env, start, cfg.pool_size, H, pool_rng, sigma=cfg.pool_sigma
        )

    if cfg.baseline == "coactive":
        theta_hat = np.zeros(known.n)
    else:
        particles = _sample_particles(cfg.baseline_particles, known.n, init_rng)
        weights = np.full(cfg.baseline_particles, 1.0 / cfg.baseline_particles)
        theta_hat = weights @ particles

    def best_traj(rng):
        model = LinearStateReward(theta_hat, known)
        from .feedback import FeedbackStore

        return optimize(
            model, env, start, goal, H, cfg.opt, rng,
            seeds=default_seeds(FeedbackStore(), start, goal, H),
        )

    current = best_traj(opt0_rng)
    kinds, regrets, walls = [], [], []
    for kind, (teach_rng, train_rng, opt_rng) in zip(cfg.schedule, loop_rngs):
        t0 = time.perf_counter()
        if kind == "demo":
            demo = teacher_demo(env, gt, start, goal, H, cfg.teacher, teach_rng)
            if cfg.baseline == "coactive":
                theta_hat = coactive_update(theta_hat, known, demo.traj, current)
            # the preference filter has no demonstration likelihood; skip
        elif kind == "correction":
            if cfg.baseline != "coactive":
                raise ValueError("linear_bayes learns from preferences only")
            result = teacher_correction(env, gt, current, cfg.teacher, teach_rng)
            corr = result.correction
            human = splice_window(corr.robot_traj, corr.window, corr.snippet)
            theta_hat = coactive_update(theta_hat, known, human, current)
        else:
            if cfg.baseline != "linear_bayes":
                raise ValueError("coactive learns from demos and corrections only")
            query = pool.candidates[int(teach_rng.integers(len(pool)))]
            pref = teacher_preference(env, gt, query, cfg.teacher, teach_rng)
            weights = bayes_reweight(
                particles, weights, known, pref.ranking[0], pref.ranking[1]
            )
            theta_hat = weights @ particles
        current = best_traj(opt_rng)
        kinds.append(kind)
        regrets.append(regret(env, gt, current, optimum))
        walls.append(round_ms(t0))
    return SessionResult(seed, kinds, regrets, walls, current)
