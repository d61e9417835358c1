"""Ground-truth rewards, the optimal-trajectory oracle, and simulated teachers.

The hidden task reward is linear in the environment's features with
unit-norm weights. A simulated teacher knows those weights and produces
noisily-optimal feedback: demonstrations are smooth perturbations of the
oracle-optimal trajectory, corrections repair the window where the robot
loses the most true reward, and preference answers follow a rationality-
scaled softmax over true trajectory rewards. Learner performance is the
regret of its trajectory against the oracle optimum.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .envs import Environment
from .feedback import Correction, Demonstration, PreferenceQuery
from .optimize import LinearStateReward, OptConfig, optimize
from .queries import QueryCandidate
from .trajectory import (
    DeformationConfig,
    Trajectory,
    Window,
    deform,
    slice_window,
)

__all__ = [
    "GroundTruthReward",
    "TeacherConfig",
    "CorrectionResult",
    "true_state_rewards",
    "true_traj_reward",
    "regret",
    "oracle_optimum",
    "clear_oracle_cache",
    "teacher_demo",
    "teacher_correction",
    "teacher_preference",
    "sample_theta_star",
]


@dataclass(frozen=True)
class GroundTruthReward:
    """Linear feature weights of the hidden task reward, unit L2 norm."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if not np.all(np.isfinite(w)):
            raise ValueError("non-finite reward weights")
        norm = np.linalg.norm(w)
        if norm > 0:
            w = w / norm
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class TeacherConfig:
    """Noise and effort parameters of the simulated teacher."""

    demo_noise: float = 0.02
    pref_rationality: float = math.inf  # inf: noiseless comparisons
    correction_window_len: int = 7
    correction_steps: int = 60

    def __post_init__(self):
        if self.demo_noise < 0:
            raise ValueError("demo_noise must be >= 0")
        if not (self.pref_rationality > 0):
            raise ValueError("pref_rationality must be positive (or inf)")
        if self.correction_window_len < 3:
            raise ValueError("correction window needs at least 3 states")
        if self.correction_steps < 1:
            raise ValueError("correction_steps must be >= 1")


def true_state_rewards(
    env: Environment, gt: GroundTruthReward, coords: np.ndarray
) -> np.ndarray:
    return env.feature_map().values(coords) @ gt.weights


def true_traj_reward(env: Environment, gt: GroundTruthReward, traj: Trajectory) -> float:
    """Hidden task reward of a trajectory, recomputed from coordinates."""
    return float(true_state_rewards(env, gt, traj.coords).sum())


def regret(
    env: Environment,
    gt: GroundTruthReward,
    traj: Trajectory,
    optimum: Trajectory,
) -> float:
    """True-reward gap to the oracle optimum, clamped at zero."""
    gap = true_traj_reward(env, gt, optimum) - true_traj_reward(env, gt, traj)
    return max(0.0, gap)


_ORACLE_CACHE: dict = {}
_ORACLE_LOCK = threading.Lock()


def clear_oracle_cache() -> None:
    with _ORACLE_LOCK:
        _ORACLE_CACHE.clear()


def _via_seed(s0: np.ndarray, mid: np.ndarray, sH: np.ndarray | None, H: int) -> Trajectory:
    half = H // 2
    ts1 = np.linspace(0.0, 1.0, half + 1)[:, None]
    leg1 = s0[None, :] * (1 - ts1) + mid[None, :] * ts1
    if sH is None:
        ts2 = np.linspace(0.0, 1.0, H - half + 1)[:, None]
        leg2 = mid[None, :] * np.ones_like(ts2)
    else:
        ts2 = np.linspace(0.0, 1.0, H - half + 1)[:, None]
        leg2 = mid[None, :] * (1 - ts2) + sH[None, :] * ts2
    return Trajectory(np.vstack([leg1, leg2[1:]]))


def _grid_points(env: Environment, per_dim: int = 3) -> list[np.ndarray]:
    axes = [
        np.linspace(env.lo[i], env.hi[i], per_dim + 2)[1:-1] for i in range(env.d)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return list(np.stack([m.ravel() for m in mesh], axis=1))


def oracle_optimum(
    env: Environment,
    gt: GroundTruthReward,
    s0: np.ndarray,
    sH: np.ndarray | None,
    H: int,
) -> Trajectory:
    """Best trajectory under the true reward; cached per task instance.

    Heavy multi-start ascent (no smoothing, dense via-point grid) on the
    linear feature reward. Deterministic, so the cache is sound.
    """
    s0 = np.asarray(s0, dtype=np.float64)
    sH_arr = None if sH is None else np.asarray(sH, dtype=np.float64)
    key = (
        env.name,
        gt.weights.tobytes(),
        s0.tobytes(),
        b"" if sH_arr is None else sH_arr.tobytes(),
        H,
    )
    with _ORACLE_LOCK:
        hit = _ORACLE_CACHE.get(key)
    if hit is not None:
        return hit
    model = LinearStateReward(gt.weights, env.feature_map())
    if sH_arr is None:
        seeds = [Trajectory(np.tile(s0, (H + 1, 1)))]
    else:
        seeds = [env.straight_line(s0, sH_arr, H)]
    seeds += [_via_seed(s0, mid, sH_arr, H) for mid in _grid_points(env)]
    cfg = OptConfig(
        restarts=25,
        iters=2000,
        smooth_weight=0.0,
        goal_constrained=sH_arr is not None,
        tol=1e-10,
    )
    best = optimize(
        model, env, s0, sH_arr, H, cfg, np.random.default_rng(0), seeds=seeds
    )
    with _ORACLE_LOCK:
        _ORACLE_CACHE.setdefault(key, best)
        return _ORACLE_CACHE[key]


def teacher_demo(
    env: Environment,
    gt: GroundTruthReward,
    s0: np.ndarray,
    sH: np.ndarray | None,
    H: int,
    cfg: TeacherConfig,
    rng: np.random.Generator,
) -> Demonstration:
    """The oracle optimum under one smooth perturbation, clipped to the box."""
    optimum = oracle_optimum(env, gt, s0, sH, H)
    if cfg.demo_noise == 0:
        return Demonstration(optimum)
    lam = rng.normal(0.0, cfg.demo_noise, size=(H - 1, env.d))
    noisy = deform(optimum, lam, DeformationConfig(sigma=cfg.demo_noise))
    return Demonstration(Trajectory(env.clip(noisy.coords)))


@dataclass(frozen=True)
class CorrectionResult:
    correction: Correction
    declined: bool  # teacher found no strict improvement over the slice


def teacher_correction(
    env: Environment,
    gt: GroundTruthReward,
    robot_traj: Trajectory,
    cfg: TeacherConfig,
    rng: np.random.Generator,
) -> CorrectionResult:
    """Repair the window where the robot loses the most true reward.

    The window is the contiguous stretch with the largest summed per-state
    reward deficit against the time-aligned oracle; the snippet comes from
    a few ascent steps on the true reward with the window ends held fixed.
    """
    H = robot_traj.horizon
    L = min(cfg.correction_window_len, H - 1)
    if L < 3:
        raise ValueError(f"horizon {H} too short for a correction window")
    optimum = oracle_optimum(env, gt, robot_traj.coords[0], robot_traj.coords[-1], H)
    deficit = true_state_rewards(env, gt, optimum.coords) - true_state_rewards(
        env, gt, robot_traj.coords
    )
    sums = np.convolve(deficit, np.ones(L), mode="valid")
    t0 = int(np.argmax(sums))
    window = Window(t0, t0 + L - 1)
    sliced = slice_window(robot_traj, window)

    model = LinearStateReward(gt.weights, env.feature_map())
    opt_cfg = OptConfig(
        restarts=1,
        iters=cfg.correction_steps,
        smooth_weight=0.0,
        goal_constrained=True,
        tol=1e-12,
    )
    snippet = optimize(
        model,
        env,
        sliced.coords[0],
        sliced.coords[-1],
        window.length - 1,
        opt_cfg,
        rng,
        seeds=[sliced],
    )
    before = true_traj_reward(env, gt, sliced)
    after = true_traj_reward(env, gt, snippet)
    # improvements at the optimizer's own convergence floor are noise, not
    # an intentional correction: decline those
    if after <= before + 1e-8:
        return CorrectionResult(Correction(robot_traj, window, sliced), declined=True)
    return CorrectionResult(Correction(robot_traj, window, snippet), declined=False)


def teacher_preference(
    env: Environment,
    gt: GroundTruthReward,
    query: QueryCandidate,
    cfg: TeacherConfig,
    rng: np.random.Generator,
) -> PreferenceQuery:
    """Rank the pair by true reward, softened by the rationality parameter."""
    ra = true_traj_reward(env, gt, query.a)
    rb = true_traj_reward(env, gt, query.b)
    if math.isinf(cfg.pref_rationality):
        a_wins = ra >= rb  # ties break toward the first candidate
    else:
        p_a = 1.0 / (1.0 + np.exp(-cfg.pref_rationality * (ra - rb)))
        a_wins = rng.random() < p_a
    ranking = (query.a, query.b) if a_wins else (query.b, query.a)
    return PreferenceQuery(ranking)


def sample_theta_star(env: Environment, rng: np.random.Generator) -> GroundTruthReward:
    """Uniform unit-sphere weights under the environment's sign conventions."""
    v = rng.normal(size=env.n_features)
    for i, sign in enumerate(env.sign_constraints()):
        if sign < 0:
            v[i] = -abs(v[i])
        elif sign > 0:
            v[i] = abs(v[i])
    return GroundTruthReward(v)
