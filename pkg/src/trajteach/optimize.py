"""Trajectory search over a learned (or hand-specified) state reward.

The endpoint constraints are handled structurally: only interior
waypoints are decision variables (the final one joins them when no goal
is set), so the search is plain projected gradient ascent with a
backtracking line search and multiple restarts. A small acceleration
penalty discourages jagged maximizers of a pointwise reward; waypoints
are clipped to the workspace box every step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .envs import Environment, FeatureMap
from .feedback import FeedbackStore
from .reward_net import RewardEnsemble, batch_state_rewards, batch_input_grads
from .trajectory import DeformationConfig, Trajectory, deform, splice_window

__all__ = [
    "OptConfig",
    "OptimizationError",
    "EnsembleStateReward",
    "LinearStateReward",
    "optimize",
    "default_seeds",
]


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class OptConfig:
    restarts: int = 5
    iters: int = 300
    step: float | None = None  # None: 5% of the workspace diagonal
    goal_constrained: bool = True
    smooth_weight: float = 1e-3
    tol: float = 1e-8

    def __post_init__(self):
        if self.restarts < 1 or self.iters < 1:
            raise ValueError("restarts and iters must be >= 1")
        if self.step is not None and self.step <= 0:
            raise ValueError("step must be positive")
        if self.smooth_weight < 0 or self.tol <= 0:
            raise ValueError("need smooth_weight >= 0 and tol > 0")


class EnsembleStateReward:
    """Summed ensemble-member reward of a state, with coordinate gradients."""

    def __init__(self, ensemble: RewardEnsemble, featmap: FeatureMap):
        self.ensemble = ensemble
        self.featmap = featmap

    def values(self, coords: np.ndarray) -> np.ndarray:
        if self.featmap.n == 0:
            X = coords
        else:
            X = np.hstack([coords, self.featmap.values(coords)])
        total = np.zeros(coords.shape[0])
        for member in self.ensemble.members:
            total += batch_state_rewards(member, X)
        return total

    def grads(self, coords: np.ndarray) -> np.ndarray:
        if self.featmap.n == 0:
            X = coords
        else:
            X = np.hstack([coords, self.featmap.values(coords)])
        g = np.zeros_like(X)
        for member in self.ensemble.members:
            g += batch_input_grads(member, X)
        d = coords.shape[1]
        if self.featmap.n == 0:
            return g
        jacs = self.featmap.jacobians(coords)
        return g[:, :d] + np.einsum("bn,bnd->bd", g[:, d:], jacs)


class LinearStateReward:
    """Feature-linear state reward: weights dot features."""

    def __init__(self, weights: np.ndarray, featmap: FeatureMap):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.featmap = featmap
        if self.weights.shape != (featmap.n,):
            raise ValueError(
                f"weights shape {self.weights.shape} != feature count {featmap.n}"
            )

    def values(self, coords: np.ndarray) -> np.ndarray:
        return self.featmap.values(coords) @ self.weights

    def grads(self, coords: np.ndarray) -> np.ndarray:
        return np.einsum("n,bnd->bd", self.weights, self.featmap.jacobians(coords))


def _accel_penalty(coords: np.ndarray) -> float:
    dd = coords[2:] - 2 * coords[1:-1] + coords[:-2]
    return float(np.sum(dd * dd))


def _accel_penalty_grad(coords: np.ndarray) -> np.ndarray:
    dd = coords[2:] - 2 * coords[1:-1] + coords[:-2]
    g = np.zeros_like(coords)
    g[2:] += 2 * dd
    g[1:-1] += -4 * dd
    g[:-2] += 2 * dd
    return g


def _ascend(model, coords0, free, env, cfg: OptConfig, step0: float):
    """Monotone projected ascent from one start; returns coords and history."""

    def objective(coords):
        val = float(model.values(coords).sum()) - cfg.smooth_weight * _accel_penalty(coords)
        if not np.isfinite(val):
            raise OptimizationError("objective became non-finite")
        return val

    x = np.array(coords0)
    x[free] = np.clip(x[free], env.lo, env.hi)
    obj = objective(x)
    history = [obj]
    for _ in range(cfg.iters):
        g = model.grads(x) - cfg.smooth_weight * _accel_penalty_grad(x)
        step = step0
        accepted = False
        for _ in range(21):
            trial = np.array(x)
            trial[free] = np.clip(x[free] + step * g[free], env.lo, env.hi)
            trial_obj = objective(trial)
            if trial_obj > obj:
                accepted = True
                break
            step /= 2
        if not accepted:
            break
        gain = trial_obj - obj
        x, obj = trial, trial_obj
        history.append(obj)
        if gain < cfg.tol:
            break
    return x, history


def _shift_endpoints(
    coords: np.ndarray, s0: np.ndarray, sH: np.ndarray | None
) -> np.ndarray:
    """Translate waypoints linearly in time so the endpoints land on s0/sH."""
    H = coords.shape[0] - 1
    ts = np.linspace(0.0, 1.0, H + 1)[:, None]
    start_shift = s0 - coords[0]
    end_shift = (sH - coords[-1]) if sH is not None else start_shift
    out = coords + (1 - ts) * start_shift + ts * end_shift
    out[0] = s0  # exact, not up to float cancellation
    if sH is not None:
        out[-1] = sH
    return out


def _as_model(model, env: Environment, featmap: FeatureMap | None):
    if isinstance(model, RewardEnsemble):
        if featmap is None:
            if model.d_aug == env.d:
                featmap = env.feature_map([])
            elif model.d_aug == env.d + env.n_features:
                featmap = env.feature_map()
            else:
                raise ValueError(
                    f"cannot infer feature subset for net input width {model.d_aug}; "
                    "pass featmap explicitly"
                )
        return EnsembleStateReward(model, featmap)
    return model


def optimize(
    model,
    env: Environment,
    s0: np.ndarray,
    sH: np.ndarray | None,
    H: int,
    cfg: OptConfig,
    rng: np.random.Generator,
    seeds: list[Trajectory] | None = None,
    featmap: FeatureMap | None = None,
) -> Trajectory:
    """Best trajectory found by multi-start ascent under the state reward.

    ``model`` is a RewardEnsemble or any object with batched ``values`` /
    ``grads`` over coordinates. The start state is pinned exactly; the
    goal state too unless the config disables it or ``sH`` is None.
    Provided seed trajectories are always used as starts (endpoint-shifted
    if needed); random smooth perturbations of the straight line fill the
    remaining restart budget.
    """
    s0 = np.asarray(s0, dtype=np.float64)
    if not env.contains(s0):
        raise ValueError("start state lies outside the workspace box")
    goal_constrained = cfg.goal_constrained and sH is not None
    if sH is not None:
        sH = np.asarray(sH, dtype=np.float64)
        if not env.contains(sH):
            raise ValueError("goal state lies outside the workspace box")
    model = _as_model(model, env, featmap)
    free = slice(1, H) if goal_constrained else slice(1, H + 1)
    step0 = cfg.step if cfg.step is not None else 0.05 * env.diagonal()

    line = env.straight_line(s0, sH if sH is not None else s0, H)
    starts: list[np.ndarray] = []
    for seed in seeds if seeds is not None else [line]:
        if seed.horizon != H:
            raise ValueError(f"seed horizon {seed.horizon} != requested {H}")
        starts.append(
            _shift_endpoints(seed.coords, s0, sH if goal_constrained else None)
        )
    extra = cfg.restarts - len(starts)
    if extra > 0:
        dcfg = DeformationConfig(preserve_endpoints=True)
        for _ in range(extra):
            lam_rng = np.random.default_rng(int(rng.integers(0, 2**63)))
            alt = deform(
                line,
                lam_rng.normal(
                    0.0,
                    0.1 * env.diagonal() / _gain(H - 1),
                    size=(H - 1, env.d),
                ),
                dcfg,
            )
            starts.append(np.clip(alt.coords, env.lo, env.hi))

    best_coords, best_obj = None, -np.inf
    for coords0 in starts:
        coords0 = np.array(coords0)
        coords0[0] = s0
        if goal_constrained:
            coords0[-1] = sH
        coords, history = _ascend(model, coords0, free, env, cfg, step0)
        if history[-1] > best_obj:
            best_obj = history[-1]
            best_coords = coords
    return Trajectory(best_coords)


def _gain(L: int) -> float:
    from .trajectory import displacement_gain

    return displacement_gain(max(L, 1))


def default_seeds(
    store: FeedbackStore, s0: np.ndarray, sH: np.ndarray | None, H: int
) -> list[Trajectory]:
    """Warm-start candidates: the straight line, demos, corrected robot paths."""
    s0 = np.asarray(s0, dtype=np.float64)
    ts = np.linspace(0.0, 1.0, H + 1)[:, None]
    if sH is None:
        line = np.tile(s0, (H + 1, 1))
    else:
        sH_arr = np.asarray(sH, dtype=np.float64)
        line = s0[None, :] * (1 - ts) + sH_arr[None, :] * ts
    seeds = [Trajectory(line)]
    for demo in store.demos:
        if demo.traj.horizon == H:
            seeds.append(
                Trajectory(_shift_endpoints(demo.traj.coords, s0, sH))
            )
    for corr in store.corrections:
        if corr.robot_traj.horizon == H:
            fixed = splice_window(corr.robot_traj, corr.window, corr.snippet)
            seeds.append(Trajectory(_shift_endpoints(fixed.coords, s0, sH)))
    return seeds
