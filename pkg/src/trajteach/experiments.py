"""Scriptable teaching studies: schedules, sessions, and CSV reporting.

A session pairs one simulated teacher with one learner for a fixed
interaction schedule. After every interaction the learner retrains and
re-optimizes its trajectory, and the session records the regret against
the oracle optimum. A study runs many seeded sessions (optionally on a
process pool) and writes per-interaction rows plus a mean/standard-error
summary. Everything is deterministic per (config, seed).
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .envs import Environment, builtin_environment, load_environment
from .feedback import FeedbackStore, TrainConfig, train_ensemble
from .optimize import OptConfig, default_seeds, optimize
from .queries import PoolScorer, generate_pool
from .reward_net import init_ensemble
from .teachers import (
    GroundTruthReward,
    TeacherConfig,
    oracle_optimum,
    regret,
    sample_theta_star,
    teacher_correction,
    teacher_demo,
    teacher_preference,
)
from .trajectory import Trajectory

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "INTERACTION_KINDS",
    "StudyConfig",
    "SessionResult",
    "validate_schedule",
    "run_session",
    "run_study",
    "summarize",
    "rows_to_csv",
    "summary_to_csv",
    "write_study_outputs",
    "load_study_config",
]

INTERACTION_KINDS = ("demo", "correction", "preference_active", "preference_passive")

_SEED_ROOT = 0x7261_6E6B  # distinguishes study streams from other library rng use


def validate_schedule(schedule) -> tuple[str, ...]:
    schedule = tuple(schedule)
    if not schedule:
        raise ValueError("schedule is empty")
    for kind in schedule:
        if kind not in INTERACTION_KINDS:
            raise ValueError(f"unknown interaction kind {kind!r}")
    demo_idx = [i for i, k in enumerate(schedule) if k == "demo"]
    if demo_idx and demo_idx != list(range(len(demo_idx))):
        raise ValueError("demonstrations must form a prefix of the schedule")
    return schedule


@dataclass(frozen=True)
class StudyConfig:
    """One study arm: environment, schedule, and all component settings."""

    env_name: str
    schedule: tuple[str, ...]
    seeds: int = 15
    teacher: TeacherConfig = field(default_factory=TeacherConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    opt: OptConfig = field(default_factory=OptConfig)
    horizon: int | None = None
    theta_star: str = "task"  # "task": env's canonical weights; "sampled": per seed
    learner_features: tuple[str, ...] = ()  # () trains the nets on raw coordinates
    ensemble_size: int = 3
    net_width: int = 64
    pool_size: int = 1000
    pool_sigma: float | None = None
    baseline: str | None = None  # None (reward-net learner), "coactive", "linear_bayes"
    baseline_features: tuple[str, ...] | None = None
    baseline_particles: int = 500
    env_path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "schedule", validate_schedule(self.schedule))
        object.__setattr__(self, "learner_features", tuple(self.learner_features))
        if self.baseline_features is not None:
            object.__setattr__(
                self, "baseline_features", tuple(self.baseline_features)
            )
        if self.seeds < 1:
            raise ValueError("need at least one seed")
        if self.theta_star not in ("task", "sampled"):
            raise ValueError("theta_star must be 'task' or 'sampled'")
        if self.baseline not in (None, "coactive", "linear_bayes"):
            raise ValueError(f"unknown baseline {self.baseline!r}")

    def environment(self) -> Environment:
        if self.env_path is not None:
            return load_environment(self.env_path)
        return builtin_environment(self.env_name)


@dataclass
class SessionResult:
    seed: int
    kinds: list[str]
    regrets: list[float]
    wall_ms: list[int]
    final_traj: Trajectory


def _session_rngs(seed: int, n_interactions: int):
    root = np.random.SeedSequence([_SEED_ROOT, seed])
    theta_ss, init_ss, pool_ss, opt0_ss, loop_ss = root.spawn(5)
    per_interaction = [
        tuple(np.random.default_rng(s) for s in child.spawn(3))
        for child in loop_ss.spawn(n_interactions)
    ]
    return (
        np.random.default_rng(theta_ss),
        np.random.default_rng(init_ss),
        np.random.default_rng(pool_ss),
        np.random.default_rng(opt0_ss),
        per_interaction,
    )


def _ground_truth(cfg: StudyConfig, env: Environment, rng) -> GroundTruthReward:
    if cfg.theta_star == "task":
        return GroundTruthReward(env.task_weights())
    return sample_theta_star(env, rng)


def run_session(cfg: StudyConfig, seed: int) -> SessionResult:
    """Run one teaching session; regret recorded after every interaction."""
    if cfg.baseline is not None:
        from .baselines import run_baseline_session

        return run_baseline_session(cfg, seed)

    env = cfg.environment()
    H = cfg.horizon if cfg.horizon is not None else env.default_horizon
    theta_rng, init_rng, pool_rng, opt0_rng, loop_rngs = _session_rngs(
        seed, len(cfg.schedule)
    )
    gt = _ground_truth(cfg, env, theta_rng)
    featmap = env.feature_map(cfg.learner_features)
    annotate = featmap.annotate if featmap.n > 0 else None
    ensemble = init_ensemble(
        cfg.ensemble_size, env.d + featmap.n, cfg.net_width, init_rng
    )
    store = FeedbackStore()
    start, goal = env.start, env.goal
    optimum = oracle_optimum(env, gt, start, goal, H)

    scorer = None
    if any(k.startswith("preference") for k in cfg.schedule):
        pool = generate_pool(
            env, start, cfg.pool_size, H, pool_rng,
            sigma=cfg.pool_sigma, featmap=featmap,
        )
        scorer = PoolScorer(pool)

    current = optimize(
        ensemble, env, start, goal, H, cfg.opt, opt0_rng,
        seeds=default_seeds(store, start, goal, H), featmap=featmap,
    )

    kinds, regrets, walls = [], [], []
    for kind, (teach_rng, train_rng, opt_rng) in zip(cfg.schedule, loop_rngs):
        t0 = time.perf_counter()
        if kind == "demo":
            store.demos.append(
                teacher_demo(env, gt, start, goal, H, cfg.teacher, teach_rng)
            )
        elif kind == "correction":
            result = teacher_correction(env, gt, current, cfg.teacher, teach_rng)
            store.corrections.append(result.correction)
        else:
            if kind == "preference_active":
                query = scorer.pool.candidates[scorer.select(ensemble)]
            else:
                query = scorer.pool.candidates[
                    int(teach_rng.integers(len(scorer.pool)))
                ]
            store.prefs.append(
                teacher_preference(env, gt, query, cfg.teacher, teach_rng)
            )
        ensemble = train_ensemble(
            ensemble, store, cfg.train, train_rng, annotate=annotate
        )
        current = optimize(
            ensemble, env, start, goal, H, cfg.opt, opt_rng,
            seeds=default_seeds(store, start, goal, H), featmap=featmap,
        )
        kinds.append(kind)
        regrets.append(regret(env, gt, current, optimum))
        walls.append(round_ms(t0))
    return SessionResult(seed, kinds, regrets, walls, current)


def round_ms(t0: float) -> int:
    return int(round((time.perf_counter() - t0) * 1000))


def _run_seed(args) -> SessionResult:
    cfg, seed = args
    return run_session(cfg, seed)


def run_study(cfg: StudyConfig, workers: int = 1) -> list[dict]:
    """All seeded sessions as sorted rows: seed, interaction, kind, regret, wall_ms."""
    seeds = list(range(cfg.seeds))
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_seed, [(cfg, s) for s in seeds]))
    else:
        results = [run_session(cfg, s) for s in seeds]
    rows = []
    for res in results:
        for i, (kind, reg, wall) in enumerate(
            zip(res.kinds, res.regrets, res.wall_ms)
        ):
            rows.append(
                {
                    "seed": res.seed,
                    "interaction": i,
                    "kind": kind,
                    "regret": reg,
                    "wall_ms": wall,
                }
            )
    rows.sort(key=lambda r: (r["seed"], r["interaction"]))
    return rows


def summarize(rows: list[dict]) -> list[dict]:
    """Per-interaction mean regret and standard error across seeds."""
    by_interaction: dict[int, list[float]] = {}
    for row in rows:
        by_interaction.setdefault(row["interaction"], []).append(row["regret"])
    out = []
    for i in sorted(by_interaction):
        vals = np.asarray(by_interaction[i])
        n = vals.size
        stderr = float(vals.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        out.append(
            {
                "interaction": i,
                "mean_regret": float(vals.mean()),
                "stderr": stderr,
                "n": n,
            }
        )
    return out


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["seed", "interaction", "kind", "regret", "wall_ms"])
    for r in rows:
        writer.writerow(
            [r["seed"], r["interaction"], r["kind"], repr(float(r["regret"])), r["wall_ms"]]
        )
    return buf.getvalue()


def summary_to_csv(summary: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["interaction", "mean_regret", "stderr", "n"])
    for s in summary:
        writer.writerow(
            [s["interaction"], repr(float(s["mean_regret"])), repr(float(s["stderr"])), s["n"]]
        )
    return buf.getvalue()


def write_study_outputs(rows: list[dict], out_dir: str | Path) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = out_dir / "results.csv"
    summary = out_dir / "summary.csv"
    results.write_text(rows_to_csv(rows))
    summary.write_text(summary_to_csv(summarize(rows)))
    return results, summary


def load_study_config(path: str | Path) -> StudyConfig:
    with open(path, "rb") as fh:
        obj = tomllib.load(fh)
    teacher = TeacherConfig(**obj.get("teacher", {}))
    train = TrainConfig(**obj.get("train", {}))
    opt = OptConfig(**obj.get("opt", {}))
    baseline = obj.get("baseline", {})
    return StudyConfig(
        env_name=obj["env"],
        schedule=tuple(obj["schedule"]),
        seeds=obj.get("seeds", 15),
        teacher=teacher,
        train=train,
        opt=opt,
        horizon=obj.get("horizon"),
        theta_star=obj.get("theta_star", "task"),
        learner_features=tuple(obj.get("learner_features", ())),
        ensemble_size=obj.get("ensemble_size", 3),
        net_width=obj.get("net_width", 64),
        pool_size=obj.get("pool_size", 1000),
        pool_sigma=obj.get("pool_sigma"),
        baseline=baseline.get("kind") if baseline else None,
        baseline_features=(
            tuple(baseline["features"]) if baseline.get("features") is not None else None
        ),
        baseline_particles=baseline.get("particles", 500),
        env_path=obj.get("env_path"),
    )
