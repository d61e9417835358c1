"""HTTP service for interactive teaching sessions.

One process hosts many sessions; each session serializes its mutations
under a lock and runs at most one training job at a time. Feedback
endpoints record the input and return immediately; an explicit retrain
request trains the ensemble on a background thread and atomically swaps
in the new models and re-optimized trajectory. Served preference queries
carry a token so an answer always refers to the exact pair shown.
"""

from __future__ import annotations

import logging
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .envs import Environment, builtin_environment, builtin_environment_names
from .feedback import (
    Correction,
    Demonstration,
    FeedbackStore,
    PreferenceQuery,
    TrainConfig,
    build_rankings_buffer,
    train_ensemble,
    unified_loss,
)
from .optimize import OptConfig, default_seeds, optimize
from .persistence import PersistenceError, SavedSession, load_session, save_session
from .queries import PoolScorer, generate_pool
from .reward_net import RewardEnsemble, batch_state_rewards, init_ensemble
from .trajectory import Trajectory, Window

log = logging.getLogger("trajteach.service")

SESSION_SEED_ROOT = 0x5345_5353


class CreateSession(BaseModel):
    env: str
    H: int | None = None
    start: list[float] | None = None
    goal: list[float] | None = None
    allow_demos_anytime: bool = False
    seed: int = 0
    net_width: int = 64
    ensemble_size: int = 3
    pool_size: int = 200
    epochs: int = 200


class TrajectoryBody(BaseModel):
    horizon: int
    states: list[list[float]]


class DemonstrationBody(BaseModel):
    trajectory: TrajectoryBody


class CorrectionBody(BaseModel):
    window: list[int]
    snippet: TrajectoryBody


class PreferenceBody(BaseModel):
    winner: str
    query_token: str


@dataclass
class Session:
    id: str
    env: Environment
    env_name: str
    horizon: int
    start: np.ndarray
    goal: np.ndarray | None
    allow_demos_anytime: bool
    seed: int
    train_cfg: TrainConfig
    opt_cfg: OptConfig
    pool_size: int
    ensemble: RewardEnsemble
    current: Trajectory
    store: FeedbackStore = field(default_factory=FeedbackStore)
    retrain_count: int = 0
    status: str = "idle"  # idle | running | failed
    fail_reason: str | None = None
    last_loss: float | None = None
    pending_query: tuple[str, str, int] | None = None  # token, mode, pool index
    log_entries: list[str] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)
    _scorer: PoolScorer | None = None

    def scorer(self) -> PoolScorer:
        if self._scorer is None:
            pool_rng = np.random.default_rng(
                np.random.SeedSequence([SESSION_SEED_ROOT, self.seed, 1])
            )
            pool = generate_pool(
                self.env, self.start, self.pool_size, self.horizon, pool_rng
            )
            self._scorer = PoolScorer(pool)
        return self._scorer

    def snapshot(self) -> dict:
        return {
            "id": self.id,
            "env": self.env_name,
            "horizon": self.horizon,
            "start": [float(x) for x in self.start],
            "goal": None if self.goal is None else [float(x) for x in self.goal],
            "store": {
                "demos": len(self.store.demos),
                "corrections": len(self.store.corrections),
                "prefs": len(self.store.prefs),
            },
            "status": self.status,
            "fail_reason": self.fail_reason,
            "last_loss": self.last_loss,
            "retrain_count": self.retrain_count,
            "allow_demos_anytime": self.allow_demos_anytime,
            "trajectory": self.current.to_json_dict(),
            "log": list(self.log_entries),
        }


def _parse_trajectory(body: TrajectoryBody, session: Session) -> Trajectory:
    coords = np.asarray(body.states, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != session.env.d:
        raise HTTPException(
            422, f"trajectory states must be {session.env.d}-dimensional"
        )
    if coords.shape[0] != body.horizon + 1:
        raise HTTPException(
            422,
            f"trajectory carries {coords.shape[0]} states but declares horizon {body.horizon}",
        )
    return Trajectory(coords)


def create_app(data_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="trajteach")
    sessions: dict[str, Session] = {}
    app.state.sessions = sessions
    app.state.data_dir = None if data_dir is None else Path(data_dir)

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(404, f"unknown session {session_id}")
        return session

    def initial_trajectory(env, start, goal, H) -> Trajectory:
        if goal is None:
            return Trajectory(np.tile(start, (H + 1, 1)))
        return env.straight_line(start, goal, H)

    @app.get("/environments")
    def environments():
        return {"environments": builtin_environment_names()}

    @app.get("/environments/{name}")
    def environment_detail(name: str):
        try:
            env = builtin_environment(name)
        except ValueError:
            raise HTTPException(404, f"unknown environment {name}")
        return {
            "name": env.name,
            "d": env.d,
            "lo": env.lo.tolist(),
            "hi": env.hi.tolist(),
            "landmarks": {k: v.tolist() for k, v in env.landmarks.items()},
            "default_horizon": env.default_horizon,
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSession):
        try:
            env = builtin_environment(body.env)
        except ValueError as exc:
            raise HTTPException(422, str(exc))
        H = body.H if body.H is not None else env.default_horizon
        if H < 2:
            raise HTTPException(422, "horizon must be at least 2")
        start = (
            np.asarray(body.start, dtype=np.float64)
            if body.start is not None
            else env.start
        )
        goal = (
            np.asarray(body.goal, dtype=np.float64) if body.goal is not None else env.goal
        )
        for point, label in ((start, "start"), (goal, "goal")):
            if point is not None and (
                point.shape != (env.d,) or not env.contains(point)
            ):
                raise HTTPException(422, f"{label} must lie inside the workspace box")
        init_rng = np.random.default_rng(
            np.random.SeedSequence([SESSION_SEED_ROOT, body.seed, 0])
        )
        ensemble = init_ensemble(body.ensemble_size, env.d, body.net_width, init_rng)
        session = Session(
            id=uuid.uuid4().hex[:12],
            env=env,
            env_name=body.env,
            horizon=H,
            start=start,
            goal=goal,
            allow_demos_anytime=body.allow_demos_anytime,
            seed=body.seed,
            train_cfg=TrainConfig(epochs=body.epochs),
            opt_cfg=OptConfig(),
            pool_size=body.pool_size,
            ensemble=ensemble,
            current=initial_trajectory(env, start, goal, H),
        )
        sessions[session.id] = session
        return {"id": session.id}

    @app.get("/sessions/{session_id}")
    def session_snapshot(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return session.snapshot()

    @app.post("/sessions/{session_id}/demonstration", status_code=202)
    def post_demonstration(session_id: str, body: DemonstrationBody):
        session = get_session(session_id)
        traj = _parse_trajectory(body.trajectory, session)
        if traj.horizon != session.horizon:
            raise HTTPException(
                422, f"demonstration horizon {traj.horizon} != session {session.horizon}"
            )
        with session.lock:
            if not session.allow_demos_anytime and (
                session.store.corrections or session.store.prefs
            ):
                raise HTTPException(
                    409,
                    "demonstrations are only accepted before corrections or preferences",
                )
            session.store.demos.append(Demonstration(traj))
            session.log_entries.append("demonstration")
        return {"accepted": True}

    @app.post("/sessions/{session_id}/correction", status_code=202)
    def post_correction(session_id: str, body: CorrectionBody):
        session = get_session(session_id)
        if len(body.window) != 2:
            raise HTTPException(422, "window must be [start, end]")
        try:
            window = Window(int(body.window[0]), int(body.window[1]))
        except ValueError as exc:
            raise HTTPException(422, str(exc))
        snippet = _parse_trajectory(body.snippet, session)
        with session.lock:
            try:
                correction = Correction(session.current, window, snippet)
            except ValueError as exc:
                raise HTTPException(422, str(exc))
            session.store.corrections.append(correction)
            session.log_entries.append("correction")
        return {"accepted": True}

    @app.get("/sessions/{session_id}/query")
    def get_query(session_id: str, mode: str = "active"):
        if mode not in ("active", "passive"):
            raise HTTPException(422, "mode must be 'active' or 'passive'")
        session = get_session(session_id)
        with session.lock:
            if session.pending_query is not None and session.pending_query[1] == mode:
                token, _, idx = session.pending_query
            else:
                scorer = session.scorer()
                if mode == "active":
                    idx = scorer.select(session.ensemble)
                else:
                    draw_rng = np.random.default_rng(
                        np.random.SeedSequence(
                            [SESSION_SEED_ROOT, session.seed, 2, len(session.store.prefs)]
                        )
                    )
                    idx = int(draw_rng.integers(len(scorer.pool)))
                token = uuid.uuid4().hex
                session.pending_query = (token, mode, idx)
            candidate = session.scorer().pool.candidates[idx]
            return {
                "token": token,
                "a": candidate.a.to_json_dict(),
                "b": candidate.b.to_json_dict(),
            }

    @app.post("/sessions/{session_id}/preference", status_code=202)
    def post_preference(session_id: str, body: PreferenceBody):
        if body.winner not in ("a", "b"):
            raise HTTPException(422, "winner must be 'a' or 'b'")
        session = get_session(session_id)
        with session.lock:
            if session.pending_query is None or session.pending_query[0] != body.query_token:
                raise HTTPException(409, "stale or unknown query token")
            _, _, idx = session.pending_query
            candidate = session.scorer().pool.candidates[idx]
            winner, loser = (
                (candidate.a, candidate.b)
                if body.winner == "a"
                else (candidate.b, candidate.a)
            )
            session.store.prefs.append(PreferenceQuery((winner, loser)))
            session.pending_query = None
            session.log_entries.append("preference")
        return {"accepted": True}

    def _run_training(session: Session):
        try:
            with session.lock:
                store = FeedbackStore(
                    demos=list(session.store.demos),
                    corrections=list(session.store.corrections),
                    prefs=list(session.store.prefs),
                )
                count = session.retrain_count
            seed_seq = [SESSION_SEED_ROOT, session.seed, 3, count]
            train_rng = np.random.default_rng(np.random.SeedSequence(seed_seq))
            ensemble = train_ensemble(
                session.ensemble, store, session.train_cfg, train_rng
            )
            buffer_rng = np.random.default_rng(np.random.SeedSequence(seed_seq))
            buffer = build_rankings_buffer(store, session.train_cfg, buffer_rng)
            loss = float(
                np.mean([unified_loss(m, buffer) for m in ensemble.members])
            )
            opt_rng = np.random.default_rng(
                np.random.SeedSequence([SESSION_SEED_ROOT, session.seed, 4, count])
            )
            trajectory = optimize(
                ensemble,
                session.env,
                session.start,
                session.goal,
                session.horizon,
                session.opt_cfg,
                opt_rng,
                seeds=default_seeds(
                    store, session.start, session.goal, session.horizon
                ),
                featmap=session.env.feature_map([]),
            )
            with session.lock:
                session.ensemble = ensemble
                session.current = trajectory
                session.last_loss = loss
                session.retrain_count = count + 1
                session.status = "idle"
                session.pending_query = None  # ensemble changed; token invalid
                session.log_entries.append("retrain")
        except Exception as exc:  # surfaced through /status
            log.exception("training failed for session %s", session.id)
            with session.lock:
                session.status = "failed"
                session.fail_reason = str(exc)

    @app.post("/sessions/{session_id}/retrain", status_code=202)
    def retrain(session_id: str):
        session = get_session(session_id)
        with session.lock:
            if session.status == "running":
                raise HTTPException(409, "training already running")
            if len(session.store) == 0:
                raise HTTPException(409, "no feedback to train on")
            session.status = "running"
            session.fail_reason = None
        thread = threading.Thread(target=_run_training, args=(session,), daemon=True)
        thread.start()
        return {"accepted": True}

    @app.get("/sessions/{session_id}/status")
    def status(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return {
                "status": session.status,
                "reason": session.fail_reason,
                "last_loss": session.last_loss,
                "retrain_count": session.retrain_count,
            }

    @app.get("/sessions/{session_id}/trajectory")
    def trajectory(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return session.current.to_json_dict()

    @app.get("/sessions/{session_id}/reward-field")
    def reward_field(session_id: str, grid: int = 32):
        session = get_session(session_id)
        if session.env.d != 2:
            raise HTTPException(422, "reward field is only available for 2D sessions")
        if not 2 <= grid <= 256:
            raise HTTPException(422, "grid must be between 2 and 256")
        env = session.env
        xs = np.linspace(env.lo[0], env.hi[0], grid)
        ys = np.linspace(env.lo[1], env.hi[1], grid)
        gx, gy = np.meshgrid(xs, ys, indexing="xy")
        pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
        with session.lock:
            members = session.ensemble.members
        total = np.zeros(pts.shape[0])
        for member in members:
            total += batch_state_rewards(member, pts)
        values = (total / len(members)).reshape(grid, grid)
        return {
            "grid": grid,
            "lo": env.lo.tolist(),
            "hi": env.hi.tolist(),
            "values": values.tolist(),
        }

    @app.post("/sessions/{session_id}/save", status_code=201)
    def save(session_id: str):
        if app.state.data_dir is None:
            raise HTTPException(409, "service started without a data directory")
        session = get_session(session_id)
        with session.lock:
            saved = SavedSession(
                session_id=session.id,
                env_name=session.env_name,
                horizon=session.horizon,
                start=session.start,
                goal=session.goal,
                seed=session.seed,
                retrain_count=session.retrain_count,
                allow_demos_anytime=session.allow_demos_anytime,
                learner_features=(),
                train=session.train_cfg,
                opt=session.opt_cfg,
                store=session.store,
                current=session.current,
                ensemble=session.ensemble,
                pool_size=session.pool_size,
            )
        path = save_session(app.state.data_dir / session.id, saved)
        return {"path": str(path)}

    @app.post("/sessions/restore", status_code=201)
    def restore(body: dict):
        if app.state.data_dir is None:
            raise HTTPException(409, "service started without a data directory")
        session_id = body.get("id")
        if not session_id:
            raise HTTPException(422, "body needs an 'id'")
        try:
            saved = load_session(app.state.data_dir / session_id)
        except PersistenceError as exc:
            raise HTTPException(409, str(exc))
        env = builtin_environment(saved.env_name)
        session = Session(
            id=saved.session_id,
            env=env,
            env_name=saved.env_name,
            horizon=saved.horizon,
            start=saved.start,
            goal=saved.goal,
            allow_demos_anytime=saved.allow_demos_anytime,
            seed=saved.seed,
            train_cfg=saved.train,
            opt_cfg=saved.opt,
            pool_size=saved.pool_size,
            ensemble=saved.ensemble,
            current=saved.current,
            store=saved.store,
            retrain_count=saved.retrain_count,
        )
        sessions[session.id] = session
        return {"id": session.id}

    ui_dir = Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
    if ui_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
