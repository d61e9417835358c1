"""Session snapshots: JSON for the feedback store, binary for the ensemble.

A saved session is a directory:

* ``session.json``  format version, environment name, horizon, endpoints,
  seed, retrain counter, configs, the feedback store, and the current
  trajectory (all numbers as decimal 64-bit floats, which round-trip
  exactly through Python's repr),
* ``ensemble.json`` shapes/width header for the reward models,
* ``ensemble.bin``  the members' parameters as flat little-endian float64.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from .feedback import FeedbackStore, TrainConfig
from .optimize import OptConfig
from .reward_net import (
    NetParams,
    RewardEnsemble,
    params_from_bytes,
    params_header,
    params_to_bytes,
)
from .trajectory import Trajectory

__all__ = [
    "FORMAT_VERSION",
    "PersistenceError",
    "VersionError",
    "SavedSession",
    "save_session",
    "load_session",
]

FORMAT_VERSION = 1


class PersistenceError(RuntimeError):
    pass


class VersionError(PersistenceError):
    pass


@dataclasses.dataclass
class SavedSession:
    """Everything needed to restore a teaching session exactly."""

    session_id: str
    env_name: str
    horizon: int
    start: np.ndarray
    goal: np.ndarray | None
    seed: int
    retrain_count: int
    allow_demos_anytime: bool
    learner_features: tuple[str, ...]
    train: TrainConfig
    opt: OptConfig
    store: FeedbackStore
    current: Trajectory
    ensemble: RewardEnsemble
    pool_size: int = 1000


def save_session(directory: str | Path, s: SavedSession) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = {
        "version": FORMAT_VERSION,
        "id": s.session_id,
        "env": s.env_name,
        "horizon": s.horizon,
        "start": [float(x) for x in s.start],
        "goal": None if s.goal is None else [float(x) for x in s.goal],
        "seed": s.seed,
        "retrain_count": s.retrain_count,
        "allow_demos_anytime": s.allow_demos_anytime,
        "learner_features": list(s.learner_features),
        "pool_size": s.pool_size,
        "train": dataclasses.asdict(s.train),
        "opt": dataclasses.asdict(s.opt),
        "store": s.store.to_json_dict(),
        "current": s.current.to_json_dict(),
    }
    (directory / "session.json").write_text(json.dumps(meta, indent=1))
    header = params_header(s.ensemble.members[0])
    header["version"] = FORMAT_VERSION
    header["members"] = s.ensemble.m
    (directory / "ensemble.json").write_text(json.dumps(header))
    payload = b"".join(params_to_bytes(m) for m in s.ensemble.members)
    (directory / "ensemble.bin").write_bytes(payload)
    return directory


def _load_ensemble(directory: Path) -> RewardEnsemble:
    header_path = directory / "ensemble.json"
    bin_path = directory / "ensemble.bin"
    header = json.loads(header_path.read_text())
    if header.get("version") != FORMAT_VERSION:
        raise VersionError(
            f"{header_path}: format version {header.get('version')} "
            f"(supported: {FORMAT_VERSION})"
        )
    payload = bin_path.read_bytes()
    per_member = sum(
        int(np.prod(shape)) for shape in header["layers"]
    ) * 8
    if len(payload) != per_member * header["members"]:
        raise PersistenceError(
            f"{bin_path}: expected {per_member * header['members']} bytes "
            f"for {header['members']} members, found {len(payload)}"
        )
    members: list[NetParams] = []
    for k in range(header["members"]):
        chunk = payload[k * per_member : (k + 1) * per_member]
        members.append(params_from_bytes(header, chunk))
    return RewardEnsemble(tuple(members))


def load_session(directory: str | Path) -> SavedSession:
    directory = Path(directory)
    meta_path = directory / "session.json"
    try:
        meta = json.loads(meta_path.read_text())
    except FileNotFoundError:
        raise PersistenceError(f"{meta_path}: missing session file") from None
    except json.JSONDecodeError as exc:
        raise PersistenceError(f"{meta_path}: corrupted session file: {exc}") from None
    if meta.get("version") != FORMAT_VERSION:
        raise VersionError(
            f"{meta_path}: format version {meta.get('version')} "
            f"(supported: {FORMAT_VERSION})"
        )
    return SavedSession(
        session_id=meta["id"],
        env_name=meta["env"],
        horizon=meta["horizon"],
        start=np.asarray(meta["start"], dtype=np.float64),
        goal=None if meta["goal"] is None else np.asarray(meta["goal"], dtype=np.float64),
        seed=meta["seed"],
        retrain_count=meta["retrain_count"],
        allow_demos_anytime=meta["allow_demos_anytime"],
        learner_features=tuple(meta["learner_features"]),
        train=TrainConfig(**meta["train"]),
        opt=OptConfig(**meta["opt"]),
        store=FeedbackStore.from_json_dict(meta["store"]),
        current=Trajectory.from_json_dict(meta["current"]),
        ensemble=_load_ensemble(directory),
        pool_size=meta.get("pool_size", 1000),
    )
