"""Desk-scale point-robot environments with differentiable feature maps.

An environment is a workspace box, named landmarks, and an ordered list of
feature definitions. Features come in three kinds:

* ``dist_to``   Euclidean distance to a landmark,
* ``height``    one coordinate relative to the table height,
* ``tilt``      absolute value of one coordinate (an orientation proxy).

Each feature supplies its Jacobian so reward gradients can be pulled back
from feature space to workspace coordinates. Environments are immutable
and loadable from TOML files; the bundled ones are desk-scale stand-ins
for tabletop manipulation tasks.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .trajectory import Trajectory

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "FeatureDef",
    "FeatureMap",
    "Environment",
    "load_environment",
    "builtin_environment",
    "builtin_environment_names",
]

_KINDS = ("dist_to", "height", "tilt")


@dataclass(frozen=True)
class FeatureDef:
    """One scalar feature of a workspace point."""

    name: str
    kind: str
    landmark: str | None = None
    axis: int = -1
    sign: int = 0  # teacher-weight sign convention: -1 forces w<=0, +1 forces w>=0
    task_weight: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if self.kind == "dist_to" and not self.landmark:
            raise ValueError("dist_to features need a landmark name")


class FeatureMap:
    """An ordered feature subset bound to an environment's geometry."""

    def __init__(self, env: "Environment", defs: tuple[FeatureDef, ...]):
        self._env = env
        self.defs = tuple(defs)

    @property
    def n(self) -> int:
        return len(self.defs)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.defs)

    def values(self, coords: np.ndarray) -> np.ndarray:
        """Feature values for a (B, d) batch; returns (B, n)."""
        coords = np.atleast_2d(np.asarray(coords, dtype=np.float64))
        out = np.empty((coords.shape[0], self.n))
        for j, f in enumerate(self.defs):
            if f.kind == "dist_to":
                p = self._env.landmarks[f.landmark]
                out[:, j] = np.linalg.norm(coords - p, axis=1)
            elif f.kind == "height":
                out[:, j] = coords[:, f.axis] - self._env.table_height
            else:  # tilt
                out[:, j] = np.abs(coords[:, f.axis])
        return out

    def jacobians(self, coords: np.ndarray) -> np.ndarray:
        """Feature Jacobians for a (B, d) batch; returns (B, n, d)."""
        coords = np.atleast_2d(np.asarray(coords, dtype=np.float64))
        B, d = coords.shape
        out = np.zeros((B, self.n, d))
        for j, f in enumerate(self.defs):
            if f.kind == "dist_to":
                diff = coords - self._env.landmarks[f.landmark]
                norm = np.linalg.norm(diff, axis=1, keepdims=True)
                safe = np.where(norm > 0, norm, 1.0)
                out[:, j, :] = np.where(norm > 0, diff / safe, 0.0)
            elif f.kind == "height":
                out[:, j, f.axis] = 1.0
            else:
                out[:, j, f.axis] = np.sign(coords[:, f.axis])
        return out

    def annotate(self, traj: Trajectory) -> Trajectory:
        """Attach (or refresh) this map's feature values on a trajectory."""
        if self.n == 0:
            return traj if traj.features is None else Trajectory(traj.coords)
        return Trajectory(traj.coords, self.values(traj.coords))


@dataclass(frozen=True)
class Environment:
    name: str
    lo: np.ndarray
    hi: np.ndarray
    landmarks: dict[str, np.ndarray]
    features: tuple[FeatureDef, ...]
    table_height: float = 0.0
    default_horizon: int = 20

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=np.float64)
        hi = np.asarray(self.hi, dtype=np.float64)
        if lo.shape != hi.shape or lo.ndim != 1 or np.any(lo >= hi):
            raise ValueError("workspace box needs lo < hi per dimension")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        marks = {
            k: np.asarray(v, dtype=np.float64) for k, v in self.landmarks.items()
        }
        for k, v in marks.items():
            if v.shape != lo.shape:
                raise ValueError(f"landmark {k!r} has dimension {v.shape}, box is {lo.shape}")
            if np.any(v < lo) or np.any(v > hi):
                raise ValueError(f"landmark {k!r} lies outside the workspace box")
        object.__setattr__(self, "landmarks", marks)
        object.__setattr__(self, "features", tuple(self.features))
        known = set(marks)
        for f in self.features:
            if f.kind == "dist_to" and f.landmark not in known:
                raise ValueError(f"feature {f.name!r} references unknown landmark {f.landmark!r}")

    @property
    def d(self) -> int:
        return self.lo.shape[0]

    @property
    def n_features(self) -> int:
        return len(self.features)

    def diagonal(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def contains(self, coords: np.ndarray) -> bool:
        coords = np.atleast_2d(coords)
        return bool(np.all(coords >= self.lo) and np.all(coords <= self.hi))

    def clip(self, coords: np.ndarray) -> np.ndarray:
        return np.clip(coords, self.lo, self.hi)

    def sample_point(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lo, self.hi)

    def feature_map(self, names=None) -> FeatureMap:
        """Bind a feature subset: None for all, a list of names, or [] for none."""
        if names is None:
            defs = self.features
        else:
            by_name = {f.name: f for f in self.features}
            try:
                defs = tuple(by_name[n] for n in names)
            except KeyError as exc:
                raise ValueError(f"unknown feature {exc.args[0]!r}") from None
        return FeatureMap(self, defs)

    def task_weights(self) -> np.ndarray:
        return np.array([f.task_weight for f in self.features])

    def sign_constraints(self) -> np.ndarray:
        return np.array([f.sign for f in self.features])

    @property
    def start(self) -> np.ndarray:
        return self.landmarks["start"]

    @property
    def goal(self) -> np.ndarray:
        return self.landmarks["goal"]

    def straight_line(self, a: np.ndarray, b: np.ndarray, H: int) -> Trajectory:
        ts = np.linspace(0.0, 1.0, H + 1)[:, None]
        return Trajectory(np.asarray(a)[None, :] * (1 - ts) + np.asarray(b)[None, :] * ts)


def _env_from_dict(obj: dict) -> Environment:
    feats = tuple(
        FeatureDef(
            name=f["name"],
            kind=f["kind"],
            landmark=f.get("landmark"),
            axis=f.get("axis", -1),
            sign=f.get("sign", 0),
            task_weight=f.get("task_weight", 0.0),
        )
        for f in obj.get("features", [])
    )
    return Environment(
        name=obj["name"],
        lo=np.asarray(obj["box"]["lo"], dtype=np.float64),
        hi=np.asarray(obj["box"]["hi"], dtype=np.float64),
        landmarks={k: np.asarray(v, dtype=np.float64) for k, v in obj.get("landmarks", {}).items()},
        features=feats,
        table_height=obj.get("scalars", {}).get("table_height", 0.0),
        default_horizon=obj.get("default_horizon", 20),
    )


def load_environment(path: str | Path) -> Environment:
    with open(path, "rb") as fh:
        return _env_from_dict(tomllib.load(fh))


def builtin_environment_names() -> list[str]:
    root = resources.files("trajteach.data")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def builtin_environment(name: str) -> Environment:
    ref = resources.files("trajteach.data").joinpath(f"{name}.toml")
    try:
        data = ref.read_bytes()
    except FileNotFoundError:
        raise ValueError(
            f"unknown environment {name!r}; bundled: {builtin_environment_names()}"
        ) from None
    return _env_from_dict(tomllib.loads(data.decode()))
