"""States, fixed-horizon trajectories, windows, and smooth deformations.

A trajectory is a sequence of H+1 waypoints. Deformations add a smooth
displacement field to the waypoints: noise drawn per waypoint is shaped by
the inverse Gram matrix of the second-finite-difference operator, so a
localized perturbation spreads out instead of producing a kink. Deformed
trajectories serve as the "nearby alternatives" that human input gets
ranked against.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass

import numpy as np

__all__ = [
    "State",
    "Trajectory",
    "Window",
    "DeformationConfig",
    "build_accel_norm_matrix",
    "displacement_gain",
    "deform",
    "sample_alternatives",
    "slice_window",
    "splice_window",
]


@dataclass(frozen=True)
class State:
    """One waypoint: workspace coordinates plus optional task features."""

    coords: np.ndarray
    features: np.ndarray | None = None

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        object.__setattr__(self, "coords", coords)
        if self.features is not None:
            object.__setattr__(
                self, "features", np.asarray(self.features, dtype=np.float64)
            )

    @property
    def d(self) -> int:
        return self.coords.shape[0]

    def augmented(self) -> np.ndarray:
        """Coordinates concatenated with features (when present)."""
        if self.features is None:
            return self.coords
        return np.concatenate([self.coords, self.features])


class Trajectory:
    """Fixed-horizon waypoint sequence, stored as an (H+1, d) array.

    Immutable by convention: the backing arrays are marked read-only.
    ``features`` is an optional (H+1, n) array aligned with the waypoints;
    deformation drops it (the environment recomputes features afterwards).
    """

    __slots__ = ("coords", "features")

    def __init__(self, coords: np.ndarray, features: np.ndarray | None = None):
        coords = np.array(coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[0] < 2:
            raise ValueError(
                f"trajectory needs an (H+1, d) array with H >= 1, got shape {coords.shape}"
            )
        coords.setflags(write=False)
        if features is not None:
            features = np.array(features, dtype=np.float64)
            if features.ndim != 2 or features.shape[0] != coords.shape[0]:
                raise ValueError(
                    f"features shape {features.shape} does not match {coords.shape[0]} states"
                )
            features.setflags(write=False)
        self.coords = coords
        self.features = features

    @property
    def horizon(self) -> int:
        return self.coords.shape[0] - 1

    @property
    def d(self) -> int:
        return self.coords.shape[1]

    def __len__(self) -> int:
        return self.coords.shape[0]

    @property
    def states(self) -> list[State]:
        feats = self.features
        return [
            State(self.coords[t], None if feats is None else feats[t])
            for t in range(len(self))
        ]

    def state(self, t: int) -> State:
        return State(self.coords[t], None if self.features is None else self.features[t])

    @classmethod
    def from_states(cls, states) -> "Trajectory":
        states = list(states)
        coords = np.stack([s.coords for s in states])
        has_feats = [s.features is not None for s in states]
        if all(has_feats):
            feats = np.stack([s.features for s in states])
        elif any(has_feats):
            raise ValueError("either all states carry features or none do")
        else:
            feats = None
        return cls(coords, feats)

    def bbox_diagonal(self) -> float:
        span = self.coords.max(axis=0) - self.coords.min(axis=0)
        return float(np.linalg.norm(span))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash(self.coords.tobytes())

    def __repr__(self) -> str:
        return f"Trajectory(H={self.horizon}, d={self.d})"

    # -- wire format: {"horizon": H, "states": [[...], ...]}; features are
    #    intentionally omitted and recomputed by the environment on load.

    def to_json_dict(self) -> dict:
        return {"horizon": self.horizon, "states": self.coords.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, obj: dict) -> "Trajectory":
        coords = np.asarray(obj["states"], dtype=np.float64)
        traj = cls(coords)
        if traj.horizon != obj["horizon"]:
            raise ValueError(
                f"horizon field {obj['horizon']} does not match {traj.horizon}"
            )
        return traj

    @classmethod
    def from_json(cls, text: str) -> "Trajectory":
        return cls.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class Window:
    """Inclusive index range [start, end] of a trajectory, length >= 3."""

    start: int
    end: int

    def __post_init__(self):
        if self.start < 0 or self.start >= self.end:
            raise ValueError(f"need 0 <= start < end, got [{self.start}, {self.end}]")
        if self.length < 3:
            raise ValueError(f"window length {self.length} < 3")

    @property
    def length(self) -> int:
        return self.end - self.start + 1

    def validate_for(self, traj: Trajectory) -> None:
        if self.end > traj.horizon:
            raise ValueError(
                f"window end {self.end} exceeds trajectory horizon {traj.horizon}"
            )


@dataclass(frozen=True)
class DeformationConfig:
    """Noise scale and endpoint handling for trajectory deformations.

    ``sigma`` is the per-entry std of the waypoint noise before shaping.
    When None, a scale-free default is used: 10% of the trajectory's
    bounding-box diagonal divided by the shaping operator's RMS
    displacement gain, so the *displacement* field (not the raw noise)
    lands near 10% of the trajectory's extent regardless of horizon.
    """

    sigma: float | None = None
    preserve_endpoints: bool = True

    def __post_init__(self):
        if self.sigma is not None:
            if not np.isfinite(self.sigma) or self.sigma <= 0:
                raise ValueError(f"sigma must be finite and positive, got {self.sigma}")


_MATRIX_CACHE: dict[int, np.ndarray] = {}
_MATRIX_LOCK = threading.Lock()


def _second_difference_operator(L: int) -> np.ndarray:
    """(L+2) x L matrix whose column k carries the stencil (1, -2, 1)."""
    A = np.zeros((L + 2, L))
    idx = np.arange(L)
    A[idx, idx] = 1.0
    A[idx + 1, idx] = -2.0
    A[idx + 2, idx] = 1.0
    return A


def _invert_gram(L: int) -> np.ndarray:
    """Invert the pentadiagonal Gram matrix via banded Cholesky.

    The Gram matrix has condition number ~L^4, so a plain double-precision
    inverse leaves a residual near 1e-8 at L=200. Running the banded solve
    in extended precision and rounding once at the end keeps the residual
    at the float64 representation floor.
    """
    A = _second_difference_operator(L)
    G = (A.T @ A).astype(np.longdouble)  # integer entries, exact
    C = np.zeros((L, L), dtype=np.longdouble)
    for i in range(L):
        s = G[i, i]
        if i >= 1:
            s -= C[i, i - 1] ** 2
        if i >= 2:
            s -= C[i, i - 2] ** 2
        C[i, i] = np.sqrt(s)
        if i + 1 < L:
            v = G[i + 1, i]
            if i >= 1:
                v -= C[i + 1, i - 1] * C[i, i - 1]
            C[i + 1, i] = v / C[i, i]
        if i + 2 < L:
            C[i + 2, i] = G[i + 2, i] / C[i, i]
    eye = np.eye(L, dtype=np.longdouble)
    Y = np.zeros((L, L), dtype=np.longdouble)
    for i in range(L):
        acc = eye[i].copy()
        if i >= 1:
            acc -= C[i, i - 1] * Y[i - 1]
        if i >= 2:
            acc -= C[i, i - 2] * Y[i - 2]
        Y[i] = acc / C[i, i]
    X = np.zeros((L, L), dtype=np.longdouble)
    for i in range(L - 1, -1, -1):
        acc = Y[i].copy()
        if i + 1 < L:
            acc -= C[i + 1, i] * X[i + 1]
        if i + 2 < L:
            acc -= C[i + 2, i] * X[i + 2]
        X[i] = acc / C[i, i]
    M = X.astype(np.float64)
    return np.triu(M) + np.triu(M, 1).T  # exactly symmetric


def build_accel_norm_matrix(L: int) -> np.ndarray:
    """Inverse Gram matrix of the second-difference operator, cached per L.

    Shapes raw per-waypoint noise into smooth displacement fields: the
    result is symmetric positive definite, and a unit impulse produces a
    bell-shaped displacement instead of a spike.
    """
    if L < 1:
        raise ValueError(f"need at least one deformable waypoint, got L={L}")
    cached = _MATRIX_CACHE.get(L)
    if cached is not None:
        return cached
    with _MATRIX_LOCK:
        cached = _MATRIX_CACHE.get(L)
        if cached is None:
            cached = _invert_gram(L)
            cached.setflags(write=False)
            _MATRIX_CACHE[L] = cached
        return cached


def displacement_gain(L: int) -> float:
    """RMS per-waypoint displacement produced by unit-std noise."""
    M = build_accel_norm_matrix(L)
    return float(np.sqrt(np.mean(np.sum(M * M, axis=1))))


def _deformable_count(traj: Trajectory, preserve_endpoints: bool) -> int:
    return traj.horizon - 1 if preserve_endpoints else traj.horizon + 1


def _effective_sigma(traj: Trajectory, cfg: DeformationConfig, L: int) -> float:
    if cfg.sigma is not None:
        return cfg.sigma
    diag = traj.bbox_diagonal()
    if diag <= 0.0:
        diag = 1e-3
    return 0.1 * diag / displacement_gain(L)


def deform(traj: Trajectory, lam: np.ndarray, cfg: DeformationConfig) -> Trajectory:
    """Displace waypoints by the smoothed noise field: coords + M @ lam.

    ``lam`` has one row per deformable waypoint (interior waypoints when
    endpoints are preserved, all of them otherwise) and one column per
    coordinate dimension. Features are dropped; recompute them through the
    environment if needed.
    """
    L = _deformable_count(traj, cfg.preserve_endpoints)
    lam = np.asarray(lam, dtype=np.float64)
    if lam.shape != (L, traj.d):
        raise ValueError(f"lambda shape {lam.shape} != expected {(L, traj.d)}")
    M = build_accel_norm_matrix(L)
    coords = np.array(traj.coords)
    if cfg.preserve_endpoints:
        coords[1:-1] += M @ lam
    else:
        coords += M @ lam
    return Trajectory(coords)


def sample_alternatives(
    traj: Trajectory, count: int, cfg: DeformationConfig, rng: np.random.Generator
) -> list[Trajectory]:
    """Draw ``count`` independent Gaussian deformations of ``traj``."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    L = _deformable_count(traj, cfg.preserve_endpoints)
    sigma = _effective_sigma(traj, cfg, L)
    return [
        deform(traj, rng.normal(0.0, sigma, size=(L, traj.d)), cfg)
        for _ in range(count)
    ]


def slice_window(traj: Trajectory, window: Window) -> Trajectory:
    """The window's states as a standalone trajectory."""
    window.validate_for(traj)
    coords = traj.coords[window.start : window.end + 1]
    feats = None if traj.features is None else traj.features[window.start : window.end + 1]
    return Trajectory(coords, feats)


def splice_window(traj: Trajectory, window: Window, snippet: Trajectory) -> Trajectory:
    """Replace the window's states with the snippet's."""
    window.validate_for(traj)
    if len(snippet) != window.length:
        raise ValueError(
            f"snippet length {len(snippet)} != window length {window.length}"
        )
    coords = np.array(traj.coords)
    coords[window.start : window.end + 1] = snippet.coords
    return Trajectory(coords)
