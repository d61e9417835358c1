"""Per-state reward networks with hand-derived gradients.

Each reward model is a small fully connected network: two leaky-ReLU
hidden layers and a tanh output, so every state score lies in (-1, 1) and
a trajectory score (the sum over its states) is bounded by the number of
states. Gradients with respect to parameters and inputs are written out
by hand -- no autodiff dependency -- and checked against finite
differences in the test suite. Training uses Adam.

Everything here is functional: parameters are immutable values and each
update returns fresh ones, which keeps ensemble members independent and
training reproducible from seeds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .trajectory import State, Trajectory

__all__ = [
    "NetParams",
    "RewardEnsemble",
    "AdamState",
    "init_net",
    "init_ensemble",
    "state_reward",
    "traj_reward",
    "ensemble_state_reward",
    "ensemble_traj_reward",
    "grad_params",
    "grad_input",
    "adam_step",
    "params_to_bytes",
    "params_from_bytes",
]

_FIELDS = ("w1", "b1", "w2", "b2", "w3", "b3")


@dataclass(frozen=True)
class NetParams:
    """Weights of one reward model: (d_aug -> W -> W -> 1)."""

    w1: np.ndarray  # (W, d_aug)
    b1: np.ndarray  # (W,)
    w2: np.ndarray  # (W, W)
    b2: np.ndarray  # (W,)
    w3: np.ndarray  # (1, W)
    b3: np.ndarray  # (1,)
    alpha_leak: float = 0.01

    def __post_init__(self):
        for name in _FIELDS:
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite entries in {name}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        W = self.w1.shape[0]
        expected = {
            "w1": (W, self.d_aug),
            "b1": (W,),
            "w2": (W, W),
            "b2": (W,),
            "w3": (1, W),
            "b3": (1,),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(
                    f"{name} has shape {getattr(self, name).shape}, expected {shape}"
                )

    @property
    def d_aug(self) -> int:
        return self.w1.shape[1]

    @property
    def width(self) -> int:
        return self.w1.shape[0]

    @property
    def n_params(self) -> int:
        return sum(getattr(self, name).size for name in _FIELDS)

    def arrays(self) -> tuple[np.ndarray, ...]:
        return tuple(getattr(self, name) for name in _FIELDS)

    def replace_arrays(self, arrays) -> "NetParams":
        return NetParams(*arrays, alpha_leak=self.alpha_leak)


@dataclass(frozen=True)
class RewardEnsemble:
    """Independently initialized reward models; the mean is the working reward."""

    members: tuple[NetParams, ...]

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("ensemble needs at least one member")
        if len({m.d_aug for m in members}) != 1:
            raise ValueError("ensemble members must share input width")
        object.__setattr__(self, "members", members)

    @property
    def m(self) -> int:
        return len(self.members)

    @property
    def d_aug(self) -> int:
        return self.members[0].d_aug


def init_net(
    d_aug: int, width: int, rng: np.random.Generator, alpha_leak: float = 0.01
) -> NetParams:
    """Scaled-uniform init: weights ~ U(+-sqrt(6/(fan_in+fan_out))), zero biases."""
    if d_aug < 1 or width < 1:
        raise ValueError(f"need d_aug >= 1 and width >= 1, got {d_aug}, {width}")

    def layer(fan_out, fan_in):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-bound, bound, size=(fan_out, fan_in))

    return NetParams(
        w1=layer(width, d_aug),
        b1=np.zeros(width),
        w2=layer(width, width),
        b2=np.zeros(width),
        w3=layer(1, width),
        b3=np.zeros(1),
        alpha_leak=alpha_leak,
    )


def init_ensemble(
    m: int, d_aug: int, width: int, rng: np.random.Generator, alpha_leak: float = 0.01
) -> RewardEnsemble:
    return RewardEnsemble(
        tuple(init_net(d_aug, width, rng, alpha_leak) for _ in range(m))
    )


def _leaky(z: np.ndarray, alpha: float) -> np.ndarray:
    return np.where(z > 0, z, alpha * z)


def _leaky_slope(z: np.ndarray, alpha: float) -> np.ndarray:
    return np.where(z > 0, 1.0, alpha)


def _forward_raw(arrs, alpha: float, X: np.ndarray):
    w1, b1, w2, b2, w3, b3 = arrs
    z1 = X @ w1.T + b1
    a1 = _leaky(z1, alpha)
    z2 = a1 @ w2.T + b2
    a2 = _leaky(z2, alpha)
    z3 = a2 @ w3.T + b3  # (B, 1)
    r = np.tanh(z3[:, 0])
    return r, (X, z1, a1, z2, a2, r)


def _forward(theta: NetParams, X: np.ndarray):
    """Batched forward pass; returns per-state rewards and the cache for backprop."""
    return _forward_raw(theta.arrays(), theta.alpha_leak, X)


def batch_state_rewards(theta: NetParams, X: np.ndarray) -> np.ndarray:
    """Rewards for a (B, d_aug) batch of augmented states."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != theta.d_aug:
        raise ValueError(f"batch shape {X.shape} incompatible with d_aug={theta.d_aug}")
    return _forward(theta, X)[0]


def _augmented_input(s: State | np.ndarray, d_aug: int) -> np.ndarray:
    x = s.augmented() if isinstance(s, State) else np.asarray(s, dtype=np.float64)
    if x.shape != (d_aug,):
        raise ValueError(f"augmented state has width {x.shape[0]}, net expects {d_aug}")
    return x


def state_reward(theta: NetParams, s: State | np.ndarray) -> float:
    x = _augmented_input(s, theta.d_aug)
    return float(batch_state_rewards(theta, x[None, :])[0])


def _traj_matrix(theta: NetParams, traj: Trajectory) -> np.ndarray:
    if theta.d_aug == traj.d:
        return traj.coords
    if traj.features is not None and theta.d_aug == traj.d + traj.features.shape[1]:
        return np.hstack([traj.coords, traj.features])
    raise ValueError(
        f"trajectory (d={traj.d}, features "
        f"{'none' if traj.features is None else traj.features.shape[1]}) "
        f"incompatible with net input width {theta.d_aug}"
    )


def traj_reward(theta: NetParams, traj: Trajectory) -> float:
    """Trajectory score: sum of per-state rewards over all H+1 states."""
    return float(batch_state_rewards(theta, _traj_matrix(theta, traj)).sum())


def ensemble_state_reward(ensemble: RewardEnsemble, s: State | np.ndarray) -> float:
    x = _augmented_input(s, ensemble.d_aug)
    vals = [batch_state_rewards(m, x[None, :])[0] for m in ensemble.members]
    return float(np.mean(vals))


def ensemble_traj_reward(ensemble: RewardEnsemble, traj: Trajectory) -> float:
    return float(np.mean([traj_reward(m, traj) for m in ensemble.members]))


def _backward_raw(arrs, alpha: float, cache, r_adjoint: np.ndarray):
    w1, _, w2, _, w3, _ = arrs
    X, z1, a1, z2, a2, r = cache
    dz3 = r_adjoint * (1.0 - r * r)  # (B,)
    gw3 = (dz3[None, :] @ a2).reshape(1, -1)
    gb3 = np.array([dz3.sum()])
    da2 = dz3[:, None] * w3  # (B, W)
    dz2 = da2 * _leaky_slope(z2, alpha)
    gw2 = dz2.T @ a1
    gb2 = dz2.sum(axis=0)
    da1 = dz2 @ w2
    dz1 = da1 * _leaky_slope(z1, alpha)
    gw1 = dz1.T @ X
    gb1 = dz1.sum(axis=0)
    dX = dz1 @ w1
    grads = (gw1, gb1, gw2, gb2, gw3, gb3)
    return grads, dX


def _backward(theta: NetParams, cache, r_adjoint: np.ndarray):
    """Reverse pass from per-state adjoints dL/dr to parameter and input grads."""
    return _backward_raw(theta.arrays(), theta.alpha_leak, cache, r_adjoint)


def grad_params(theta: NetParams, trajs, adjoints) -> NetParams:
    """Gradient of sum_k adjoint_k * R_theta(traj_k) w.r.t. every parameter.

    Returns a parameter-shaped container. Because a trajectory score is the
    plain sum of state scores, each state inherits its trajectory's adjoint.
    """
    trajs = list(trajs)
    adjoints = np.asarray(adjoints, dtype=np.float64)
    if adjoints.shape != (len(trajs),):
        raise ValueError(f"{len(trajs)} trajectories but adjoints {adjoints.shape}")
    if not np.all(np.isfinite(adjoints)):
        raise ValueError("non-finite adjoints")
    X = np.vstack([_traj_matrix(theta, t) for t in trajs])
    per_state = np.concatenate([np.full(len(t), a) for t, a in zip(trajs, adjoints)])
    _, cache = _forward(theta, X)
    grads, _ = _backward(theta, cache, per_state)
    return theta.replace_arrays(grads)


def batch_input_grads(theta: NetParams, X: np.ndarray) -> np.ndarray:
    """d(state reward)/d(augmented input), one row per state in the batch."""
    _, cache = _forward(theta, np.asarray(X, dtype=np.float64))
    _, dX = _backward(theta, cache, np.ones(X.shape[0]))
    return dX


def ensemble_coord_grads(
    ensemble: RewardEnsemble,
    coords: np.ndarray,
    feats: np.ndarray | None,
    jacs: np.ndarray | None,
) -> np.ndarray:
    """d(mean state reward)/d(coords) batched over states.

    ``jacs`` is the (B, n, d) stack of feature Jacobians; the feature block
    of the input gradient is pulled back through it (chain rule), the
    coordinate block passes straight through.
    """
    coords = np.asarray(coords, dtype=np.float64)
    d = coords.shape[1]
    if feats is None:
        X = coords
    else:
        X = np.hstack([coords, feats])
        if jacs is None:
            raise ValueError("feature Jacobians required when features are present")
    g = np.zeros_like(X)
    for member in ensemble.members:
        g += batch_input_grads(member, X)
    g /= ensemble.m
    if feats is None:
        return g
    return g[:, :d] + np.einsum("bn,bnd->bd", g[:, d:], jacs)


def grad_input(
    ensemble: RewardEnsemble,
    s: State,
    feature_jacobian: np.ndarray | None = None,
) -> np.ndarray:
    """Gradient of the ensemble-mean state reward w.r.t. the coordinates."""
    if s.features is None:
        return ensemble_coord_grads(ensemble, s.coords[None, :], None, None)[0]
    if feature_jacobian is None:
        raise ValueError("feature Jacobian required when the state carries features")
    jac = np.asarray(feature_jacobian, dtype=np.float64)
    return ensemble_coord_grads(
        ensemble, s.coords[None, :], s.features[None, :], jac[None, :, :]
    )[0]


@dataclass(frozen=True)
class AdamState:
    """First/second moment accumulators plus the step counter."""

    m: tuple[np.ndarray, ...]
    v: tuple[np.ndarray, ...]
    step: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, theta: NetParams, lr: float = 0.001) -> "AdamState":
        zeros = tuple(np.zeros_like(a) for a in theta.arrays())
        return cls(m=zeros, v=tuple(np.zeros_like(a) for a in theta.arrays()), lr=lr)


def adam_step(
    theta: NetParams, grads: NetParams, st: AdamState
) -> tuple[NetParams, AdamState]:
    """One Adam update; returns fresh parameters and optimizer state."""
    t = st.step + 1
    new_params, new_m, new_v = [], [], []
    bc1 = 1.0 - st.beta1**t
    bc2 = 1.0 - st.beta2**t
    for p, g, m, v in zip(theta.arrays(), grads.arrays(), st.m, st.v):
        m = st.beta1 * m + (1.0 - st.beta1) * g
        v = st.beta2 * v + (1.0 - st.beta2) * (g * g)
        update = st.lr * (m / bc1) / (np.sqrt(v / bc2) + st.eps)
        new_params.append(p - update)
        new_m.append(m)
        new_v.append(v)
    return (
        theta.replace_arrays(new_params),
        AdamState(
            m=tuple(new_m),
            v=tuple(new_v),
            step=t,
            lr=st.lr,
            beta1=st.beta1,
            beta2=st.beta2,
            eps=st.eps,
        ),
    )


# -- serialization: JSON header + flat little-endian float64 payload


def params_header(theta: NetParams) -> dict:
    return {
        "d_aug": theta.d_aug,
        "W": theta.width,
        "layers": [list(a.shape) for a in theta.arrays()],
        "alpha_leak": theta.alpha_leak,
    }


def params_to_bytes(theta: NetParams) -> bytes:
    return np.concatenate([a.ravel() for a in theta.arrays()]).astype("<f8").tobytes()


def params_from_bytes(header: dict, payload: bytes) -> NetParams:
    shapes = [tuple(s) for s in header["layers"]]
    total = sum(int(np.prod(s)) for s in shapes)
    flat = np.frombuffer(payload, dtype="<f8")
    if flat.size != total:
        raise ValueError(f"payload holds {flat.size} floats, header expects {total}")
    arrays, at = [], 0
    for shape in shapes:
        n = int(np.prod(shape))
        arrays.append(flat[at : at + n].reshape(shape).astype(np.float64))
        at += n
    return NetParams(*arrays, alpha_leak=header.get("alpha_leak", 0.01))


def params_dumps(theta: NetParams) -> tuple[str, bytes]:
    return json.dumps(params_header(theta)), params_to_bytes(theta)
