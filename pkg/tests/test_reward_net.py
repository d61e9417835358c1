import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trajteach.reward_net import (
    AdamState,
    NetParams,
    RewardEnsemble,
    adam_step,
    batch_state_rewards,
    ensemble_state_reward,
    ensemble_traj_reward,
    grad_input,
    grad_params,
    init_ensemble,
    init_net,
    params_from_bytes,
    params_header,
    params_to_bytes,
    state_reward,
    traj_reward,
)
from trajteach.trajectory import State, Trajectory


def zero_net(d_aug=2, width=4):
    return NetParams(
        w1=np.zeros((width, d_aug)),
        b1=np.zeros(width),
        w2=np.zeros((width, width)),
        b2=np.zeros(width),
        w3=np.zeros((1, width)),
        b3=np.zeros(1),
    )


def constant_net(value, d_aug=2, width=4):
    # zero weights, output bias only: r == tanh(b3) for any input
    theta = zero_net(d_aug, width)
    return theta.replace_arrays(
        theta.arrays()[:5] + (np.array([math.atanh(value)]),)
    )


def scalar_chain_net(w1, b1, w2, b2, w3, b3, alpha=0.01):
    """1-unit-per-layer network for pencil-and-paper checks."""
    return NetParams(
        w1=np.array([[w1]]),
        b1=np.array([b1]),
        w2=np.array([[w2]]),
        b2=np.array([b2]),
        w3=np.array([[w3]]),
        b3=np.array([b3]),
        alpha_leak=alpha,
    )


def leaky(z, a=0.01):
    return z if z > 0 else a * z


def random_traj(rng, H, d_aug):
    return Trajectory(rng.normal(size=(H + 1, d_aug)))


# -- independent oracle: central finite differences over a scalar function


def fd_grad(f, x, h=1e-5):
    x = np.asarray(x, dtype=np.float64)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h
        g.flat[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def fd_param_grads(theta, f, h=1e-5):
    out = []
    for k, arr in enumerate(theta.arrays()):
        g = np.zeros_like(arr)
        for i in range(arr.size):
            arrs_p = list(theta.arrays())
            arrs_m = list(theta.arrays())
            bump = np.zeros_like(arr)
            bump.flat[i] = h
            arrs_p[k] = arr + bump
            arrs_m[k] = arr - bump
            g.flat[i] = (
                f(theta.replace_arrays(arrs_p)) - f(theta.replace_arrays(arrs_m))
            ) / (2 * h)
        out.append(g)
    return out


def assert_close_grads(analytic, numeric, rel=1e-4, floor=1e-7):
    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    tol = np.maximum(floor, rel * np.maximum(np.abs(analytic), np.abs(numeric)))
    assert np.all(np.abs(analytic - numeric) <= tol), (
        f"max err {np.abs(analytic - numeric).max():.3e}"
    )


class TestInit:
    def test_deterministic(self):
        a = init_net(3, 8, np.random.default_rng(11))
        b = init_net(3, 8, np.random.default_rng(11))
        for x, y in zip(a.arrays(), b.arrays()):
            assert np.array_equal(x, y)

    def test_seeds_differ(self):
        a = init_net(3, 8, np.random.default_rng(1))
        b = init_net(3, 8, np.random.default_rng(2))
        assert any(not np.array_equal(x, y) for x, y in zip(a.arrays(), b.arrays()))

    def test_param_count(self):
        theta = init_net(4, 64, np.random.default_rng(0))
        assert theta.n_params == 4 * 64 + 64 + 64 * 64 + 64 + 64 * 1 + 1 == 4545
        theta7 = init_net(7, 64, np.random.default_rng(0))
        assert theta7.n_params == 7 * 64 + 64 + 64 * 64 + 64 + 64 * 1 + 1 == 4737

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            init_net(0, 4, np.random.default_rng(0))
        with pytest.raises(ValueError):
            init_net(4, 0, np.random.default_rng(0))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            NetParams(
                w1=np.array([[np.nan]]),
                b1=np.zeros(1),
                w2=np.zeros((1, 1)),
                b2=np.zeros(1),
                w3=np.zeros((1, 1)),
                b3=np.zeros(1),
            )


class TestForward:
    def test_zero_net_outputs_zero(self):
        theta = zero_net()
        assert state_reward(theta, State(np.array([3.0, -2.0]))) == 0.0

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_output_strictly_inside_unit_interval(self, seed):
        rng = np.random.default_rng(seed)
        theta = init_net(3, 8, rng)
        x = rng.normal(scale=3.0, size=3)
        assert abs(state_reward(theta, x)) < 1.0

    def test_hand_computed_composition(self):
        theta = scalar_chain_net(w1=0.7, b1=-0.2, w2=-1.3, b2=0.4, w3=0.9, b3=0.1)
        x = 1.5
        z1 = 0.7 * x - 0.2
        a1 = leaky(z1)
        z2 = -1.3 * a1 + 0.4
        a2 = leaky(z2)
        expected = math.tanh(0.9 * a2 + 0.1)
        assert abs(state_reward(theta, np.array([x])) - expected) < 1e-12

    def test_width_mismatch(self):
        theta = zero_net(d_aug=2)
        with pytest.raises(ValueError):
            state_reward(theta, np.array([1.0, 2.0, 3.0]))


class TestTrajReward:
    def test_zero_net(self):
        traj = random_traj(np.random.default_rng(0), 5, 2)
        assert traj_reward(zero_net(), traj) == 0.0

    def test_minimal_trajectory_is_sum_of_two(self):
        theta = init_net(2, 4, np.random.default_rng(3))
        traj = random_traj(np.random.default_rng(4), 1, 2)
        expected = state_reward(theta, traj.coords[0]) + state_reward(
            theta, traj.coords[1]
        )
        assert abs(traj_reward(theta, traj) - expected) < 1e-12

    def test_constant_states_sum(self):
        theta = init_net(2, 4, np.random.default_rng(5))
        s = np.array([0.3, -0.7])
        traj = Trajectory(np.tile(s, (6, 1)))
        assert abs(traj_reward(theta, traj) - 6 * state_reward(theta, s)) < 1e-12

    def test_bounded_by_state_count(self):
        rng = np.random.default_rng(6)
        theta = init_net(2, 8, rng)
        traj = random_traj(rng, 9, 2)
        assert abs(traj_reward(theta, traj)) < 10

    def test_uses_features_when_net_expects_them(self):
        coords = np.zeros((3, 2))
        feats = np.array([[1.0], [2.0], [3.0]])
        traj = Trajectory(coords, feats)
        theta = init_net(3, 4, np.random.default_rng(7))
        by_hand = sum(
            state_reward(theta, np.concatenate([coords[t], feats[t]]))
            for t in range(3)
        )
        assert abs(traj_reward(theta, traj) - by_hand) < 1e-12


class TestEnsemble:
    def test_single_member_equals_model(self):
        theta = init_net(2, 4, np.random.default_rng(8))
        s = State(np.array([0.1, 0.2]))
        assert ensemble_state_reward(RewardEnsemble((theta,)), s) == state_reward(
            theta, s
        )

    def test_symmetric_pair_cancels(self):
        ens = RewardEnsemble((constant_net(0.4), constant_net(-0.4)))
        assert abs(ensemble_state_reward(ens, State(np.array([1.0, 1.0])))) < 1e-15

    def test_mean_of_three(self):
        rng = np.random.default_rng(9)
        ens = init_ensemble(3, 2, 4, rng)
        s = State(np.array([0.5, -0.5]))
        vals = [state_reward(m, s) for m in ens.members]
        assert abs(ensemble_state_reward(ens, s) - np.mean(vals)) < 1e-12

    def test_mean_within_member_range(self):
        rng = np.random.default_rng(10)
        ens = init_ensemble(5, 3, 8, rng)
        traj = random_traj(rng, 6, 3)
        vals = [traj_reward(m, traj) for m in ens.members]
        mean = ensemble_traj_reward(ens, traj)
        assert min(vals) <= mean <= max(vals)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            RewardEnsemble(())


class TestGradParams:
    def test_zero_adjoint_zero_gradient(self):
        rng = np.random.default_rng(12)
        theta = init_net(2, 4, rng)
        traj = random_traj(rng, 4, 2)
        g = grad_params(theta, [traj], [0.0])
        assert all(np.all(a == 0) for a in g.arrays())

    def test_final_bias_gradient_closed_form(self):
        # dR/db3 = sum over states of (1 - tanh^2(z3)) = sum (1 - r^2)
        rng = np.random.default_rng(13)
        theta = init_net(3, 6, rng)
        traj = random_traj(rng, 7, 3)
        r = batch_state_rewards(theta, traj.coords)
        expected = np.sum(1.0 - r**2)
        g = grad_params(theta, [traj], [1.0])
        assert abs(g.b3[0] - expected) < 1e-10

    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_matches_finite_differences(self, seed):
        rng = np.random.default_rng(100 + seed)
        theta = init_net(3, 5, rng)
        trajs = [random_traj(rng, 4, 3), random_traj(rng, 4, 3)]
        adjoints = rng.normal(size=2)

        def loss(th):
            return sum(a * traj_reward(th, t) for t, a in zip(trajs, adjoints))

        analytic = grad_params(theta, trajs, adjoints)
        numeric = fd_param_grads(theta, loss)
        for a, n in zip(analytic.arrays(), numeric):
            assert_close_grads(a, n)


class TestGradInput:
    def test_zero_net_zero_gradient(self):
        g = grad_input(RewardEnsemble((zero_net(),)), State(np.array([1.0, 2.0])))
        assert np.all(g == 0)

    def test_goal_distance_feature_chain_rule(self):
        # net reads a single feature phi = |s - g|; its input gradient must
        # point along (s - g) after the chain rule through the Jacobian
        goal = np.array([1.0, 2.0])
        s = np.array([0.2, 0.7])
        dist = float(np.linalg.norm(s - goal))
        jac = ((s - goal) / dist)[None, :]  # (1, d)
        theta = scalar_chain_net(w1=1.0, b1=0.0, w2=1.0, b2=0.0, w3=-0.8, b3=0.0)
        # single-input net: feed the feature only, so d_aug = 1 and coords
        # enter solely through the Jacobian pull-back
        state = State(coords=s, features=np.array([dist]))
        ens = RewardEnsemble((theta,))

        def f(coords):
            phi = np.linalg.norm(coords - goal)
            return state_reward(theta, np.array([phi]))

        g = np.zeros(2)
        x = np.array([dist])
        # analytic d r/d phi at phi=dist
        dr_dphi = grad_input(
            RewardEnsemble(
                (
                    NetParams(
                        w1=np.hstack([np.zeros((1, 2)), np.ones((1, 1))]),
                        b1=np.zeros(1),
                        w2=np.ones((1, 1)),
                        b2=np.zeros(1),
                        w3=np.array([[-0.8]]),
                        b3=np.zeros(1),
                    ),
                )
            ),
            state,
            feature_jacobian=jac,
        )
        direction = dr_dphi / np.linalg.norm(dr_dphi)
        expected_dir = (s - goal) / dist
        assert (
            np.linalg.norm(direction - expected_dir) < 1e-10
            or np.linalg.norm(direction + expected_dir) < 1e-10
        )
        assert_close_grads(dr_dphi, fd_grad(f, s))

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_finite_differences_with_features(self, seed):
        rng = np.random.default_rng(200 + seed)
        d, n = 2, 2
        ens = init_ensemble(3, d + n, 5, rng)
        center = rng.normal(size=d)

        def feats(c):
            return np.array([np.linalg.norm(c - center), c[1] ** 2])

        def jac(c):
            diff = c - center
            return np.vstack([diff / np.linalg.norm(diff), [0.0, 2 * c[1]]])

        coords = rng.normal(size=d) + 1.0

        def f(c):
            return ensemble_state_reward(ens, np.concatenate([c, feats(c)]))

        analytic = grad_input(
            ens, State(coords, feats(coords)), feature_jacobian=jac(coords)
        )
        assert_close_grads(analytic, fd_grad(f, coords))

    def test_requires_jacobian_with_features(self):
        ens = init_ensemble(1, 3, 4, np.random.default_rng(0))
        with pytest.raises(ValueError):
            grad_input(ens, State(np.array([1.0, 2.0]), np.array([0.5])))


class TestAdam:
    def test_zero_gradient_leaves_params(self):
        theta = init_net(2, 4, np.random.default_rng(20))
        zero_grads = theta.replace_arrays([np.zeros_like(a) for a in theta.arrays()])
        new, st_ = adam_step(theta, zero_grads, AdamState.for_params(theta))
        assert st_.step == 1
        for a, b in zip(theta.arrays(), new.arrays()):
            assert np.array_equal(a, b)

    def test_first_step_magnitude(self):
        # bias-corrected first step is lr * g / (|g| + eps') ~ lr * sign(g)
        theta = zero_net(2, 4)
        g = theta.replace_arrays(
            [np.full_like(a, 0.5) for a in theta.arrays()]
        )
        st_ = AdamState.for_params(theta, lr=0.001)
        new, _ = adam_step(theta, g, st_)
        for p_new in new.arrays():
            assert np.allclose(np.abs(p_new), 0.001, rtol=1e-6)

    def test_deterministic(self):
        rng = np.random.default_rng(21)
        theta = init_net(2, 4, rng)
        g = theta.replace_arrays([np.ones_like(a) for a in theta.arrays()])
        out1 = adam_step(theta, g, AdamState.for_params(theta))
        out2 = adam_step(theta, g, AdamState.for_params(theta))
        for a, b in zip(out1[0].arrays(), out2[0].arrays()):
            assert np.array_equal(a, b)


class TestSerialization:
    def test_round_trip_bitwise(self):
        theta = init_net(3, 6, np.random.default_rng(30), alpha_leak=0.05)
        back = params_from_bytes(params_header(theta), params_to_bytes(theta))
        assert back.alpha_leak == theta.alpha_leak
        for a, b in zip(theta.arrays(), back.arrays()):
            assert np.array_equal(a, b)

    def test_size_mismatch_rejected(self):
        theta = init_net(2, 3, np.random.default_rng(31))
        payload = params_to_bytes(theta)[:-8]
        with pytest.raises(ValueError):
            params_from_bytes(params_header(theta), payload)
