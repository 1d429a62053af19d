import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spike_mh import envs
from spike_mh.envs import (
    ACROBOT,
    CARTPOLE,
    AcrobotState,
    CartPoleState,
    EpisodeFinishedError,
    acrobot_step,
    cartpole_step,
    initial_state,
    reset,
    run_episode,
)


def balancing_policy(obs):
    return int(obs[2] + 0.5 * obs[3] + 0.1 * obs[1] + 0.05 * obs[0] > 0)


def acrobot_energy(state):
    t1, t2, d1, d2 = state.as_tuple()
    m1 = m2 = 1.0
    l1, lc1, lc2, inertia, g = 1.0, 0.5, 0.5, 1.0, 9.8
    m11 = m1 * lc1**2 + m2 * (l1**2 + lc2**2 + 2 * l1 * lc2 * math.cos(t2)) + 2 * inertia
    m12 = m2 * (lc2**2 + l1 * lc2 * math.cos(t2)) + inertia
    m22 = m2 * lc2**2 + inertia
    kinetic = 0.5 * (m11 * d1 * d1 + 2 * m12 * d1 * d2 + m22 * d2 * d2)
    potential = -(m1 * lc1 + m2 * l1) * g * math.cos(t1) - m2 * lc2 * g * math.cos(t1 + t2)
    return kinetic + potential


class TestReset:
    def test_same_seed_same_observation(self):
        assert np.array_equal(reset(CARTPOLE, 42), reset(CARTPOLE, 42))
        assert np.array_equal(reset(ACROBOT, 42), reset(ACROBOT, 42))

    def test_cartpole_bounds_over_many_seeds(self):
        obs = np.array([reset(CARTPOLE, s) for s in range(10_000)])
        assert obs.shape == (10_000, 4)
        assert np.all(np.abs(obs) <= 0.05)

    def test_acrobot_bounds_over_many_seeds(self):
        obs = np.array([reset(ACROBOT, s) for s in range(10_000)])
        assert obs.shape == (10_000, 6)
        assert np.all(obs[:, 0] >= math.cos(0.1)) and np.all(obs[:, 0] <= 1.0)
        assert np.all(np.abs(obs[:, :4]) <= 1.0)

    def test_unknown_env(self):
        with pytest.raises(ValueError):
            reset("mountaincar", 0)


class TestCartPole:
    def test_push_right_from_rest(self):
        state, out = cartpole_step(CartPoleState(0.0, 0.0, 0.0, 0.0), 1)
        assert state.x == 0.0 and state.theta == 0.0
        assert state.x_dot == pytest.approx(0.19512, rel=5e-5)
        assert state.theta_dot == pytest.approx(-0.29268, rel=5e-5)
        assert out.reward == 1.0
        assert not out.terminated and not out.truncated

    def test_leaving_track_terminates(self):
        _, out = cartpole_step(CartPoleState(2.39, 3.0, 0.0, 0.0), 1)
        assert out.terminated

    def test_truncates_at_step_budget(self):
        _, out = cartpole_step(CartPoleState(0.0, 0.0, 0.0, 0.0), 1, steps_taken=499)
        assert out.truncated and not out.terminated

    def test_stepping_finished_episode_is_an_error(self):
        with pytest.raises(EpisodeFinishedError):
            cartpole_step(CartPoleState(2.5, 0.0, 0.0, 0.0), 0)
        with pytest.raises(EpisodeFinishedError):
            cartpole_step(CartPoleState(0.0, 0.0, 0.0, 0.0), 0, steps_taken=500)
        env = envs.Env(CARTPOLE)
        env.reset(0)
        while not env.step(0).done:
            pass
        with pytest.raises(EpisodeFinishedError):
            env.step(0)

    def test_invalid_action(self):
        with pytest.raises(ValueError):
            cartpole_step(CartPoleState(0.0, 0.0, 0.0, 0.0), 2)


class TestAcrobot:
    def test_rest_is_equilibrium_without_torque(self):
        state, out = acrobot_step(AcrobotState(0.0, 0.0, 0.0, 0.0), 1)
        assert state.as_tuple() == (0.0, 0.0, 0.0, 0.0)
        assert not out.terminated
        assert out.reward == -1.0

    def test_observation_layout(self):
        s = AcrobotState(0.3, -0.2, 1.0, -2.0)
        obs = envs.observe(s)
        assert obs.tolist() == [math.cos(0.3), math.sin(0.3), math.cos(-0.2), math.sin(-0.2), 1.0, -2.0]

    def test_goal_step_rewards_zero(self):
        s = AcrobotState(2.0, 0.0, 3.0, 0.0)
        assert not s.is_terminal()
        _, out = acrobot_step(s, 1)
        assert out.terminated and out.reward == 0.0

    def test_energy_drift_without_torque(self):
        for start in [(0.5, 0.3, 0.0, 0.0), (1.0, -0.5, 0.0, 0.0), (0.2, 0.0, 0.0, 0.0)]:
            state = AcrobotState(*start)
            e0 = acrobot_energy(state)
            for i in range(50):
                state, _ = acrobot_step(state, 1, i)
                assert abs(acrobot_energy(state) - e0) < 0.01 * abs(e0)

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi),
        st.floats(-4 * math.pi, 4 * math.pi), st.floats(-9 * math.pi, 9 * math.pi),
        st.integers(0, 2),
    )
    def test_state_invariants_after_step(self, t1, t2, d1, d2, action):
        state = AcrobotState(t1, t2, d1, d2)
        if state.is_terminal():
            return
        new, out = acrobot_step(state, action)
        assert -math.pi <= new.theta1 <= math.pi and -math.pi <= new.theta2 <= math.pi
        assert abs(new.theta1_dot) <= 4 * math.pi and abs(new.theta2_dot) <= 9 * math.pi
        assert np.all(np.abs(out.observation[:4]) <= 1.0)
        assert all(math.isfinite(v) for v in new.as_tuple())


class TestConformance:
    @pytest.mark.parametrize("kind", [CARTPOLE, ACROBOT])
    def test_matches_reference_trajectories(self, reference_trajectories, kind):
        step = cartpole_step if kind == CARTPOLE else acrobot_step
        for traj in reference_trajectories[kind]:
            state = initial_state(kind, traj["seed"])
            assert list(state.as_tuple()) == traj["states"][0]
            for i, action in enumerate(traj["actions"]):
                state, out = step(state, action, i)
                np.testing.assert_allclose(state.as_tuple(), traj["states"][i + 1], rtol=0, atol=1e-6)
                assert out.reward == traj["rewards"][i]
                assert out.terminated == traj["terminated"][i]


class TestRunEpisode:
    def test_always_left_drops_the_pole(self):
        reward, steps = run_episode(CARTPOLE, lambda obs: 0, seed=3)
        assert reward < 500 and reward == steps

    def test_balancing_policy_reaches_the_maximum(self):
        for seed in range(5):
            assert run_episode(CARTPOLE, balancing_policy, seed) == (500.0, 500)

    def test_acrobot_without_torque_never_reaches_goal(self):
        assert run_episode(ACROBOT, lambda obs: 1, seed=0) == (-500.0, 500)

    def test_policy_reset_called_each_episode(self):
        calls = []

        class Policy:
            def reset(self):
                calls.append(1)

            def __call__(self, obs):
                return 0

        p = Policy()
        run_episode(CARTPOLE, p, 0)
        run_episode(CARTPOLE, p, 1)
        assert len(calls) == 2

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32), st.lists(st.integers(0, 2), min_size=500, max_size=500))
    def test_reward_bounds_and_determinism(self, seed, actions):
        for kind, n_actions, lo, hi in [(CARTPOLE, 2, 1, 500), (ACROBOT, 3, -500, -1)]:
            seq = [a % n_actions for a in actions]
            results = []
            for _ in range(2):
                it = iter(seq)
                results.append(run_episode(kind, lambda obs: next(it), seed))
            assert results[0] == results[1]
            assert lo <= results[0][0] <= hi
