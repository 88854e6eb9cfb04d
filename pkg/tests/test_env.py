import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mlsh_arm import env
from mlsh_arm.env import (
    MAX_DOF,
    ArmConfig,
    Task,
    UnreachableTargetError,
    euclidean_distance,
    forward_kinematics,
    make_task_distribution,
    reset,
    sample_task,
    scara_arms,
    step,
    toy_task_distribution,
)
from oracles import fk_transform_chain

ARMS = list(scara_arms().values()) + [toy_task_distribution()[0].arm]
actions = arrays(np.float64, MAX_DOF, elements=st.floats(-3, 3, allow_nan=False))


def _straight(links=(0.2, 0.2, 0.1), z=0.25):
    return ArmConfig("s", links, z, ((-math.pi, math.pi),) * len(links))


class TestForwardKinematics:
    def test_straight_arm(self):
        np.testing.assert_allclose(forward_kinematics(_straight(), [0, 0, 0]), [0.5, 0, 0.25],
                                   atol=1e-15)

    def test_first_joint_pi_mirrors(self):
        np.testing.assert_allclose(forward_kinematics(_straight(), [math.pi, 0, 0]),
                                   [-0.5, 0, 0.25], atol=1e-15)

    @pytest.mark.parametrize("arm", ARMS, ids=lambda a: a.name)
    def test_matches_transform_chain(self, arm):
        rng = np.random.default_rng(0)
        for q in rng.uniform(-math.pi, math.pi, size=(200, arm.dof)):
            expected = fk_transform_chain(arm.link_lengths, arm.base_height, q)
            np.testing.assert_allclose(forward_kinematics(arm, q), expected, rtol=0, atol=1e-12)

    def test_wrong_arity(self):
        with pytest.raises(ValueError, match="3 joint angles"):
            forward_kinematics(_straight(), [0.0, 0.0])

    @given(st.lists(st.floats(-10, 10), min_size=3, max_size=3))
    def test_planar_reach_bound(self, q):
        arm = _straight()
        ee = forward_kinematics(arm, q)
        assert math.hypot(ee[0], ee[1]) <= sum(arm.link_lengths) + 1e-12


class TestTaskDistribution:
    def test_default_tasks(self):
        tasks = make_task_distribution()
        got = [(t.arm.name, t.target, t.label) for t in tasks]
        assert got == [
            ("3dof", (0.3305805, -0.1326121, 0.3746), "H"),
            ("3dof", (0.3325683, 0.0657366, 0.3746), "O"),
            ("4dof", (0.3305805, -0.1326121, 0.4868), "H"),
            ("4dof", (0.3325683, 0.0657366, 0.4868), "O"),
        ]
        assert [t.task_id for t in tasks] == [0, 1, 2, 3]

    def test_uniform_sampling(self):
        tasks = make_task_distribution()
        rng = np.random.default_rng(0)
        ids = [sample_task(tasks, rng).task_id for _ in range(10_000)]
        np.testing.assert_allclose(np.bincount(ids) / 1e4, 0.25, atol=0.02)

    def test_toy_distribution(self):
        tasks = toy_task_distribution()
        assert len(tasks) == 2
        assert {t.arm.dof for t in tasks} == {2}

    def test_unreachable_target(self):
        arm = _straight()
        with pytest.raises(UnreachableTargetError):
            Task(arm, (0.6, 0.0, 0.25), 0)
        with pytest.raises(UnreachableTargetError):
            Task(arm, (0.3, 0.0, 0.0), 0)

    def test_short_links_make_paper_targets_unreachable(self):
        short = {"3dof": ArmConfig("3dof", (0.1, 0.1, 0.1), 0.3746, ((-1, 1),) * 3),
                 "4dof": scara_arms()["4dof"]}
        with pytest.raises(UnreachableTargetError):
            make_task_distribution(short)

    def test_arm_invariants(self):
        with pytest.raises(ValueError):
            ArmConfig("bad", (0.1, -0.1), 0.0, ((-1, 1),) * 2)
        with pytest.raises(ValueError):
            ArmConfig("bad", (0.1, 0.1), 0.0, ((-1, 1),))
        with pytest.raises(ValueError):
            ArmConfig("bad", (0.1,), 0.0, ((-1, 1),), max_joint_step=0.0)


class TestStep:
    task = make_task_distribution()[0]

    def _state(self, seed=0):
        return reset(self.task, np.random.default_rng(seed))

    def test_reset_neighbourhood(self):
        for seed in range(20):
            state, obs = self._state(seed)
            assert state.step_index == 0
            assert np.all(np.abs(state.joint_angles[:3]) <= 0.1)
            assert state.joint_angles[3] == 0.0
            assert obs.shape == (env.OBS_DIM,)

    def test_zero_action(self):
        state, _ = self._state()
        nxt, _, reward, done = step(state, np.zeros(MAX_DOF), self.task)
        np.testing.assert_array_equal(nxt.joint_angles, state.joint_angles)
        assert nxt.step_index == 1 and not done
        assert reward == pytest.approx(-euclidean_distance(state.ee_position, self.task.target) / 1000)

    def test_reward_zero_at_target(self):
        arm = _straight((0.2, 0.2), 0.0)
        task = Task(arm, tuple(forward_kinematics(arm, [0.4, 0.9])), 0)
        state = env.EnvState(np.array([0.4, 0.9, 0, 0]), 0, forward_kinematics(arm, [0.4, 0.9]))
        _, _, reward, _ = step(state, np.zeros(MAX_DOF), task)
        assert reward == 0.0

    def test_done_at_horizon(self):
        state, _ = self._state()
        for i in range(10):
            state, _, _, done = step(state, np.zeros(MAX_DOF), self.task, horizon=10)
            assert done == (i == 9)

    def test_nonfinite_action(self):
        state, _ = self._state()
        with pytest.raises(ValueError, match="non-finite"):
            step(state, np.array([0.0, np.nan, 0.0, 0.0]), self.task)

    def test_wrong_action_length(self):
        state, _ = self._state()
        with pytest.raises(ValueError):
            step(state, np.zeros(3), self.task)

    def test_replay_matches_fk_oracle(self):
        arm = self.task.arm
        rng = np.random.default_rng(11)
        state, _ = self._state(3)
        q = state.joint_angles[:3].copy()
        for a in rng.uniform(-2, 2, size=(20, MAX_DOF)):
            state, *_ = step(state, a, self.task)
            q = np.clip(q + np.clip(a[:3], -1, 1) * arm.max_joint_step, -2.6, 2.6)
        expected = fk_transform_chain(arm.link_lengths, arm.base_height, q)
        np.testing.assert_allclose(state.ee_position, expected, rtol=0, atol=1e-12)

    def test_joint_limits_respected(self):
        state, _ = self._state()
        for _ in range(100):
            state, *_ = step(state, np.ones(MAX_DOF), self.task)
        np.testing.assert_array_equal(state.joint_angles[:3], 2.6)

    @settings(max_examples=50)
    @given(actions, st.floats(-3, 3))
    def test_padded_joint_ignored(self, action, other):
        state, _ = self._state()
        alt = action.copy()
        alt[3] = other
        a, b = step(state, action, self.task), step(state, alt, self.task)
        np.testing.assert_array_equal(a[0].joint_angles, b[0].joint_angles)
        np.testing.assert_array_equal(a[1], b[1])
        assert a[0].joint_angles[3] == 0.0

    @settings(max_examples=50)
    @given(actions)
    def test_step_deterministic_and_consistent(self, action):
        state, _ = self._state()
        a, b = step(state, action, self.task), step(state, action, self.task)
        np.testing.assert_array_equal(a[1], b[1])
        assert a[2] == b[2] and a[2] <= 0
        np.testing.assert_array_equal(a[0].ee_position,
                                      forward_kinematics(self.task.arm, a[0].joint_angles[:3]))

    def test_observation_length_constant(self):
        lengths = {reset(t, np.random.default_rng(0))[1].size
                   for t in make_task_distribution() + toy_task_distribution()}
        assert lengths == {env.OBS_DIM}


class TestDistance:
    def test_identical(self):
        assert euclidean_distance((0.1, 0.2, 0.3), (0.1, 0.2, 0.3)) == 0.0

    def test_table_magnitude(self):
        assert euclidean_distance((0, 0, 0), (0, 0.03369, 0)) == pytest.approx(33.69, abs=1e-9)

    @given(arrays(np.float64, 3, elements=st.floats(-2, 2)), arrays(np.float64, 3, elements=st.floats(-2, 2)))
    def test_componentwise(self, a, b):
        expected = 1000 * math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))
        assert euclidean_distance(a, b) == pytest.approx(expected, rel=1e-12, abs=1e-12)
