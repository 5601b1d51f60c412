import os
import tempfile
import unittest

import numpy as np
from scipy.stats import chisquare

from metabbo.errors import CheckpointError, InsufficientReplayError, InvalidArgumentError
from metabbo.rl_agent import (
    AgentConfig,
    DqnAgent,
    ReplayBuffer,
    Transition,
    dqn_update,
    reward,
    select_action,
    sync_target,
    td_targets,
)

STATE = np.array([0.5, -0.25])
LONG_TESTS = bool(os.environ.get("METABBO_LONG_TESTS"))


def self_loop_buffer():
    buffer = ReplayBuffer(10, state_dim=2)
    buffer.append(Transition(STATE, 0, 1.0, STATE, False))
    return buffer


class TestReplayBuffer(unittest.TestCase):
    def test_eviction_keeps_newest(self):
        buffer = ReplayBuffer(3, state_dim=1)
        for i in range(5):
            buffer.append(Transition(np.array([float(i)]), i % 15, float(i), np.array([i + 1.0]), i == 4))
        self.assertEqual(len(buffer), 3)
        stored = buffer.transitions()
        self.assertEqual([t.action for t in stored], [2, 3, 4])
        self.assertEqual([t.terminal for t in stored], [False, False, True])

    def test_sample_needs_enough_transitions(self):
        buffer = ReplayBuffer(10, state_dim=1)
        for i in range(3):
            buffer.append(Transition(np.zeros(1), 0, 0.0, np.zeros(1), False))
        with self.assertRaises(InsufficientReplayError):
            buffer.sample(4, np.random.default_rng(0))
        states, actions, rewards, next_states, terminals = buffer.sample(3, np.random.default_rng(0))
        self.assertEqual(states.shape, (3, 1))

    def test_sampling_is_uniform(self):
        buffer = ReplayBuffer(10, state_dim=1)
        for i in range(10):
            buffer.append(Transition(np.array([float(i)]), i, 0.0, np.array([float(i)]), False))
        _, actions, _, _, _ = buffer.sample(100000, np.random.default_rng(12))
        counts = np.bincount(actions, minlength=10)
        self.assertEqual(len(counts), 10)
        self.assertGreater(chisquare(counts).pvalue, 0.01)

    def test_capacity_must_be_positive(self):
        with self.assertRaises(InvalidArgumentError):
            ReplayBuffer(0)


class TestPolicyParts(unittest.TestCase):
    def test_epsilon_schedule(self):
        schedule = AgentConfig().epsilon_schedule(1000)
        self.assertEqual(schedule(0), 1.0)
        self.assertAlmostEqual(schedule(100), 0.525)
        self.assertEqual(schedule(200), 0.05)
        self.assertEqual(schedule(999), 0.05)

    def test_warmup_covers_a_batch(self):
        self.assertEqual(AgentConfig(batch_size=64, warmup=10).warmup, 64)

    def test_rewards(self):
        self.assertEqual(reward(3.0, 2.0), 1.0)
        self.assertEqual(reward(3.0, 3.0), 0.0)
        self.assertEqual(reward(3.0, 3.0, literal=True), 0.0)
        self.assertEqual(reward(3.0, 4.0, literal=True), 1.0)

    def test_greedy_selection_ignores_epsilon(self):
        agent = DqnAgent(AgentConfig(hidden=[8]), seed=1)
        state = np.linspace(0.0, 1.0, 9)
        greedy = int(np.argmax(agent.q_values(state)))
        agent.epsilon = 1.0
        rng = np.random.default_rng(0)
        self.assertTrue(all(select_action(agent, state, rng, training=False) == greedy for _ in range(20)))
        agent.epsilon = 0.0
        self.assertEqual(agent.select_action(state, rng), greedy)

    def test_full_exploration_is_uniform(self):
        agent = DqnAgent(AgentConfig(hidden=[8]), seed=11)
        agent.epsilon = 1.0
        state = np.linspace(0.0, 1.0, 9)
        rng = np.random.default_rng(13)
        actions = [select_action(agent, state, rng, training=True) for _ in range(100000)]
        counts = np.bincount(actions, minlength=15)
        self.assertEqual(len(counts), 15)
        self.assertGreater(chisquare(counts).pvalue, 0.01)

    def test_targets(self):
        agent = DqnAgent(AgentConfig(hidden=[8], gamma=0.5), seed=2)
        next_states = np.random.default_rng(3).uniform(size=(4, 9))
        rewards = np.array([1.0, 0.0, 1.0, 0.0])
        terminals = np.array([True, True, False, False])
        targets = td_targets(agent, rewards, next_states, terminals)
        np.testing.assert_array_equal(targets[:2], rewards[:2])
        # With identical networks, double and max targets agree
        expected = rewards[2:] + 0.5 * np.max(agent.target.predict(next_states[2:]), axis=1)
        np.testing.assert_allclose(targets[2:], expected)


class TestLearning(unittest.TestCase):
    def test_self_loop_converges_to_discounted_sum(self):
        for mode in ("double", "max"):
            config = AgentConfig(
                hidden=[16],
                gamma=0.9,
                learning_rate=0.01,
                batch_size=1,
                warmup=1,
                target_sync_period=1,
                target_mode=mode,
            )
            agent = DqnAgent(config, seed=4, state_dim=2, n_actions=1)
            buffer = self_loop_buffer()
            rng = np.random.default_rng(5)
            for _ in range(5000):
                agent.learn(buffer, rng)
            with self.subTest(mode=mode):
                self.assertEqual(agent.learning_steps, 5000)
                self.assertAlmostEqual(float(agent.q_values(STATE)[0]), 10.0, delta=0.5)

    @unittest.skipUnless(LONG_TESTS, "set METABBO_LONG_TESTS to run")
    def test_self_loop_with_long_horizon(self):
        config = AgentConfig(hidden=[16], gamma=0.99, learning_rate=0.01, batch_size=1, warmup=1, target_sync_period=1)
        agent = DqnAgent(config, seed=4, state_dim=2, n_actions=1)
        buffer = self_loop_buffer()
        rng = np.random.default_rng(5)
        for _ in range(40000):
            agent.learn(buffer, rng)
        self.assertAlmostEqual(float(agent.q_values(STATE)[0]), 100.0, delta=5.0)

    def test_zero_values_with_zero_rewards_stay_put(self):
        agent = DqnAgent(AgentConfig(hidden=[8], batch_size=4, warmup=4), seed=8)
        params = agent.prediction.parameters()
        last = len(agent.prediction.descriptor()["layers"]) - 2
        for name in ("layers.{}.weight".format(last), "layers.{}.bias".format(last)):
            params[name] = np.zeros_like(params[name])
        agent.prediction.set_parameters(params)
        sync_target(agent)
        buffer = ReplayBuffer(10)
        rng = np.random.default_rng(9)
        for _ in range(10):
            buffer.append(Transition(rng.uniform(size=9), int(rng.integers(15)), 0.0, rng.uniform(size=9), False))
        before = agent.prediction.parameters()
        for _ in range(5):
            self.assertEqual(dqn_update(agent, buffer, 4, rng), 0.0)
        for name, value in agent.prediction.parameters().items():
            np.testing.assert_array_equal(value, before[name])
        np.testing.assert_array_equal(agent.q_values(np.full(9, 0.5)), np.zeros(15))

    def test_terminal_transition_learns_reward(self):
        config = AgentConfig(hidden=[16], learning_rate=0.01, batch_size=1, warmup=1, target_sync_period=10)
        agent = DqnAgent(config, seed=6, state_dim=2, n_actions=3)
        buffer = ReplayBuffer(1, state_dim=2)
        buffer.append(Transition(STATE, 2, 0.75, STATE, True))
        rng = np.random.default_rng(0)
        for _ in range(2000):
            agent.learn(buffer, rng)
        self.assertAlmostEqual(float(agent.q_values(STATE)[2]), 0.75, delta=0.05)


class TestAgentCheckpoint(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.filename = os.path.join(self.tmp.name, "policy.ckpt.json")

    def tearDown(self):
        self.tmp.cleanup()

    def test_resume_restores_counters_and_networks(self):
        config = AgentConfig(hidden=[8], batch_size=1, warmup=1, target_sync_period=3)
        agent = DqnAgent(config, seed=7, state_dim=2, n_actions=4)
        buffer = ReplayBuffer(5, state_dim=2)
        buffer.append(Transition(STATE, 1, 1.0, STATE, False))
        rng = np.random.default_rng(1)
        for _ in range(7):
            agent.learn(buffer, rng)
        agent.episodes = 2
        agent.epsilon = 0.3
        agent.save(self.filename)
        restored = DqnAgent.load(self.filename, config)
        self.assertEqual((restored.learning_steps, restored.episodes, restored.epsilon), (7, 2, 0.3))
        for name, value in agent.prediction.parameters().items():
            np.testing.assert_array_equal(restored.prediction.parameters()[name], value)
        for name, value in agent.target.parameters().items():
            np.testing.assert_array_equal(restored.target.parameters()[name], value)
        np.testing.assert_array_equal(restored.q_values(STATE), agent.q_values(STATE))

    def test_shape_mismatch(self):
        DqnAgent(AgentConfig(hidden=[4]), seed=0).save(self.filename)
        with self.assertRaises(CheckpointError):
            DqnAgent.load(self.filename, AgentConfig(hidden=[8]))


if __name__ == "__main__":
    unittest.main()
