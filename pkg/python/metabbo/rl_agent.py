"""
Deep Q-learning of the policy that picks a mutation config per generation.

The agent holds a prediction network (state -> one Q-value per action) and a target network which is a
copy of the prediction network from the last sync.  Learning samples transitions uniformly from a replay
buffer and moves Q(s, a) of the prediction network towards

    r + gamma * Q_target(s', a')

where a' = argmax_a Q_prediction(s', a) in "double" mode and a' = argmax_a Q_target(s', a) in "max" mode.
Terminal transitions use r alone.
"""

import logging
from collections import OrderedDict
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from metabbo.de_core import N_ACTIONS
from metabbo.errors import CheckpointError, InsufficientReplayError, InvalidArgumentError, TrainingDivergenceError
from metabbo.features import N_FEATURES
from metabbo.networks.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from metabbo.networks.mlp import MlpNetwork
from metabbo.networks.optim import build_optimizer
from metabbo.text import write_csv

logger = logging.getLogger(__name__)
logger.addHandler(logging.NullHandler())

TARGET_MODES = ("double", "max")

TRAINING_LOG_HEADER = ("learning_step", "loss", "epsilon", "mean_q")


class Transition(NamedTuple):
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    terminal: bool


class ReplayBuffer:
    """
    Ring buffer of transitions; once full, every insertion evicts the oldest transition.

    >>> buffer = ReplayBuffer(2, state_dim=1)
    >>> for i in range(3):
    ...     buffer.append(Transition(np.array([i]), i, 0.0, np.array([i]), False))
    >>> len(buffer), [t.action for t in buffer.transitions()]
    (2, [1, 2])
    """

    def __init__(self, capacity: int, state_dim: int = N_FEATURES) -> None:
        if capacity < 1:
            raise InvalidArgumentError("replay capacity must be positive, got {}".format(capacity))
        self.capacity = capacity
        self.states = np.zeros((capacity, state_dim))
        self.actions = np.zeros(capacity, dtype=int)
        self.rewards = np.zeros(capacity)
        self.next_states = np.zeros((capacity, state_dim))
        self.terminals = np.zeros(capacity, dtype=bool)
        self._next = 0
        self.size = 0

    def __len__(self):
        return self.size

    def append(self, transition: Transition) -> None:
        i = self._next
        self.states[i] = transition.state
        self.actions[i] = transition.action
        self.rewards[i] = transition.reward
        self.next_states[i] = transition.next_state
        self.terminals[i] = transition.terminal
        self._next = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def _positions(self) -> np.ndarray:
        if self.size < self.capacity:
            return np.arange(self.size)
        return (np.arange(self.capacity) + self._next) % self.capacity

    def transitions(self) -> List[Transition]:
        """Return the stored transitions, oldest first."""
        return [
            Transition(
                self.states[i],
                int(self.actions[i]),
                float(self.rewards[i]),
                self.next_states[i],
                bool(self.terminals[i]),
            )
            for i in self._positions()
        ]

    def sample_indices(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        if batch_size < 1:
            raise InvalidArgumentError("batch size must be positive, got {}".format(batch_size))
        if self.size < batch_size:
            raise InsufficientReplayError(
                "cannot sample {:d} transitions from a buffer holding {:d}".format(batch_size, self.size)
            )
        return rng.integers(self.size, size=batch_size)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Tuple[np.ndarray, ...]:
        """
        Return (states, actions, rewards, next_states, terminals) of transitions drawn uniformly with replacement.
        """
        idx = self.sample_indices(batch_size, rng)
        return self.states[idx], self.actions[idx], self.rewards[idx], self.next_states[idx], self.terminals[idx]


class LinearEpsilonSchedule:
    """
    Exploration rate falling linearly from start to end over the first decay_steps learning steps.

    >>> schedule = LinearEpsilonSchedule(1.0, 0.0, 4)
    >>> schedule(0), schedule(1), schedule(4), schedule(10 ** 6)
    (1.0, 0.75, 0.0, 0.0)
    """

    def __init__(self, start: float, end: float, decay_steps: int) -> None:
        if not (0.0 <= end <= 1.0 and 0.0 <= start <= 1.0):
            raise InvalidArgumentError("exploration rates must be in [0, 1]")
        self.start = start
        self.end = end
        self.decay_steps = decay_steps

    def __call__(self, step: int) -> float:
        if self.decay_steps <= 0 or step >= self.decay_steps:
            return self.end
        return self.start + (self.end - self.start) * step / self.decay_steps


class AgentConfig:
    def __init__(
        self,
        hidden: Optional[List[int]] = None,
        gamma: float = 0.99,
        learning_rate: float = 1e-4,
        optimizer: str = "adam",
        batch_size: int = 64,
        replay_capacity: int = 100000,
        warmup: int = 1000,
        target_sync_period: int = 1000,
        target_mode: str = "double",
        epsilon_start: float = 1.0,
        epsilon_end: float = 0.05,
        epsilon_decay_fraction: float = 0.2,
        reward_literal: bool = False,
    ) -> None:
        if target_mode not in TARGET_MODES:
            raise InvalidArgumentError("unknown target mode '{}'".format(target_mode))
        if not 0.0 <= gamma <= 1.0:
            raise InvalidArgumentError("discount factor must be in [0, 1], got {}".format(gamma))
        if target_sync_period < 1:
            raise InvalidArgumentError("target sync period must be positive, got {}".format(target_sync_period))
        self.hidden = [32, 64, 32] if hidden is None else list(hidden)
        self.gamma = gamma
        self.learning_rate = learning_rate
        self.optimizer = optimizer
        self.batch_size = batch_size
        self.replay_capacity = replay_capacity
        self.warmup = max(warmup, batch_size)
        self.target_sync_period = target_sync_period
        self.target_mode = target_mode
        self.epsilon_start = epsilon_start
        self.epsilon_end = epsilon_end
        self.epsilon_decay_fraction = epsilon_decay_fraction
        self.reward_literal = reward_literal

    def epsilon_schedule(self, max_learning_steps: int) -> LinearEpsilonSchedule:
        return LinearEpsilonSchedule(
            self.epsilon_start, self.epsilon_end, int(self.epsilon_decay_fraction * max_learning_steps)
        )


class DqnAgent:
    """
    Prediction and target networks (MLPs with ReLU) plus the optimizer state and counters.

    >>> agent = DqnAgent(AgentConfig(hidden=[4]), seed=0)
    >>> agent.prediction.descriptor()
    {'arch': 'mlp', 'layers': [9, 4, 15]}
    """

    def __init__(self, config: AgentConfig, seed=None, state_dim: int = N_FEATURES, n_actions: int = N_ACTIONS):
        self.config = config
        self.prediction = MlpNetwork([state_dim] + config.hidden + [n_actions], rng=np.random.default_rng(seed))
        self.target = self.prediction.copy()
        self.optimizer = build_optimizer(config.optimizer, config.learning_rate)
        self.n_actions = n_actions
        self.epsilon = config.epsilon_start
        self.learning_steps = 0
        self.episodes = 0
        self.last_mean_q = 0.0

    def q_values(self, states) -> np.ndarray:
        return self.prediction.predict(states)

    def select_action(self, state: np.ndarray, rng: np.random.Generator, training: bool = True) -> int:
        return select_action(self, state, rng, training)

    def learn(self, buffer: ReplayBuffer, rng: np.random.Generator) -> float:
        """One update of the prediction network; the target network is synced every target_sync_period steps."""
        loss = dqn_update(self, buffer, self.config.batch_size, rng)
        if self.learning_steps % self.config.target_sync_period == 0:
            sync_target(self)
        return loss

    def save(self, filename: str, extra: Optional[dict] = None) -> None:
        metadata = {
            "learning_steps": self.learning_steps,
            "episodes": self.episodes,
            "epsilon": self.epsilon,
        }
        metadata.update(extra or {})
        save_checkpoint(
            filename,
            Checkpoint(
                OrderedDict([("prediction", self.prediction), ("target", self.target)]),
                arrays=self.optimizer.state_arrays(),
                metadata=metadata,
            ),
        )

    @classmethod
    def load(cls, filename: str, config: AgentConfig) -> "DqnAgent":
        checkpoint = load_checkpoint(filename)
        try:
            prediction, target = checkpoint.networks["prediction"], checkpoint.networks["target"]
        except KeyError:
            raise CheckpointError("checkpoint '{}' does not hold a policy".format(filename)) from None
        agent = cls(config, state_dim=prediction.in_dim, n_actions=prediction.out_dim)
        if prediction.descriptor() != agent.prediction.descriptor():
            raise CheckpointError(
                "policy in '{}' has shape {}, settings ask for {}".format(
                    filename, prediction.descriptor()["layers"], agent.prediction.descriptor()["layers"]
                )
            )
        agent.prediction = prediction
        agent.target = target
        agent.optimizer.load_state_arrays(prediction, checkpoint.arrays)
        agent.learning_steps = int(checkpoint.metadata["learning_steps"])
        agent.episodes = int(checkpoint.metadata["episodes"])
        agent.epsilon = float(checkpoint.metadata["epsilon"])
        return agent


def select_action(agent: DqnAgent, state: np.ndarray, rng: np.random.Generator, training: bool = True) -> int:
    """
    Return an action: in training, uniformly random with probability epsilon, else the greedy action.

    The greedy action is the one with the largest Q-value (lowest index among ties).
    """
    if training and rng.random() < agent.epsilon:
        return int(rng.integers(agent.n_actions))
    return int(np.argmax(agent.q_values(state)))


def reward(previous_best: float, new_best: float, literal: bool = False) -> float:
    """
    Return 1 when the best value so far improved, else 0.

    With literal=True, return 0 when the best value did not get worse and 1 otherwise.

    >>> reward(5.0, 4.0), reward(5.0, 5.0), reward(5.0, 4.0, literal=True)
    (1.0, 0.0, 0.0)
    """
    if literal:
        return 0.0 if new_best <= previous_best else 1.0
    return 1.0 if new_best < previous_best else 0.0


def td_targets(
    agent: DqnAgent, rewards: np.ndarray, next_states: np.ndarray, terminals: np.ndarray
) -> np.ndarray:
    target_q = agent.target.predict(next_states)
    if agent.config.target_mode == "double":
        chosen = np.argmax(agent.prediction.predict(next_states), axis=1)
        bootstrap = target_q[np.arange(len(chosen)), chosen]
    else:
        bootstrap = np.max(target_q, axis=1)
    return rewards + agent.config.gamma * np.where(terminals, 0.0, bootstrap)


def dqn_update(agent: DqnAgent, buffer: ReplayBuffer, batch_size: int, rng: np.random.Generator) -> float:
    """
    Take one optimizer step on the prediction network and return the loss mean(1/2 (target - Q(s, a))^2).
    """
    states, actions, rewards, next_states, terminals = buffer.sample(batch_size, rng)
    targets = td_targets(agent, rewards, next_states, terminals)
    q, tape = agent.prediction.forward(states)
    rows = np.arange(batch_size)
    diff = q[rows, actions] - targets
    loss = float(0.5 * np.mean(np.square(diff)))
    agent.learning_steps += 1
    if not np.isfinite(loss) or not np.all(np.isfinite(q)):
        raise TrainingDivergenceError("policy update", agent.learning_steps, loss)
    grad_y = np.zeros_like(q)
    grad_y[rows, actions] = diff / batch_size
    agent.optimizer.step(agent.prediction, agent.prediction.backward(tape, grad_y))
    agent.last_mean_q = float(np.mean(q))
    return loss


def sync_target(agent: DqnAgent) -> None:
    params = agent.prediction.parameters()
    agent.target.set_parameters(OrderedDict((name, value.copy()) for name, value in params.items()))
    logger.debug("Synced target network at learning step %d", agent.learning_steps)


def write_training_log(filename: str, rows: List[tuple]) -> None:
    write_csv(filename, TRAINING_LOG_HEADER, rows)
