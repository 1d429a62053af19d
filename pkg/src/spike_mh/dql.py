"""Deep Q-Learning baseline: small dense ReLU network, replay buffer, epsilon-greedy, Adam.

Backpropagation is written out by hand in numpy; networks are tiny (16 units
per hidden layer) so this is fast enough and keeps the baseline dependency-free.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .envs import T_MAX, Env, env_spec

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class DqlConfig:
    learning_rate: float = 1e-3
    gamma: float = 0.99
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay: float = 0.995
    batch_size: int = 64
    buffer_capacity: int = 100_000
    target_sync: int = 100
    max_episodes: int = 500
    hidden_units: int = 16
    seed: int = 0
    # end training early once an episode reaches this reward
    stop_reward: float | None = None
    t_max: int = T_MAX

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must be in (0, 1]")
        for name in ("epsilon_start", "epsilon_end", "epsilon_decay"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.batch_size < 1 or self.buffer_capacity < 1 or self.target_sync < 1:
            raise ValueError("batch_size, buffer_capacity and target_sync must be >= 1")


class QNetwork:
    """Dense network obs -> [hidden ReLU layers] -> linear Q-values, with Adam state."""

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray]):
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64) for b in biases]
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]
        self.t = 0

    @classmethod
    def build(cls, obs_dim: int, n_actions: int, hidden_layers: int, hidden_units: int,
              rng: np.random.Generator) -> QNetwork:
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init for weights and biases."""
        sizes = [obs_dim] + [hidden_units] * hidden_layers + [n_actions]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(weights, biases)

    @property
    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    @property
    def hidden_layers(self) -> int:
        return len(self.weights) - 1

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Return Q-values and the per-layer inputs needed for backprop."""
        inputs = []
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(h)
            h = h @ w + b
            if i < last:
                h = np.maximum(h, 0.0)
        return h, inputs

    def copy(self) -> QNetwork:
        net = QNetwork(self.weights, self.biases)
        net.m = [a.copy() for a in self.m]
        net.v = [a.copy() for a in self.v]
        net.t = self.t
        return net

    def load_weights(self, other: QNetwork) -> None:
        self.weights = [w.copy() for w in other.weights]
        self.biases = [b.copy() for b in other.biases]


def q_forward(net: QNetwork, obs) -> np.ndarray:
    q, _ = net.forward(np.asarray(obs, dtype=np.float64))
    return q


@dataclass
class Batch:
    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_obs: np.ndarray
    dones: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)


def td_targets(batch: Batch, target_net: QNetwork, gamma: float) -> np.ndarray:
    q_next, _ = target_net.forward(batch.next_obs)
    return batch.rewards + gamma * q_next.max(axis=1) * (1.0 - batch.dones)


def td_loss(net: QNetwork, batch: Batch, targets: np.ndarray) -> float:
    q, _ = net.forward(batch.obs)
    taken = q[np.arange(len(batch)), batch.actions]
    return float(np.mean((taken - targets) ** 2))


def td_loss_and_grads(net: QNetwork, batch: Batch, targets: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """MSE on the taken actions' Q-values against fixed targets, and its gradient.

    Gradients are returned in ``net.params`` order (w0, b0, w1, b1, ...).
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    q, inputs = net.forward(batch.obs)
    rows = np.arange(len(batch))
    err = q[rows, batch.actions] - targets
    loss = float(np.mean(err ** 2))
    delta = np.zeros_like(q)
    delta[rows, batch.actions] = 2.0 * err / len(batch)
    grads: list[np.ndarray] = []
    for i in range(len(net.weights) - 1, -1, -1):
        a = inputs[i]
        grads.append(delta.sum(axis=0))
        grads.append(a.T @ delta)
        if i > 0:
            delta = (delta @ net.weights[i].T) * (a > 0)
    grads.reverse()
    return loss, grads


def adam_step(net: QNetwork, grads: list[np.ndarray], learning_rate: float) -> None:
    net.t += 1
    params = net.params
    c1 = 1.0 - ADAM_BETA1 ** net.t
    c2 = 1.0 - ADAM_BETA2 ** net.t
    for p, g, m, v in zip(params, grads, net.m, net.v):
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * g * g
        p -= learning_rate * (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)


def td_update(net: QNetwork, batch: Batch, target_net: QNetwork, config: DqlConfig) -> float:
    """One Adam step on the TD loss; returns the loss before the step."""
    targets = td_targets(batch, target_net, config.gamma)
    loss, grads = td_loss_and_grads(net, batch, targets)
    adam_step(net, grads, config.learning_rate)
    return loss


class ReplayBuffer:
    """FIFO ring buffer of transitions with uniform minibatch sampling."""

    def __init__(self, capacity: int, obs_dim: int, rng: np.random.Generator):
        self.capacity = capacity
        self.rng = rng
        self.obs = np.zeros((capacity, obs_dim))
        self.next_obs = np.zeros((capacity, obs_dim))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.dones = np.zeros(capacity)
        self.cursor = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, obs, action: int, reward: float, next_obs, done: bool) -> None:
        i = self.cursor
        self.obs[i] = obs
        self.actions[i] = action
        self.rewards[i] = reward
        self.next_obs[i] = next_obs
        self.dones[i] = float(done)
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int) -> Batch:
        if batch_size > self.size:
            raise ValueError(f"cannot sample {batch_size} transitions from {self.size}")
        idx = self.rng.choice(self.size, size=batch_size, replace=False)
        return Batch(self.obs[idx], self.actions[idx], self.rewards[idx], self.next_obs[idx], self.dones[idx])


def epsilon_greedy(net: QNetwork, obs, epsilon: float, rng: np.random.Generator) -> int:
    n_actions = net.biases[-1].shape[0]
    if rng.uniform() < epsilon:
        return int(rng.integers(n_actions))
    return int(np.argmax(q_forward(net, obs)))


@dataclass
class DqlResult:
    episode_rewards: list[float] = field(default_factory=list)
    epsilons: list[float] = field(default_factory=list)
    best_reward: float = -math.inf
    best_episode: int = 0
    best_net: QNetwork | None = None


def dql_train(env_kind: str, hidden_layers: int, config: DqlConfig) -> DqlResult:
    spec = env_spec(env_kind)
    if not 0 <= hidden_layers <= 3:
        raise ValueError("hidden_layers must be between 0 and 3")
    rng = np.random.default_rng(config.seed)
    net = QNetwork.build(spec.obs_dim, spec.n_actions, hidden_layers, config.hidden_units, rng)
    target = net.copy()
    buffer = ReplayBuffer(config.buffer_capacity, spec.obs_dim, rng)
    env = Env(env_kind, config.t_max)
    result = DqlResult()
    epsilon = config.epsilon_start
    updates = 0
    for episode in range(1, config.max_episodes + 1):
        obs = env.reset(int(rng.integers(2 ** 62)))
        total = 0.0
        while True:
            action = epsilon_greedy(net, obs, epsilon, rng)
            outcome = env.step(action)
            total += outcome.reward
            # truncation is not a true terminal state, so it still bootstraps
            buffer.push(obs, action, outcome.reward, outcome.observation, outcome.terminated)
            obs = outcome.observation
            if len(buffer) >= config.batch_size:
                td_update(net, buffer.sample(config.batch_size), target, config)
                updates += 1
                if updates % config.target_sync == 0:
                    target.load_weights(net)
            if outcome.done:
                break
        result.episode_rewards.append(total)
        result.epsilons.append(epsilon)
        if total > result.best_reward:
            result.best_reward = total
            result.best_episode = episode
            result.best_net = net.copy()
        epsilon = max(config.epsilon_end, epsilon * config.epsilon_decay)
        if config.stop_reward is not None and total >= config.stop_reward:
            break
    return result
