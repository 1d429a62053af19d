"""One-layer recurrent LIF spiking policy.

Observations enter the output neurons as analog currents through ``w_in``; the
output spikes of the previous micro-step feed back through ``w_lateral``.
The action is the neuron with the most spikes over ``t_snn`` micro-steps.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MU_MIN = 1e-3
DEFAULT_T_SNN = 5


def _clamp_alpha(alpha: float) -> float:
    return min(max(float(alpha), 0.0), 1.0)


def _clamp_mu(mu: float) -> float:
    return max(float(mu), MU_MIN)


@dataclass
class ParamTensor:
    """All learnable SNN parameters.

    ``w_in`` has shape (obs_dim, n_actions) and ``w_lateral`` has shape
    (n_actions, n_actions); entry [j, i] is the synapse from neuron/input j to
    output neuron i.
    """

    w_in: np.ndarray
    w_lateral: np.ndarray
    alpha_decay: float
    mu: float

    def __post_init__(self):
        self.w_in = np.array(self.w_in, dtype=np.float64, order="C", ndmin=2)
        self.w_lateral = np.array(self.w_lateral, dtype=np.float64, order="C", ndmin=2)
        n = self.w_in.shape[1]
        if self.w_lateral.shape != (n, n):
            raise ValueError(f"w_lateral must have shape {(n, n)}, got {self.w_lateral.shape}")
        if not (np.all(np.isfinite(self.w_in)) and np.all(np.isfinite(self.w_lateral))):
            raise ValueError("weights must be finite")
        if not (math.isfinite(self.alpha_decay) and math.isfinite(self.mu)):
            raise ValueError("alpha_decay and mu must be finite")
        self.alpha_decay = _clamp_alpha(self.alpha_decay)
        self.mu = _clamp_mu(self.mu)

    @property
    def obs_dim(self) -> int:
        return self.w_in.shape[0]

    @property
    def n_actions(self) -> int:
        return self.w_in.shape[1]

    @classmethod
    def random(cls, obs_dim: int, n_actions: int, rng: np.random.Generator,
               weight_std: float = 0.5, alpha_decay: float = 0.9, mu: float = 1.0) -> ParamTensor:
        w_in = rng.normal(0.0, weight_std, size=(obs_dim, n_actions))
        w_lateral = rng.normal(0.0, weight_std, size=(n_actions, n_actions))
        return cls(w_in, w_lateral, alpha_decay, mu)

    @classmethod
    def zeros(cls, obs_dim: int, n_actions: int, alpha_decay: float = 0.9, mu: float = 1.0) -> ParamTensor:
        return cls(np.zeros((obs_dim, n_actions)), np.zeros((n_actions, n_actions)), alpha_decay, mu)

    def flatten(self) -> np.ndarray:
        return np.concatenate([self.w_in.ravel(), self.w_lateral.ravel(), [self.alpha_decay, self.mu]])

    @classmethod
    def from_flat(cls, vec, obs_dim: int, n_actions: int) -> ParamTensor:
        vec = np.asarray(vec, dtype=np.float64)
        n_in = obs_dim * n_actions
        n_lat = n_actions * n_actions
        if vec.shape != (n_in + n_lat + 2,):
            raise ValueError(f"expected {n_in + n_lat + 2} values, got {vec.shape}")
        return cls(
            vec[:n_in].reshape(obs_dim, n_actions),
            vec[n_in:n_in + n_lat].reshape(n_actions, n_actions),
            float(vec[-2]),
            float(vec[-1]),
        )

    def copy(self) -> ParamTensor:
        return ParamTensor(self.w_in.copy(), self.w_lateral.copy(), self.alpha_decay, self.mu)

    def to_dict(self) -> dict:
        return {
            "w_in": self.w_in.ravel().tolist(),
            "w_lateral": self.w_lateral.ravel().tolist(),
            "alpha_decay": self.alpha_decay,
            "mu": self.mu,
            "obs_dim": self.obs_dim,
            "n_actions": self.n_actions,
        }

    @classmethod
    def from_dict(cls, data: dict) -> ParamTensor:
        try:
            obs_dim, n_actions = int(data["obs_dim"]), int(data["n_actions"])
            w_in = np.asarray(data["w_in"], dtype=np.float64).reshape(obs_dim, n_actions)
            w_lat = np.asarray(data["w_lateral"], dtype=np.float64).reshape(n_actions, n_actions)
            return cls(w_in, w_lat, float(data["alpha_decay"]), float(data["mu"]))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed parameter record: {exc}") from exc

    def save_json(self, path, **extra) -> None:
        """Write the parameter record; ``extra`` keys (e.g. the seed and reward a
        checkpoint was scored with) are stored alongside and ignored on load."""
        Path(path).write_text(json.dumps({**self.to_dict(), **extra}, indent=2) + "\n")

    @classmethod
    def load_json(cls, path) -> ParamTensor:
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class NeuronState:
    v: np.ndarray
    last_spikes: np.ndarray

    @classmethod
    def zeros(cls, n_actions: int) -> NeuronState:
        return cls(np.zeros(n_actions), np.zeros(n_actions))


@dataclass(frozen=True)
class SnnConfig:
    obs_dim: int
    n_actions: int
    t_snn: int = DEFAULT_T_SNN

    def __post_init__(self):
        if self.t_snn < 1:
            raise ValueError("t_snn must be >= 1")


def param_count(config: SnnConfig) -> int:
    return config.obs_dim * config.n_actions + config.n_actions ** 2 + 2


def neuron_count(config: SnnConfig) -> int:
    return config.obs_dim + config.n_actions


def compute_input_current(obs, last_spikes, params: ParamTensor) -> np.ndarray:
    obs = np.asarray(obs, dtype=np.float64)
    last_spikes = np.asarray(last_spikes, dtype=np.float64)
    if obs.shape != (params.obs_dim,) or last_spikes.shape != (params.n_actions,):
        raise ValueError(
            f"expected obs of length {params.obs_dim} and spikes of length {params.n_actions}, "
            f"got {obs.shape} and {last_spikes.shape}"
        )
    # accumulate term by term: the compiled rollout sums in exactly this order
    current = np.zeros(params.n_actions)
    for k in range(params.obs_dim):
        current = current + params.w_in[k] * obs[k]
    for j in range(params.n_actions):
        current = current + params.w_lateral[j] * last_spikes[j]
    return current


def lif_step(state: NeuronState, current, params: ParamTensor) -> NeuronState:
    current = np.asarray(current, dtype=np.float64)
    if current.shape != state.v.shape:
        raise ValueError(f"current has shape {current.shape}, expected {state.v.shape}")
    if not np.all(np.isfinite(current)):
        raise ValueError("input current must be finite")
    alpha = params.alpha_decay
    v = alpha * state.v + (1.0 - alpha) * current
    spikes = (v >= params.mu).astype(np.float64)
    v = np.where(spikes > 0, 0.0, v)
    return NeuronState(v, spikes)


def pick_action(counts, v) -> int:
    """Most spikes wins; ties go to the higher potential, then the lower index."""
    best = 0
    for i in range(1, len(counts)):
        if counts[i] > counts[best] or (counts[i] == counts[best] and v[i] > v[best]):
            best = i
    return best


def select_action(obs, state: NeuronState, params: ParamTensor,
                  config: SnnConfig) -> tuple[int, NeuronState]:
    obs = np.asarray(obs, dtype=np.float64)
    if obs.shape != (config.obs_dim,):
        raise ValueError(f"observation has shape {obs.shape}, expected ({config.obs_dim},)")
    counts = np.zeros(config.n_actions)
    for _ in range(config.t_snn):
        state = lif_step(state, compute_input_current(obs, state.last_spikes, params), params)
        counts += state.last_spikes
    return pick_action(counts, state.v), state


@dataclass
class SnnPolicy:
    """Callable policy carrying membrane state across the steps of one episode."""

    params: ParamTensor
    t_snn: int = DEFAULT_T_SNN
    state: NeuronState = field(init=False)

    def __post_init__(self):
        self.config = SnnConfig(self.params.obs_dim, self.params.n_actions, self.t_snn)
        self.reset()

    def reset(self) -> None:
        self.state = NeuronState.zeros(self.params.n_actions)

    def __call__(self, obs) -> int:
        action, self.state = select_action(obs, self.state, self.params, self.config)
        return action
