"""Reward-driven Metropolis-Hastings training of SNN policy parameters.

Each iteration proposes a Gaussian perturbation of every parameter, scores the
proposal and the current parameters by their accumulated episode reward, and
accepts with probability min(1, ratio of reward x prior).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .envs import env_spec
from .rollout import rollout_snn
from .snn import DEFAULT_T_SNN, ParamTensor

FLAT = "flat"
GAUSSIAN = "gaussian"


@dataclass
class MhConfig:
    n_iter: int = 500
    proposal_sigma: float = 0.2
    prior: str = FLAT
    prior_sigma: float = 1.0
    # None means the environment default (CartPole 0, Acrobot -501)
    reward_floor: float | None = None
    base_seed: int = 0
    episodes_per_eval: int = 1
    t_snn: int = DEFAULT_T_SNN
    common_random_numbers: bool = True
    # record W_n instead of W' as the best parameters (literal reading of the algorithm)
    literal_best_update: bool = False

    def __post_init__(self):
        if self.n_iter < 1:
            raise ValueError("n_iter must be >= 1")
        if not self.proposal_sigma > 0:
            raise ValueError("proposal_sigma must be > 0")
        if self.episodes_per_eval < 1:
            raise ValueError("episodes_per_eval must be >= 1")
        if self.prior not in (FLAT, GAUSSIAN):
            raise ValueError(f"prior must be {FLAT!r} or {GAUSSIAN!r}")
        if self.prior == GAUSSIAN and not self.prior_sigma > 0:
            raise ValueError("prior_sigma must be > 0")


@dataclass(frozen=True)
class ChainRecord:
    iteration: int
    reward_proposal: float
    reward_previous: float
    acceptance_ratio: float
    accepted: bool
    best_reward_so_far: float


@dataclass
class TrainResult:
    best_params: ParamTensor
    best_reward: float
    chain: list[ChainRecord] = field(default_factory=list)
    episodes_per_iteration: int = 2

    @property
    def first_best_iteration(self) -> int:
        """Iteration at which ``best_reward`` was first reached."""
        for rec in self.chain:
            if rec.best_reward_so_far >= self.best_reward:
                return rec.iteration
        return 0


def gaussian_step(x: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Symmetric random-walk proposal: x + N(0, sigma^2) per component."""
    if not sigma > 0:
        raise ValueError("sigma must be > 0")
    return x + rng.normal(0.0, sigma, size=np.shape(x))


def propose(prev: ParamTensor, sigma: float, rng: np.random.Generator) -> ParamTensor:
    """Perturb every weight, alpha and mu; alpha and mu are clamped afterwards."""
    flat = gaussian_step(prev.flatten(), sigma, rng)
    return ParamTensor.from_flat(flat, prev.obs_dim, prev.n_actions)


def pseudo_likelihood(accumulated_reward: float, reward_floor: float) -> float:
    if not accumulated_reward > reward_floor:
        raise ValueError(
            f"reward {accumulated_reward} is not above the floor {reward_floor}; "
            "choose a lower reward_floor"
        )
    return accumulated_reward - reward_floor


def prior_density(params: ParamTensor | np.ndarray, prior: str = FLAT, prior_sigma: float = 1.0) -> float:
    """Unnormalized prior over a ParamTensor or a flat parameter vector; the
    normalization cancels in the acceptance ratio."""
    if prior == FLAT:
        return 1.0
    if prior == GAUSSIAN:
        theta = params.flatten() if isinstance(params, ParamTensor) else np.ravel(params).astype(np.float64)
        return math.exp(-float(theta @ theta) / (2.0 * prior_sigma ** 2))
    raise ValueError(f"unknown prior {prior!r}")


def acceptance_ratio(l1: float, l2: float, p1: float, p2: float) -> float:
    if not (l1 > 0 and l2 > 0 and p1 > 0 and p2 > 0):
        raise ValueError(f"likelihoods and priors must be positive, got {(l1, l2, p1, p2)}")
    return (l1 * p1) / (l2 * p2)


def mh_accept(p: float, rng: np.random.Generator) -> bool:
    if p < 0:
        raise ValueError("acceptance ratio must be >= 0")
    u = rng.uniform(0.0, 1.0)
    return bool(u < min(p, 1.0))


def evaluate_reward(params: ParamTensor, env_kind: str, seed: int, episodes_per_eval: int = 1,
                    t_snn: int = DEFAULT_T_SNN) -> float:
    """Mean accumulated reward over episodes seeded ``seed, seed+1, ...``."""
    total = 0.0
    for e in range(episodes_per_eval):
        reward, _ = rollout_snn(params, env_kind, seed + e, t_snn)
        total += reward
    return total / episodes_per_eval


def sample_density(density: Callable[[np.ndarray], float], x0, sigma: float, n_samples: int,
                   rng: np.random.Generator, burn_in: int = 0) -> np.ndarray:
    """Plain random-walk MH on an arbitrary positive density, built from the same
    proposal/ratio/accept steps as :func:`run_chain`."""
    x = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    fx = density(x)
    out = np.empty((n_samples, x.size))
    for i in range(burn_in + n_samples):
        y = gaussian_step(x, sigma, rng)
        fy = density(y)
        if fy > 0 and mh_accept(acceptance_ratio(fy, fx, 1.0, 1.0), rng):
            x, fx = y, fy
        if i >= burn_in:
            out[i - burn_in] = x
    return out


Evaluator = Callable[[ParamTensor, int], float]


def run_chain(init_params: ParamTensor, evaluate: Evaluator, config: MhConfig, reward_floor: float,
              on_improve: Callable[[ParamTensor, float, int], None] | None = None) -> TrainResult:
    """Core MH loop over an arbitrary ``evaluate(params, seed) -> reward``.

    Iteration n scores the proposal with seed ``base_seed + n`` and re-scores the
    current parameters with the same seed (or a distinct one when common random
    numbers are disabled). The evaluation of the initial parameters in the first
    iteration seeds the best-so-far record. ``on_improve(params, reward, seed)``
    is called whenever the record improves, with the episode seed that scored it.
    """
    rng = np.random.default_rng(config.base_seed)
    current = init_params.copy()
    best_params = init_params.copy()
    best_reward = -math.inf
    prior_current = prior_density(current, config.prior, config.prior_sigma)
    chain: list[ChainRecord] = []
    for n in range(1, config.n_iter + 1):
        proposal = propose(current, config.proposal_sigma, rng)
        if config.common_random_numbers:
            seed_proposal = seed_previous = config.base_seed + n
        else:
            seed_proposal = config.base_seed + 2 * n
            seed_previous = seed_proposal + 1
        r_proposal = evaluate(proposal, seed_proposal)
        r_previous = evaluate(current, seed_previous)
        if n == 1:
            best_reward, best_params = r_previous, current.copy()
            if on_improve is not None:
                on_improve(best_params, best_reward, seed_previous)
        prior_proposal = prior_density(proposal, config.prior, config.prior_sigma)
        p = acceptance_ratio(
            pseudo_likelihood(r_proposal, reward_floor),
            pseudo_likelihood(r_previous, reward_floor),
            prior_proposal,
            prior_current,
        )
        accepted = mh_accept(p, rng)
        if accepted:
            current, prior_current = proposal, prior_proposal
        if r_proposal > best_reward:
            best_reward = r_proposal
            best_params = (current if config.literal_best_update else proposal).copy()
            if on_improve is not None:
                on_improve(best_params, best_reward, seed_proposal)
        chain.append(ChainRecord(n, r_proposal, r_previous, p, accepted, best_reward))
    return TrainResult(best_params, best_reward, chain, 2 * config.episodes_per_eval)


def train(env_kind: str, init_params: ParamTensor, config: MhConfig,
          on_improve: Callable[[ParamTensor, float, int], None] | None = None) -> TrainResult:
    spec = env_spec(env_kind)
    if (init_params.obs_dim, init_params.n_actions) != (spec.obs_dim, spec.n_actions):
        raise ValueError(f"initial parameters do not fit {env_kind}")
    floor = spec.reward_floor if config.reward_floor is None else config.reward_floor

    def evaluate(params: ParamTensor, seed: int) -> float:
        return evaluate_reward(params, env_kind, seed, config.episodes_per_eval, config.t_snn)

    return run_chain(init_params, evaluate, config, floor, on_improve)


def tv_distance_to_density(samples: Sequence[float], cdf: Callable[[float], float],
                           low: float, high: float, bins: int) -> float:
    """Total-variation distance between a sample histogram and a target on [low, high]."""
    samples = np.asarray(samples, dtype=np.float64).ravel()
    counts, edges = np.histogram(samples, bins=bins, range=(low, high))
    empirical = counts / samples.size
    target = np.array([cdf(b) - cdf(a) for a, b in zip(edges[:-1], edges[1:])])
    return 0.5 * float(np.abs(empirical - target).sum())
