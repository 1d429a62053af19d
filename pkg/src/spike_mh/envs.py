"""CartPole-v1 and Acrobot-v1 dynamics, seed-reproducible, without a gym dependency.

Constants, integrators and reward semantics follow the standard classic-control
definitions so that trajectories agree with the reference environments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

CARTPOLE = "cartpole"
ACROBOT = "acrobot"
ENV_KINDS = (CARTPOLE, ACROBOT)

T_MAX = 500

# CartPole-v1
GRAVITY = 9.8
MASS_CART = 1.0
MASS_POLE = 0.1
TOTAL_MASS = MASS_CART + MASS_POLE
HALF_POLE_LENGTH = 0.5
POLEMASS_LENGTH = MASS_POLE * HALF_POLE_LENGTH
FORCE_MAG = 10.0
TAU = 0.02
X_THRESHOLD = 2.4
THETA_THRESHOLD = 12 * 2 * math.pi / 360  # 0.20943951 rad

# Acrobot-v1 ("book" dynamics)
LINK_LENGTH_1 = 1.0
LINK_MASS_1 = 1.0
LINK_MASS_2 = 1.0
LINK_COM_POS_1 = 0.5
LINK_COM_POS_2 = 0.5
LINK_MOI = 1.0
ACROBOT_DT = 0.2
MAX_VEL_1 = 4 * math.pi
MAX_VEL_2 = 9 * math.pi
AVAIL_TORQUE = (-1.0, 0.0, 1.0)


class EpisodeFinishedError(RuntimeError):
    """Raised when stepping an episode that already terminated or truncated."""


@dataclass(frozen=True)
class EnvSpec:
    kind: str
    obs_dim: int
    n_actions: int
    reward_min: float
    reward_max: float
    # default shift that makes every accumulated reward a positive pseudo-likelihood
    reward_floor: float


ENV_SPECS = {
    CARTPOLE: EnvSpec(CARTPOLE, 4, 2, 1.0, float(T_MAX), 0.0),
    ACROBOT: EnvSpec(ACROBOT, 6, 3, -float(T_MAX), -1.0, -float(T_MAX) - 1.0),
}


def env_spec(env_kind: str) -> EnvSpec:
    try:
        return ENV_SPECS[env_kind]
    except KeyError:
        raise ValueError(f"unknown environment {env_kind!r}; expected one of {ENV_KINDS}") from None


@dataclass(frozen=True)
class CartPoleState:
    x: float
    x_dot: float
    theta: float
    theta_dot: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.x_dot, self.theta, self.theta_dot)

    def is_terminal(self) -> bool:
        return cartpole_failed(self.x, self.theta)


@dataclass(frozen=True)
class AcrobotState:
    theta1: float
    theta2: float
    theta1_dot: float
    theta2_dot: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.theta1, self.theta2, self.theta1_dot, self.theta2_dot)

    def is_terminal(self) -> bool:
        return acrobot_reached_goal(self.theta1, self.theta2)


@dataclass(frozen=True)
class StepOutcome:
    observation: np.ndarray
    reward: float
    terminated: bool
    truncated: bool

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated


# --- scalar dynamics (shared with the pure-Python rollout backend) ---------


def cartpole_failed(x: float, theta: float) -> bool:
    return x < -X_THRESHOLD or x > X_THRESHOLD or theta < -THETA_THRESHOLD or theta > THETA_THRESHOLD


def cartpole_dynamics(x, x_dot, theta, theta_dot, action):
    """One explicit-Euler CartPole step on plain floats."""
    force = FORCE_MAG if action == 1 else -FORCE_MAG
    costheta = math.cos(theta)
    sintheta = math.sin(theta)
    temp = (force + POLEMASS_LENGTH * (theta_dot * theta_dot) * sintheta) / TOTAL_MASS
    thetaacc = (GRAVITY * sintheta - costheta * temp) / (
        HALF_POLE_LENGTH * (4.0 / 3.0 - MASS_POLE * (costheta * costheta) / TOTAL_MASS)
    )
    xacc = temp - POLEMASS_LENGTH * thetaacc * costheta / TOTAL_MASS
    x = x + TAU * x_dot
    x_dot = x_dot + TAU * xacc
    theta = theta + TAU * theta_dot
    theta_dot = theta_dot + TAU * thetaacc
    return x, x_dot, theta, theta_dot


def acrobot_reached_goal(theta1: float, theta2: float) -> bool:
    return -math.cos(theta1) - math.cos(theta2 + theta1) > 1.0


def acrobot_derivatives(theta1, theta2, dtheta1, dtheta2, torque):
    m1, m2 = LINK_MASS_1, LINK_MASS_2
    l1 = LINK_LENGTH_1
    lc1, lc2 = LINK_COM_POS_1, LINK_COM_POS_2
    i1 = i2 = LINK_MOI
    g = 9.8
    cos2 = math.cos(theta2)
    sin2 = math.sin(theta2)
    d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2 * l1 * lc2 * cos2) + i1 + i2
    d2 = m2 * (lc2 * lc2 + l1 * lc2 * cos2) + i2
    # cos(a - pi/2) written as sin(a) so the hanging rest state is an exact fixed point
    phi2 = m2 * lc2 * g * math.sin(theta1 + theta2)
    phi1 = (
        -m2 * l1 * lc2 * dtheta2 * dtheta2 * sin2
        - 2 * m2 * l1 * lc2 * dtheta2 * dtheta1 * sin2
        + (m1 * lc1 + m2 * l1) * g * math.sin(theta1)
        + phi2
    )
    ddtheta2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * sin2 - phi2) / (
        m2 * lc2 * lc2 + i2 - d2 * d2 / d1
    )
    ddtheta1 = -(d2 * ddtheta2 + phi1) / d1
    return dtheta1, dtheta2, ddtheta1, ddtheta2


def wrap_angle(x: float, low: float = -math.pi, high: float = math.pi) -> float:
    diff = high - low
    while x > high:
        x = x - diff
    while x < low:
        x = x + diff
    return x


def clip(x: float, low: float, high: float) -> float:
    return min(max(x, low), high)


def acrobot_dynamics(theta1, theta2, dtheta1, dtheta2, action):
    """One RK4 step of length ``ACROBOT_DT``, then angle wrap and velocity clip."""
    torque = AVAIL_TORQUE[action]
    h = ACROBOT_DT
    h2 = h / 2.0
    s = (theta1, theta2, dtheta1, dtheta2)
    k1 = acrobot_derivatives(*s, torque)
    k2 = acrobot_derivatives(*[s[i] + h2 * k1[i] for i in range(4)], torque)
    k3 = acrobot_derivatives(*[s[i] + h2 * k2[i] for i in range(4)], torque)
    k4 = acrobot_derivatives(*[s[i] + h * k3[i] for i in range(4)], torque)
    ns = [s[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]) for i in range(4)]
    return (
        wrap_angle(ns[0]),
        wrap_angle(ns[1]),
        clip(ns[2], -MAX_VEL_1, MAX_VEL_1),
        clip(ns[3], -MAX_VEL_2, MAX_VEL_2),
    )


# --- public operations ------------------------------------------------------


def initial_state(env_kind: str, seed: int) -> CartPoleState | AcrobotState:
    """Draw the reset state for ``seed``; the same seed always gives the same state."""
    rng = np.random.default_rng(seed)
    if env_kind == CARTPOLE:
        return CartPoleState(*(float(v) for v in rng.uniform(-0.05, 0.05, size=4)))
    if env_kind == ACROBOT:
        # the reference implementation stores its reset draw as float32
        draw = rng.uniform(-0.1, 0.1, size=4).astype(np.float32)
        return AcrobotState(*(float(v) for v in draw))
    env_spec(env_kind)
    raise AssertionError("unreachable")


def observe(state: CartPoleState | AcrobotState) -> np.ndarray:
    if isinstance(state, CartPoleState):
        return np.array(state.as_tuple(), dtype=np.float64)
    t1, t2, d1, d2 = state.as_tuple()
    return np.array([math.cos(t1), math.sin(t1), math.cos(t2), math.sin(t2), d1, d2])


def reset(env_kind: str, seed: int) -> np.ndarray:
    return observe(initial_state(env_kind, seed))


def _check_action(action, n_actions: int) -> int:
    a = int(action)
    if a != action or not 0 <= a < n_actions:
        raise ValueError(f"invalid action {action!r}; expected an integer in [0, {n_actions})")
    return a


def cartpole_step(state: CartPoleState, action: int, steps_taken: int = 0,
                  t_max: int = T_MAX) -> tuple[CartPoleState, StepOutcome]:
    """Advance CartPole by one control step.

    ``steps_taken`` is the number of steps already taken in the episode; it only
    matters for truncation.
    """
    if state.is_terminal() or steps_taken >= t_max:
        raise EpisodeFinishedError("cannot step a finished CartPole episode")
    action = _check_action(action, 2)
    new = CartPoleState(*cartpole_dynamics(*state.as_tuple(), action))
    terminated = new.is_terminal()
    truncated = steps_taken + 1 >= t_max
    return new, StepOutcome(observe(new), 1.0, terminated, truncated)


def acrobot_step(state: AcrobotState, action: int, steps_taken: int = 0,
                 t_max: int = T_MAX) -> tuple[AcrobotState, StepOutcome]:
    """Advance Acrobot by one control step (torque on the second joint)."""
    if state.is_terminal() or steps_taken >= t_max:
        raise EpisodeFinishedError("cannot step a finished Acrobot episode")
    action = _check_action(action, 3)
    new = AcrobotState(*acrobot_dynamics(*state.as_tuple(), action))
    terminated = new.is_terminal()
    truncated = steps_taken + 1 >= t_max
    reward = 0.0 if terminated else -1.0
    return new, StepOutcome(observe(new), reward, terminated, truncated)


class Env:
    """Stateful episode wrapper around the step functions."""

    def __init__(self, env_kind: str, t_max: int = T_MAX):
        self.spec = env_spec(env_kind)
        self.kind = env_kind
        self.t_max = t_max
        self.state: CartPoleState | AcrobotState | None = None
        self.steps = 0
        self.done = True

    def reset(self, seed: int) -> np.ndarray:
        self.state = initial_state(self.kind, seed)
        self.steps = 0
        self.done = False
        return observe(self.state)

    def step(self, action: int) -> StepOutcome:
        if self.state is None or self.done:
            raise EpisodeFinishedError("call reset() before stepping a finished episode")
        step_fn = cartpole_step if self.kind == CARTPOLE else acrobot_step
        self.state, outcome = step_fn(self.state, action, self.steps, self.t_max)
        self.steps += 1
        self.done = outcome.done
        return outcome


def run_episode(env_kind: str, policy: Callable[[np.ndarray], int], seed: int,
                t_max: int = T_MAX) -> tuple[float, int]:
    """Roll out one episode and return (accumulated reward, number of steps).

    If ``policy`` has a ``reset()`` method it is called first, so stateful
    policies start every episode from rest.
    """
    env = Env(env_kind, t_max)
    obs = env.reset(seed)
    if hasattr(policy, "reset"):
        policy.reset()
    total = 0.0
    while True:
        outcome = env.step(policy(obs))
        total += outcome.reward
        if outcome.done:
            return total, env.steps
        obs = outcome.observation
