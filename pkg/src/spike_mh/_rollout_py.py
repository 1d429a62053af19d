"""Pure-Python episode rollout, used when the compiled extension is unavailable.

Arithmetic order mirrors ``_rollout.pyx`` and ``snn.py`` so all three paths
produce bit-identical rewards.
"""
import math

from .envs import (
    acrobot_dynamics,
    acrobot_reached_goal,
    cartpole_dynamics,
    cartpole_failed,
)

CARTPOLE_CODE = 0
ACROBOT_CODE = 1


def _observe(kind, s):
    if kind == CARTPOLE_CODE:
        return list(s)
    return [math.cos(s[0]), math.sin(s[0]), math.cos(s[1]), math.sin(s[1]), s[2], s[3]]


def rollout(kind, w_in, w_lateral, alpha, mu, init_state, t_max, t_snn):
    """Run one SNN-controlled episode from ``init_state``; return (reward, steps)."""
    obs_dim = len(w_in)
    n = len(w_in[0])
    w_in = [[float(w) for w in row] for row in w_in]
    w_lat = [[float(w) for w in row] for row in w_lateral]
    alpha = float(alpha)
    one_minus = 1.0 - alpha
    mu = float(mu)
    v = [0.0] * n
    spikes = [0.0] * n
    s = tuple(float(x) for x in init_state)
    total = 0.0
    steps = 0
    while steps < t_max:
        obs = _observe(kind, s)
        counts = [0] * n
        for _ in range(t_snn):
            new_spikes = [0.0] * n
            for i in range(n):
                j_i = 0.0
                for k in range(obs_dim):
                    j_i += w_in[k][i] * obs[k]
                for j in range(n):
                    j_i += w_lat[j][i] * spikes[j]
                vi = alpha * v[i] + one_minus * j_i
                if vi >= mu:
                    new_spikes[i] = 1.0
                    counts[i] += 1
                    vi = 0.0
                v[i] = vi
            spikes = new_spikes
        action = 0
        for i in range(1, n):
            if counts[i] > counts[action] or (counts[i] == counts[action] and v[i] > v[action]):
                action = i
        steps += 1
        if kind == CARTPOLE_CODE:
            s = cartpole_dynamics(*s, action)
            total += 1.0
            if cartpole_failed(s[0], s[2]):
                break
        else:
            s = acrobot_dynamics(*s, action)
            if acrobot_reached_goal(s[0], s[1]):
                break
            total -= 1.0
    return total, steps
