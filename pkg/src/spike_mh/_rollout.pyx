# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled episode rollout: environment dynamics and LIF policy in one C loop.

Must stay arithmetically identical to ``_rollout_py.py``; build with
``-ffp-contract=off`` so no fused multiply-adds change the rounding.
"""
from libc.math cimport cos, sin, M_PI

import numpy as np

cdef enum:
    MAX_N = 16
    MAX_OBS = 16

cdef double GRAVITY = 9.8
cdef double MASS_POLE = 0.1
cdef double TOTAL_MASS = 1.0 + 0.1
cdef double HALF_POLE_LENGTH = 0.5
cdef double POLEMASS_LENGTH = MASS_POLE * HALF_POLE_LENGTH
cdef double FORCE_MAG = 10.0
cdef double TAU = 0.02
cdef double X_THRESHOLD = 2.4
cdef double THETA_THRESHOLD = 12 * 2 * M_PI / 360

cdef double ACROBOT_DT = 0.2
cdef double MAX_VEL_1 = 4 * M_PI
cdef double MAX_VEL_2 = 9 * M_PI


cdef inline void cartpole_dynamics(double* s, int action) noexcept nogil:
    cdef double force = FORCE_MAG if action == 1 else -FORCE_MAG
    cdef double costheta = cos(s[2])
    cdef double sintheta = sin(s[2])
    cdef double temp = (force + POLEMASS_LENGTH * (s[3] * s[3]) * sintheta) / TOTAL_MASS
    cdef double thetaacc = (GRAVITY * sintheta - costheta * temp) / (
        HALF_POLE_LENGTH * (4.0 / 3.0 - MASS_POLE * (costheta * costheta) / TOTAL_MASS))
    cdef double xacc = temp - POLEMASS_LENGTH * thetaacc * costheta / TOTAL_MASS
    s[0] = s[0] + TAU * s[1]
    s[1] = s[1] + TAU * xacc
    s[2] = s[2] + TAU * s[3]
    s[3] = s[3] + TAU * thetaacc


cdef inline bint cartpole_failed(double* s) noexcept nogil:
    return s[0] < -X_THRESHOLD or s[0] > X_THRESHOLD or s[2] < -THETA_THRESHOLD or s[2] > THETA_THRESHOLD


cdef inline void acrobot_derivatives(double* s, double torque, double* out) noexcept nogil:
    # unit masses/lengths/inertias, lc = 0.5; written to match envs.acrobot_derivatives
    cdef double m1 = 1.0, m2 = 1.0, l1 = 1.0, lc1 = 0.5, lc2 = 0.5, i1 = 1.0, i2 = 1.0, g = 9.8
    cdef double cos2 = cos(s[1])
    cdef double sin2 = sin(s[1])
    cdef double d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2 * l1 * lc2 * cos2) + i1 + i2
    cdef double d2 = m2 * (lc2 * lc2 + l1 * lc2 * cos2) + i2
    cdef double phi2 = m2 * lc2 * g * sin(s[0] + s[1])
    cdef double phi1 = (-m2 * l1 * lc2 * s[3] * s[3] * sin2
                        - 2 * m2 * l1 * lc2 * s[3] * s[2] * sin2
                        + (m1 * lc1 + m2 * l1) * g * sin(s[0])
                        + phi2)
    cdef double ddtheta2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * s[2] * s[2] * sin2 - phi2) / (
        m2 * lc2 * lc2 + i2 - d2 * d2 / d1)
    out[0] = s[2]
    out[1] = s[3]
    out[2] = -(d2 * ddtheta2 + phi1) / d1
    out[3] = ddtheta2


cdef inline double wrap_angle(double x) noexcept nogil:
    cdef double diff = M_PI - (-M_PI)
    while x > M_PI:
        x = x - diff
    while x < -M_PI:
        x = x + diff
    return x


cdef inline double clip(double x, double low, double high) noexcept nogil:
    if x < low:
        x = low
    if x > high:
        return high
    return x


cdef inline void acrobot_dynamics(double* s, int action) noexcept nogil:
    cdef double torque = <double>(action - 1)
    cdef double h = ACROBOT_DT
    cdef double h2 = h / 2.0
    cdef double k1[4]
    cdef double k2[4]
    cdef double k3[4]
    cdef double k4[4]
    cdef double tmp[4]
    cdef int i
    acrobot_derivatives(s, torque, k1)
    for i in range(4):
        tmp[i] = s[i] + h2 * k1[i]
    acrobot_derivatives(tmp, torque, k2)
    for i in range(4):
        tmp[i] = s[i] + h2 * k2[i]
    acrobot_derivatives(tmp, torque, k3)
    for i in range(4):
        tmp[i] = s[i] + h * k3[i]
    acrobot_derivatives(tmp, torque, k4)
    for i in range(4):
        s[i] = s[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])
    s[0] = wrap_angle(s[0])
    s[1] = wrap_angle(s[1])
    s[2] = clip(s[2], -MAX_VEL_1, MAX_VEL_1)
    s[3] = clip(s[3], -MAX_VEL_2, MAX_VEL_2)


cdef inline bint acrobot_reached_goal(double* s) noexcept nogil:
    return -cos(s[0]) - cos(s[1] + s[0]) > 1.0


cdef void run(int kind, const double[:, ::1] w_in, const double[:, ::1] w_lat,
              double alpha, double mu, double* s, int t_max, int t_snn,
              double* total_out, int* steps_out) noexcept nogil:
    cdef int obs_dim = w_in.shape[0]
    cdef int n = w_in.shape[1]
    cdef double one_minus = 1.0 - alpha
    cdef double v[MAX_N]
    cdef double spikes[MAX_N]
    cdef double new_spikes[MAX_N]
    cdef int counts[MAX_N]
    cdef double obs[MAX_OBS]
    cdef double total = 0.0, j_i, vi
    cdef int steps = 0, i, j, k, m, action
    for i in range(n):
        v[i] = 0.0
        spikes[i] = 0.0
    while steps < t_max:
        if kind == 0:
            for k in range(4):
                obs[k] = s[k]
        else:
            obs[0] = cos(s[0])
            obs[1] = sin(s[0])
            obs[2] = cos(s[1])
            obs[3] = sin(s[1])
            obs[4] = s[2]
            obs[5] = s[3]
        for i in range(n):
            counts[i] = 0
        for m in range(t_snn):
            for i in range(n):
                j_i = 0.0
                for k in range(obs_dim):
                    j_i += w_in[k, i] * obs[k]
                for j in range(n):
                    j_i += w_lat[j, i] * spikes[j]
                vi = alpha * v[i] + one_minus * j_i
                if vi >= mu:
                    new_spikes[i] = 1.0
                    counts[i] += 1
                    vi = 0.0
                else:
                    new_spikes[i] = 0.0
                v[i] = vi
            for i in range(n):
                spikes[i] = new_spikes[i]
        action = 0
        for i in range(1, n):
            if counts[i] > counts[action] or (counts[i] == counts[action] and v[i] > v[action]):
                action = i
        steps += 1
        if kind == 0:
            cartpole_dynamics(s, action)
            total += 1.0
            if cartpole_failed(s):
                break
        else:
            acrobot_dynamics(s, action)
            if acrobot_reached_goal(s):
                break
            total -= 1.0
    total_out[0] = total
    steps_out[0] = steps


def rollout(int kind, w_in, w_lateral, double alpha, double mu, init_state, int t_max, int t_snn):
    """Run one SNN-controlled episode from ``init_state``; return (reward, steps)."""
    cdef const double[:, ::1] w_in_v = np.ascontiguousarray(w_in, dtype=np.float64)
    cdef const double[:, ::1] w_lat_v = np.ascontiguousarray(w_lateral, dtype=np.float64)
    cdef double s[4]
    cdef double total
    cdef int steps
    cdef int i
    if w_in_v.shape[1] > MAX_N or w_in_v.shape[0] > MAX_OBS:
        raise ValueError("network too large for the compiled rollout")
    if w_lat_v.shape[0] != w_in_v.shape[1] or w_lat_v.shape[1] != w_in_v.shape[1]:
        raise ValueError("w_lateral must be square with one row per output neuron")
    expected_obs = 4 if kind == 0 else 6
    if w_in_v.shape[0] != expected_obs:
        raise ValueError(f"w_in has {w_in_v.shape[0]} rows, environment observes {expected_obs}")
    for i in range(4):
        s[i] = init_state[i]
    with nogil:
        run(kind, w_in_v, w_lat_v, alpha, mu, s, t_max, t_snn, &total, &steps)
    return total, steps
