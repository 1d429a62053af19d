"""Episode rollout backend, chosen at import time.

The compiled extension is used when it is importable; set
``SPIKE_MH_PURE_PYTHON=1`` to force the pure-Python implementation.
"""
import os

from . import _rollout_py
from .envs import ACROBOT, CARTPOLE, T_MAX, env_spec, initial_state

KIND_CODES = {CARTPOLE: _rollout_py.CARTPOLE_CODE, ACROBOT: _rollout_py.ACROBOT_CODE}


def _load_compiled():
    try:
        from . import _rollout
    except ImportError:
        return None
    return _rollout


_compiled = None if os.environ.get("SPIKE_MH_PURE_PYTHON") else _load_compiled()

BACKENDS = {"python": _rollout_py.rollout}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled.rollout

BACKEND = "compiled" if _compiled is not None else "python"


def rollout_snn(params, env_kind, seed, t_snn, t_max=T_MAX, backend=None):
    """Run one episode of the SNN policy ``params`` from ``reset(env_kind, seed)``.

    Returns (accumulated reward, steps).
    """
    spec = env_spec(env_kind)
    if params.obs_dim != spec.obs_dim or params.n_actions != spec.n_actions:
        raise ValueError(
            f"parameters are shaped ({params.obs_dim}, {params.n_actions}); "
            f"{env_kind} needs ({spec.obs_dim}, {spec.n_actions})"
        )
    name = backend or BACKEND
    if name not in BACKENDS:
        raise ValueError(f"unknown rollout backend {name!r}; available: {sorted(BACKENDS)}")
    fn = BACKENDS[name]
    state = initial_state(env_kind, seed).as_tuple()
    return fn(KIND_CODES[env_kind], params.w_in, params.w_lateral, params.alpha_decay,
              params.mu, state, int(t_max), int(t_snn))
