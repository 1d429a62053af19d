"""Compare the compiled and pure-Python rollout backends.

    python benchmarks/bench_rollout.py [--episodes N]

Each backend runs the same SNN policies on the same seeds; rewards must agree
exactly, and the script reports episodes/s and env steps/s per backend.
"""
import argparse
import time

import numpy as np

from spike_mh.envs import env_spec
from spike_mh.rollout import BACKENDS, rollout_snn
from spike_mh.snn import ParamTensor


def bench(env_kind, backend, policies, seeds):
    start = time.perf_counter()
    results = [rollout_snn(p, env_kind, s, 5, backend=backend) for p, s in zip(policies, seeds)]
    elapsed = time.perf_counter() - start
    return results, elapsed


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--episodes", type=int, default=40)
    args = parser.parse_args()
    if "compiled" not in BACKENDS:
        print("compiled backend not built; only the pure-Python backend is available")
    rng = np.random.default_rng(0)
    print(f"{'env':9s} {'backend':9s} {'episodes/s':>11s} {'steps/s':>12s} {'speedup':>8s}")
    for env_kind in ("cartpole", "acrobot"):
        spec = env_spec(env_kind)
        policies = [ParamTensor.random(spec.obs_dim, spec.n_actions, rng, weight_std=1.0)
                    for _ in range(args.episodes)]
        seeds = list(range(args.episodes))
        baseline = None
        reference = None
        for backend in ("python", "compiled"):
            if backend not in BACKENDS:
                continue
            results, elapsed = bench(env_kind, backend, policies, seeds)
            if reference is None:
                reference = results
            elif results != reference:
                raise SystemExit(f"{env_kind}: backends disagree")
            steps = sum(s for _, s in results)
            baseline = baseline or elapsed
            print(f"{env_kind:9s} {backend:9s} {len(results) / elapsed:11.1f} {steps / elapsed:12.0f} "
                  f"{baseline / elapsed:7.1f}x")


if __name__ == "__main__":
    main()
