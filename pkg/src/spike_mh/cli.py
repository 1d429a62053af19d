"""Command line: ``train``, ``eval`` and ``report``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .envs import ENV_KINDS, env_spec
from .harness import ALGOS, ConfigError, load_config, report, run_experiment
from .mh import evaluate_reward
from .rollout import BACKEND
from .snn import DEFAULT_T_SNN, ParamTensor


def _seeds(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spike-mh", description="Train SNN policies with reward-driven MH sampling")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run an experiment over one or more seeds")
    p.add_argument("--env", choices=ENV_KINDS, help="environment (overrides the config file)")
    p.add_argument("--algo", choices=ALGOS, help="training algorithm (overrides the config file)")
    p.add_argument("--config", help="TOML experiment config")
    p.add_argument("--seeds", type=_seeds, help="comma-separated seeds, e.g. 1,2,3")
    p.add_argument("--out", help="output directory")
    p.add_argument("--hidden-layers", type=int, help="DQL hidden layers (0-3)")

    p = sub.add_parser("eval", help="evaluate a saved parameter file")
    p.add_argument("--params", required=True, help="ParamTensor JSON checkpoint")
    p.add_argument("--env", required=True, choices=ENV_KINDS)
    p.add_argument("--episodes", type=int, default=1)
    p.add_argument("--seed", type=int, help="seed of the first episode (default: the checkpoint's own seed, else 0)")
    p.add_argument("--t-snn", type=int, default=DEFAULT_T_SNN)

    p = sub.add_parser("report", help="rebuild tables and plots from CSV logs")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--window", type=int, default=50)
    return parser


def _train(args) -> int:
    config = load_config(args.config, env_kind=args.env, algo=args.algo, seeds=args.seeds,
                         out_dir=args.out, hidden_layers=args.hidden_layers)
    summary = run_experiment(config)
    print(f"{config.algo} on {config.env_kind} ({BACKEND} rollout), {len(config.seeds)} seed(s) "
          f"in {summary.wall_seconds:.1f}s")
    for seed, best, idx in zip(summary.seeds, summary.best_rewards, summary.best_indices):
        print(f"  seed {seed}: best {best:g} first reached at {idx}")
    print(f"  median {summary.median_best:g}, max {summary.max_best:g}; logs in {config.out_dir}")
    return 0


def _eval(args) -> int:
    try:
        params = ParamTensor.load_json(args.params)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load parameters from {args.params}: {exc}") from exc
    spec = env_spec(args.env)
    if (params.obs_dim, params.n_actions) != (spec.obs_dim, spec.n_actions):
        raise ConfigError(f"parameters are shaped for obs_dim={params.obs_dim}, n_actions={params.n_actions}; "
                          f"{args.env} needs {spec.obs_dim}, {spec.n_actions}")
    if args.episodes < 1:
        raise ConfigError("--episodes must be >= 1")
    seed = args.seed
    if seed is None:
        seed = int(json.loads(Path(args.params).read_text()).get("eval_seed", 0))
    rewards = [evaluate_reward(params, args.env, seed + e, 1, args.t_snn) for e in range(args.episodes)]
    for e, r in enumerate(rewards):
        print(f"episode {e} (seed {seed + e}): {r:g}")
    print(f"mean reward {sum(rewards) / len(rewards):g}")
    return 0


def _report(args) -> int:
    _, text = report(args.in_dir, args.window)
    print(text, end="")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"train": _train, "eval": _eval, "report": _report}[args.command]
    try:
        return handler(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
