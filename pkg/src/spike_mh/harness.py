"""Experiment orchestration: configs, per-seed runs, CSV logs, summaries, tables, SVG plots."""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from pathlib import Path

import numpy as np

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .dql import DqlConfig, dql_train
from .envs import ENV_KINDS, env_spec
from .mh import MhConfig, train
from .snn import ParamTensor

MH_SNN = "mh-snn"
DQL = "dql"
ALGOS = (MH_SNN, DQL)

MH_HEADER = ["step", "episode_reward", "accepted", "acceptance_ratio", "best_reward"]
DQL_HEADER = ["episode", "episode_reward", "epsilon"]


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class SnnInit:
    weight_std: float = 0.5
    alpha_decay: float = 0.9
    mu: float = 1.0


@dataclass
class ExperimentConfig:
    env_kind: str
    algo: str = MH_SNN
    seeds: list[int] = field(default_factory=lambda: [1])
    mh: MhConfig = field(default_factory=MhConfig)
    snn: SnnInit = field(default_factory=SnnInit)
    dql: DqlConfig = field(default_factory=DqlConfig)
    hidden_layers: int = 1
    out_dir: Path = Path("runs")
    window: int = 50

    def __post_init__(self):
        if self.env_kind not in ENV_KINDS:
            raise ConfigError(f"env must be one of {ENV_KINDS}, got {self.env_kind!r}")
        if self.algo not in ALGOS:
            raise ConfigError(f"algo must be one of {ALGOS}, got {self.algo!r}")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.window < 1:
            raise ConfigError("window must be >= 1")
        self.out_dir = Path(self.out_dir)


def _build(cls, block: dict, name: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(block) - known
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")
    try:
        return cls(**block)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [{name}] block: {exc}") from exc


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Read a TOML file with an ``[experiment]`` table and nested algorithm tables.

    Keyword overrides (env_kind, algo, seeds, out_dir) take precedence over the file.
    """
    exp: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
        if "experiment" not in data:
            raise ConfigError("config must contain an [experiment] table")
        exp = dict(data["experiment"])
    mh = _build(MhConfig, exp.pop("mh", {}), "experiment.mh")
    snn = _build(SnnInit, exp.pop("snn", {}), "experiment.snn")
    dql = _build(DqlConfig, exp.pop("dql", {}), "experiment.dql")
    renames = {"env": "env_kind", "out": "out_dir"}
    exp = {renames.get(k, k): v for k, v in exp.items()}
    exp.update({k: v for k, v in overrides.items() if v is not None})
    exp.setdefault("env_kind", None)
    return _build(ExperimentConfig, {**exp, "mh": mh, "snn": snn, "dql": dql}, "experiment")


def moving_average(series, window: int) -> list[float]:
    """Trailing mean over the last ``window`` values (shorter at the start).

    Sums are kept exact and each mean is rounded once, so a constant series maps
    to itself and a non-decreasing series stays non-decreasing.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    values = [Fraction(float(x)) for x in series]
    out = []
    total = Fraction(0)
    for i, x in enumerate(values):
        total += x
        if i >= window:
            total -= values[i - window]
        out.append(float(total / min(i + 1, window)))
    return out


def round_to_decade(x: float) -> int:
    """Nearest multiple of 10, halves away from zero."""
    return int(Decimal(repr(x)).quantize(Decimal("1E1"), rounding=ROUND_HALF_UP))


@dataclass
class SeedRun:
    seed: int
    best_reward: float
    best_index: int  # MH iteration or DQL episode at which best_reward was first reached
    length: int
    episodes: int
    rewards: list[float]
    csv_path: Path | None = None


@dataclass
class RunSummary:
    env_kind: str
    algo: str
    seeds: list[int]
    best_rewards: list[float]
    best_indices: list[int]
    best_episodes: list[int]
    lengths: list[int]
    plateaus: list[float]
    median_best: float
    max_best: float
    wall_seconds: float
    hidden_layers: int | None = None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_runs(cls, env_kind, algo, runs: list[SeedRun], window: int, wall_seconds: float,
                  hidden_layers=None) -> RunSummary:
        bests = [r.best_reward for r in runs]
        per_iter = runs[0].episodes // max(runs[0].length, 1) if algo == MH_SNN else 1
        return cls(
            env_kind=env_kind,
            algo=algo,
            seeds=[r.seed for r in runs],
            best_rewards=bests,
            best_indices=[r.best_index for r in runs],
            best_episodes=[r.best_index * per_iter for r in runs],
            lengths=[r.length for r in runs],
            plateaus=[max(moving_average(r.rewards, window)) for r in runs],
            median_best=statistics.median(bests),
            max_best=max(bests),
            wall_seconds=wall_seconds,
            hidden_layers=hidden_layers,
        )


def _fmt(x) -> str:
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_run_csv(path) -> tuple[str, dict[str, list]]:
    """Parse a run log back into typed columns; returns (algo, columns)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    if header == MH_HEADER:
        algo, types = MH_SNN, [int, float, lambda s: s == "True", float, float]
    elif header == DQL_HEADER:
        algo, types = DQL, [int, float, float]
    else:
        raise ValueError(f"{path}: unrecognized header {header}")
    cols = {name: [t(row[i]) for row in rows] for i, (name, t) in enumerate(zip(header, types))}
    return algo, cols


def svg_plot(series, window: int, title: str) -> str:
    """Raw and smoothed reward curves as a standalone SVG polyline chart."""
    width, height, pad = 640, 360, 48
    raw = list(series)
    smooth = moving_average(raw, window)
    lo = min(raw) if raw else 0.0
    hi = max(raw) if raw else 1.0
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    n = max(len(raw) - 1, 1)

    def points(ys):
        return " ".join(
            f"{pad + (width - 2 * pad) * i / n:.2f},{height - pad - (height - 2 * pad) * (y - lo) / (hi - lo):.2f}"
            for i, y in enumerate(ys)
        )

    return "\n".join([
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{width / 2}" y="24" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{pad - 6}" y="{pad + 4}" text-anchor="end" font-family="sans-serif" '
        f'font-size="11">{hi:g}</text>',
        f'<text x="{pad - 6}" y="{height - pad + 4}" text-anchor="end" font-family="sans-serif" '
        f'font-size="11">{lo:g}</text>',
        f'<text x="{width - pad}" y="{height - pad + 18}" text-anchor="end" font-family="sans-serif" '
        f'font-size="11">{len(raw)}</text>',
        f'<polyline fill="none" stroke="#1f77b4" stroke-width="1" points="{points(raw)}"/>',
        f'<polyline fill="none" stroke="#ff7f0e" stroke-width="2" points="{points(smooth)}"/>',
        "</svg>",
        "",
    ])


def _stem(config: ExperimentConfig, seed: int) -> str:
    return f"{config.algo}_{config.env_kind}_seed{seed}"


def _run_mh_seed(config: ExperimentConfig, seed: int) -> SeedRun:
    spec = env_spec(config.env_kind)
    rng = np.random.default_rng(seed)
    init = ParamTensor.random(spec.obs_dim, spec.n_actions, rng, config.snn.weight_std,
                              config.snn.alpha_decay, config.snn.mu)
    mh_cfg = dataclasses.replace(config.mh, base_seed=seed)
    stem = _stem(config, seed)
    params_path = config.out_dir / f"{stem}_best_params.json"

    def checkpoint(params: ParamTensor, reward: float, seed: int) -> None:
        params.save_json(params_path, eval_seed=seed, eval_reward=reward)

    result = train(config.env_kind, init, mh_cfg, on_improve=checkpoint)
    csv_path = config.out_dir / f"{stem}.csv"
    write_csv(csv_path, MH_HEADER, (
        (r.iteration, r.reward_proposal, r.accepted, r.acceptance_ratio, r.best_reward_so_far)
        for r in result.chain
    ))
    rewards = [r.reward_proposal for r in result.chain]
    return SeedRun(seed, result.best_reward, result.first_best_iteration, len(result.chain),
                   len(result.chain) * result.episodes_per_iteration, rewards, csv_path)


def _run_dql_seed(config: ExperimentConfig, seed: int) -> SeedRun:
    dql_cfg = dataclasses.replace(config.dql, seed=seed)
    result = dql_train(config.env_kind, config.hidden_layers, dql_cfg)
    csv_path = config.out_dir / f"{_stem(config, seed)}.csv"
    write_csv(csv_path, DQL_HEADER, (
        (i + 1, r, e) for i, (r, e) in enumerate(zip(result.episode_rewards, result.epsilons))
    ))
    n = len(result.episode_rewards)
    return SeedRun(seed, result.best_reward, result.best_episode, n, n, result.episode_rewards, csv_path)


def worker_count(n_jobs: int) -> int:
    cap = os.environ.get("SPIKE_MH_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(n_jobs, limit))


def run_experiment(config: ExperimentConfig) -> RunSummary:
    """Run every seed, writing per-seed CSV/SVG/params and a summary.json."""
    try:
        config.out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {config.out_dir}: {exc}") from exc
    if not os.access(config.out_dir, os.W_OK):
        raise ConfigError(f"output directory {config.out_dir} is not writable")
    run_seed = _run_mh_seed if config.algo == MH_SNN else _run_dql_seed
    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=worker_count(len(config.seeds))) as pool:
        runs = list(pool.map(lambda s: run_seed(config, s), config.seeds))
    wall = time.perf_counter() - start
    for run in runs:
        title = f"{config.algo} {config.env_kind} seed {run.seed}"
        (config.out_dir / f"{_stem(config, run.seed)}.svg").write_text(svg_plot(run.rewards, config.window, title))
    summary = RunSummary.from_runs(config.env_kind, config.algo, runs, config.window, wall,
                                   config.hidden_layers if config.algo == DQL else None)
    (config.out_dir / "summary.json").write_text(json.dumps(summary.to_dict(), indent=2) + "\n")
    return summary


def emit_table(summaries: list[RunSummary]) -> tuple[str, str]:
    """Environment x algorithm table of max accumulated reward.

    Returns (text table with values rounded to the nearest 10, CSV with raw values).
    """
    if not summaries:
        raise ValueError("need at least one summary")
    envs = sorted({s.env_kind for s in summaries})
    algos = sorted({_column(s) for s in summaries})
    cell = {}
    for s in summaries:
        key = (s.env_kind, _column(s))
        cell[key] = max(cell.get(key, -math.inf), s.max_best)
    widths = [max(len("env"), *(len(e) for e in envs))] + [max(len(a), 6) for a in algos]
    lines = ["  ".join(h.ljust(w) for h, w in zip(["env", *algos], widths))]
    for e in envs:
        vals = [str(round_to_decade(cell[e, a])) if (e, a) in cell else "-" for a in algos]
        lines.append("  ".join(v.ljust(w) for v, w in zip([e, *vals], widths)))
    csv_lines = ["env,algo,max_reward,rounded"]
    for (e, a), v in sorted(cell.items()):
        csv_lines.append(f"{e},{a},{_fmt(v)},{round_to_decade(v)}")
    return "\n".join(lines) + "\n", "\n".join(csv_lines) + "\n"


def _column(s: RunSummary) -> str:
    if s.algo == DQL and s.hidden_layers is not None:
        return f"dql-{s.hidden_layers}h"
    return s.algo


def report(in_dir, window: int = 50) -> tuple[list[RunSummary], str]:
    """Rebuild summaries, plots and the comparison table from the CSV logs in ``in_dir``."""
    in_dir = Path(in_dir)
    groups: dict[tuple[str, str], list[SeedRun]] = {}
    csv_paths = sorted(p for p in in_dir.rglob("*.csv") if p.name != "table.csv")
    for path in csv_paths:
        try:
            algo, cols = read_run_csv(path)
        except (ValueError, StopIteration):
            continue
        parts = path.stem.split("_")
        if len(parts) != 3 or not parts[2].startswith("seed"):
            continue
        env_kind, seed = parts[1], int(parts[2][4:])
        rewards = cols["episode_reward"]
        if not rewards:
            continue
        if algo == MH_SNN:
            bests = cols["best_reward"]
            best = bests[-1]
            idx = cols["step"][bests.index(best)]
            run = SeedRun(seed, best, idx, len(rewards), 2 * len(rewards), rewards, path)
        else:
            best = max(rewards)
            run = SeedRun(seed, best, cols["episode"][rewards.index(best)], len(rewards), len(rewards),
                          rewards, path)
        path.with_suffix(".svg").write_text(svg_plot(rewards, window, f"{algo} {env_kind} seed {seed}"))
        groups.setdefault((algo, env_kind), []).append(run)
    if not groups:
        raise ConfigError(f"no run logs found in {in_dir}")
    summaries = []
    for (algo, env_kind), runs in sorted(groups.items()):
        hidden = None
        summary_path = runs[0].csv_path.parent / "summary.json"
        if algo == DQL and summary_path.exists():
            hidden = json.loads(summary_path.read_text()).get("hidden_layers")
        summaries.append(RunSummary.from_runs(env_kind, algo, runs, window, 0.0, hidden))
    text, table_csv = emit_table(summaries)
    (in_dir / "table.txt").write_text(text)
    (in_dir / "table.csv").write_text(table_csv)
    return summaries, text
