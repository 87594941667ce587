"""Command line entry points: train, eval, compare, oracle.

Every run writes into its own output directory: a metrics.csv in the shared
column format, a config.json echo of everything that produced it, and (for
training) one checkpoint per seed.
"""
import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .agents import make_agent
from .agents.common import derive_seed
from .baselines import (exhaustive_horizon_search, greedy_gain_policy,
                        myopic_bruteforce_policy, play_episode, random_policy)
from .config import (EpisodeConfig, agent_config, config_as_dict,
                     episode_config, frozen_probe_config)
from .env import DownlinkEnv, encode_state
from .errors import InvalidParameterError
from .metrics import (MetricRow, MetricsWriter, aggregate_curve, plot_curves,
                      read_metrics, window_stats)
from .nn import save_checkpoint, load_checkpoint

LEARNED_ALGOS = ("dqn", "ddqn", "a2c", "ppo")
FIXED_POLICIES = ("random", "greedy", "myopic")


@dataclass
class RunConfig:
    """Everything one CLI run needs; JSON configs mirror these fields."""

    algorithm: str = "dqn"
    scenario: str = "4x3"
    episodes: int = 5000
    seeds: list = field(default_factory=lambda: [0])
    out_dir: str = "runs/latest"
    paper_literal: bool = False
    record_every: int = 100
    deterministic_timing: bool = True
    save_checkpoints: bool = True
    checkpoint: str = ""          # eval: load a trained net from here
    horizon: int = 6              # oracle search depth
    episode_overrides: dict = field(default_factory=dict)
    agent_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.episodes < 1:
            raise InvalidParameterError("episodes must be >= 1")
        if self.record_every < 1:
            raise InvalidParameterError("record_every must be >= 1")
        if not self.seeds:
            raise InvalidParameterError("need at least one seed")
        if len(set(self.seeds)) != len(self.seeds):
            raise InvalidParameterError(f"duplicate seeds: {self.seeds}")
        if self.horizon < 1:
            raise InvalidParameterError("horizon must be >= 1")


def load_run_config(path, **cli_overrides) -> RunConfig:
    """Read a JSON run config; unknown keys are an error, CLI flags win."""
    with open(path) as fh:
        raw = json.load(fh)
    allowed = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise InvalidParameterError(
            f"{path}: unknown config keys {unknown}; allowed: "
            f"{sorted(allowed)}")
    raw.update({k: v for k, v in cli_overrides.items() if v is not None})
    return RunConfig(**raw)


def build_episode_config(run: RunConfig) -> EpisodeConfig:
    if run.scenario == "probe":
        if run.paper_literal:
            raise InvalidParameterError(
                "the probe scenario pins its own wavelength; drop "
                "--paper-literal")
        return frozen_probe_config(**run.episode_overrides)
    return episode_config(run.scenario, paper_literal=run.paper_literal,
                          **run.episode_overrides)


def _echo_config(run: RunConfig, env_cfg: EpisodeConfig, agent_cfg=None):
    os.makedirs(run.out_dir, exist_ok=True)
    echo = {"run": asdict(run), "episode_config": config_as_dict(env_cfg)}
    if agent_cfg is not None:
        echo["agent_config"] = config_as_dict(agent_cfg)
    path = os.path.join(run.out_dir, "config.json")
    with open(path, "w") as fh:
        json.dump(echo, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _should_record(episode: int, total: int, every: int) -> bool:
    return episode % every == 0 or episode == total


class _Clock:
    """Cumulative wall time per seed; frozen at 0.0 for reproducible files."""

    def __init__(self, deterministic: bool):
        self.deterministic = deterministic
        self.start = time.perf_counter()

    def reset(self):
        self.start = time.perf_counter()

    def elapsed(self) -> float:
        if self.deterministic:
            return 0.0
        return time.perf_counter() - self.start


def run_train(run: RunConfig) -> dict:
    """Train run.algorithm on run.scenario for every seed; write artifacts."""
    if run.algorithm not in LEARNED_ALGOS:
        raise InvalidParameterError(
            f"train needs one of {LEARNED_ALGOS}, got {run.algorithm!r}")
    env_cfg = build_episode_config(run)
    agent_cfg = agent_config(run.algorithm, run.scenario,
                             **run.agent_overrides)
    _echo_config(run, env_cfg, agent_cfg)
    clock = _Clock(run.deterministic_timing)
    csv_path = os.path.join(run.out_dir, "metrics.csv")
    failures = {}
    with MetricsWriter(csv_path) as writer:
        for seed in run.seeds:
            clock.reset()
            try:
                agent = make_agent(env_cfg, agent_cfg, seed=seed)
                for ep, stats in enumerate(agent.train_iter(run.episodes),
                                           start=1):
                    if _should_record(ep, run.episodes, run.record_every):
                        writer.write_row(MetricRow.build(
                            seed=seed, episode=ep, algorithm=run.algorithm,
                            total_reward=stats.total_reward,
                            steps_taken=stats.steps,
                            waste_count_total=stats.waste,
                            wall_time_s=clock.elapsed()))
                if run.save_checkpoints:
                    save_checkpoint(
                        os.path.join(run.out_dir,
                                     f"checkpoint_seed{seed}.npz"),
                        agent.checkpoint_parts(),
                        meta={"algorithm": run.algorithm,
                              "scenario": run.scenario, "seed": seed,
                              "episodes": run.episodes})
            except Exception as exc:  # keep the other seeds alive
                failures[seed] = f"{type(exc).__name__}: {exc}"
                writer.write_failure(seed, failures[seed])
        total_rows = writer.rows_written
    return {"metrics": csv_path, "failures": failures, "rows": total_rows}


def _fixed_policy_fn(name, env_cfg, rng):
    if name == "random":
        return lambda s: random_policy(s, rng)
    if name == "greedy":
        return greedy_gain_policy
    if name == "myopic":
        return lambda s: myopic_bruteforce_policy(s, env_cfg)
    raise InvalidParameterError(f"unknown policy {name!r}")


def _checkpoint_policy_fn(run, env_cfg):
    """Greedy rollout of a trained network loaded from run.checkpoint."""
    agent_cfg = agent_config(run.algorithm, run.scenario,
                             **run.agent_overrides)
    agent = make_agent(env_cfg, agent_cfg, seed=run.seeds[0])
    parts, _, _ = load_checkpoint(run.checkpoint)
    agent.load_parts(parts)
    def act(state):
        return agent.greedy_action(encode_state(state, env_cfg))

    return act


def run_eval(run: RunConfig) -> dict:
    """Roll a fixed policy or a trained checkpoint; one row per episode."""
    env_cfg = build_episode_config(run)
    _echo_config(run, env_cfg)
    if run.algorithm in LEARNED_ALGOS:
        if not run.checkpoint:
            raise InvalidParameterError(
                f"eval with {run.algorithm!r} needs --checkpoint")
        policy_fn = _checkpoint_policy_fn(run, env_cfg)
    elif run.algorithm in FIXED_POLICIES:
        policy_fn = None  # built per seed so reruns are deterministic
    else:
        raise InvalidParameterError(
            f"eval needs one of {FIXED_POLICIES + LEARNED_ALGOS}, got "
            f"{run.algorithm!r}")
    clock = _Clock(run.deterministic_timing)
    csv_path = os.path.join(run.out_dir, "metrics.csv")
    failures = {}
    steps_all, waste_all, reward_all, completed = [], [], [], 0
    episodes_run = 0
    with MetricsWriter(csv_path) as writer:
        for seed in run.seeds:
            clock.reset()
            try:
                fn = policy_fn or _fixed_policy_fn(
                    run.algorithm, env_cfg,
                    np.random.default_rng(derive_seed(seed, 11)))
                env = DownlinkEnv(env_cfg, seed=derive_seed(seed, 7))
                for ep in range(1, run.episodes + 1):
                    env.reset()
                    out = play_episode(env, fn)
                    steps_all.append(out["steps"])
                    waste_all.append(out["waste"])
                    reward_all.append(out["total_reward"])
                    completed += out["completed"]
                    episodes_run += 1
                    if _should_record(ep, run.episodes, run.record_every):
                        writer.write_row(MetricRow.build(
                            seed=seed, episode=ep, algorithm=run.algorithm,
                            total_reward=out["total_reward"],
                            steps_taken=out["steps"],
                            waste_count_total=out["waste"],
                            wall_time_s=clock.elapsed()))
            except Exception as exc:
                failures[seed] = f"{type(exc).__name__}: {exc}"
                writer.write_failure(seed, failures[seed])
        total_rows = writer.rows_written
    summary = {}
    if episodes_run:
        summary = {
            "episodes": episodes_run,
            "mean_steps": float(np.mean(steps_all)),
            "std_steps": float(np.std(steps_all, ddof=1))
            if episodes_run > 1 else 0.0,
            "mean_waste": float(np.mean(waste_all)),
            "mean_reward": float(np.mean(reward_all)),
            "completion_rate": completed / episodes_run,
        }
        with open(os.path.join(run.out_dir, "summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return {"metrics": csv_path, "failures": failures, "rows": total_rows,
            "summary": summary}


def run_compare(run_dirs, out_dir) -> dict:
    """Aggregate several runs' metrics into plots and a summary JSON."""
    if len(run_dirs) < 2:
        raise InvalidParameterError("compare needs at least two run dirs")
    os.makedirs(out_dir, exist_ok=True)
    labeled = {}
    for d in run_dirs:
        rows = read_metrics(os.path.join(d, "metrics.csv"))
        if not rows:
            raise InvalidParameterError(f"{d}: metrics file has no rows")
        label = rows[0].algorithm
        if label in labeled:  # same algorithm twice: fall back to dir name
            label = os.path.basename(os.path.normpath(d)) or d
        labeled[label] = rows
    summary = {}
    for metric in ("transformed_reward", "steps_taken", "waste_count_total"):
        curves = {lbl: aggregate_curve(rows, metric)
                  for lbl, rows in labeled.items()}
        plot_curves(curves, os.path.join(out_dir, f"{metric}.svg"), metric)
        for lbl, rows in labeled.items():
            first_m, first_se = window_stats(rows, metric, end=False)
            last_m, last_se = window_stats(rows, metric, end=True)
            summary.setdefault(lbl, {})[metric] = {
                "first_window": {"mean": first_m, "stderr": first_se},
                "last_window": {"mean": last_m, "stderr": last_se},
            }
    path = os.path.join(out_dir, "summary.json")
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return {"summary": path, "labels": sorted(labeled)}


def run_oracle(run: RunConfig) -> dict:
    """Exact-search makespans next to the fixed baselines, per seed."""
    env_cfg = build_episode_config(run)
    _echo_config(run, env_cfg)
    env = DownlinkEnv(env_cfg)
    lines = []
    records = []
    for seed in run.seeds:
        env.reset(seed=seed)
        result = exhaustive_horizon_search(env, horizon=run.horizon)
        row = {"seed": seed, "best_makespan": result.best_makespan,
               "nodes_expanded": result.nodes_expanded}
        for name in FIXED_POLICIES:
            env.reset(seed=seed)
            fn = _fixed_policy_fn(name, env_cfg,
                                  np.random.default_rng(derive_seed(seed,
                                                                    11)))
            row[f"{name}_steps"] = play_episode(env, fn)["steps"]
        records.append(row)
        lines.append(
            f"seed {seed}: oracle={row['best_makespan']} "
            f"myopic={row['myopic_steps']} greedy={row['greedy_steps']} "
            f"random={row['random_steps']} nodes={row['nodes_expanded']}")
    path = os.path.join(run.out_dir, "oracle.csv")
    cols = ["seed", "best_makespan", "nodes_expanded", "myopic_steps",
            "greedy_steps", "random_steps"]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for row in records:
            fh.write(",".join(str(row[c]) for c in cols) + "\n")
    solved = [r for r in records if r["best_makespan"] is not None]
    if solved:
        mean = sum(r["best_makespan"] for r in solved) / len(solved)
        lines.append(f"solved {len(solved)}/{len(records)}; "
                     f"mean oracle makespan {mean:.2f}")
    return {"oracle": path, "records": records, "lines": lines}


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(p):
    p.add_argument("--config", default=None,
                   help="JSON file of RunConfig fields; flags override it")
    p.add_argument("--scenario", default=None,
                   help="4x3, 6x3, 7x4, any NxM, or 'probe'")
    p.add_argument("--episodes", type=int, default=None)
    p.add_argument("--seed", dest="seeds", type=int, action="append",
                   default=None, help="repeatable; default 0")
    p.add_argument("--out", dest="out_dir", default=None)
    p.add_argument("--paper-literal", dest="paper_literal",
                   action="store_const", const=True, default=None,
                   help="use the published sub-millimeter wavelength")
    p.add_argument("--record-every", dest="record_every", type=int,
                   default=None)
    p.add_argument("--timing", dest="deterministic_timing",
                   action="store_const", const=False, default=None,
                   help="record real wall-clock times (breaks byte-identical "
                        "reruns)")


def _gather(args, **extra):
    keys = ("scenario", "episodes", "seeds", "out_dir", "paper_literal",
            "record_every", "deterministic_timing")
    got = {k: getattr(args, k) for k in keys}
    got.update(extra)
    if args.config:
        return load_run_config(args.config, **got)
    return RunConfig(**{k: v for k, v in got.items() if v is not None})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scenecast",
        description="Downlink scheduling testbed: train and compare "
                    "allocation policies.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a learning agent")
    p_train.add_argument("--algo", dest="algorithm", default=None,
                         choices=LEARNED_ALGOS)
    p_train.add_argument("--no-checkpoints", dest="save_checkpoints",
                         action="store_const", const=False, default=None)
    _add_common(p_train)

    p_eval = sub.add_parser("eval", help="roll a fixed policy or checkpoint")
    p_eval.add_argument("--algo", dest="algorithm", default=None,
                        choices=FIXED_POLICIES + LEARNED_ALGOS)
    p_eval.add_argument("--checkpoint", default=None,
                        help="trained .npz (required for learned --algo)")
    _add_common(p_eval)

    p_cmp = sub.add_parser("compare", help="plot several runs together")
    p_cmp.add_argument("--run", dest="runs", action="append", required=True,
                       help="run directory with a metrics.csv; repeatable")
    p_cmp.add_argument("--out", dest="out_dir", required=True)

    p_orc = sub.add_parser("oracle",
                           help="exact horizon search vs the baselines")
    p_orc.add_argument("--horizon", type=int, default=None)
    _add_common(p_orc)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            run = _gather(args, algorithm=args.algorithm,
                          save_checkpoints=args.save_checkpoints)
            result = run_train(run)
            for seed, why in sorted(result["failures"].items()):
                print(f"seed {seed} failed: {why}", file=sys.stderr)
            print(f"wrote {result['rows']} rows to {result['metrics']}")
            return 1 if result["failures"] else 0
        if args.command == "eval":
            run = _gather(args, algorithm=args.algorithm,
                          checkpoint=args.checkpoint)
            result = run_eval(run)
            for seed, why in sorted(result["failures"].items()):
                print(f"seed {seed} failed: {why}", file=sys.stderr)
            print(f"wrote {result['rows']} rows to {result['metrics']}")
            s = result["summary"]
            if s:
                print(f"mean steps {s['mean_steps']:.2f} "
                      f"(std {s['std_steps']:.2f}), mean waste "
                      f"{s['mean_waste']:.2f}, mean reward "
                      f"{s['mean_reward']:.2f}, completion rate "
                      f"{s['completion_rate']:.2f}")
            return 1 if result["failures"] else 0
        if args.command == "compare":
            result = run_compare(args.runs, args.out_dir)
            print(f"compared {', '.join(result['labels'])} -> "
                  f"{result['summary']}")
            return 0
        if args.command == "oracle":
            run = _gather(args, horizon=args.horizon)
            result = run_oracle(run)
            for line in result["lines"]:
                print(line)
            return 0
    except (InvalidParameterError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
