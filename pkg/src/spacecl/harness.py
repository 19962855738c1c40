"""Experiment orchestration: sample instances, train per seed, evaluate, write CSVs."""

from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .agent import ValueAgent
from .analysis import analyze_run
from .config import ExperimentConfig, dump_config
from .core import InstanceSet, format_float, read_instance_set
from .curriculum import (
    initial_state,
    round_robin_next,
    scheduler_step,
    write_addition_order,
    write_curriculum_log,
)
from .envs import make_env, split_instances
from .errors import InvalidArgumentError

log = logging.getLogger(__name__)

CURVE_HEADER = ["seed", "iteration", "episodes", "env_steps", "set_size", "train_mean_return", "test_mean_return"]
EPISODE_HEADER = ["seed", "iteration", "episode", "instance_id", "return", "length"]
SCHEDULER_HEADER = ["iteration", "mean_abs_value", "eta", "grew", "set_size"]


@dataclass
class SeedResult:
    seed: int
    curve: list[list] = field(default_factory=list)
    episodes: list[list] = field(default_factory=list)


@dataclass
class RunArtifacts:
    output_dir: Path
    learning_curve: Path
    episodes: Path
    curriculum_logs: dict[int, Path]
    addition_orders: dict[int, Path]
    instance_evals: dict[int, Path]
    config_echo: Path
    train_instances: Path
    test_instances: Path
    analysis: Optional[Path] = None
    curves: dict[int, list[list]] = field(default_factory=dict)

    def final_mean(self, column: str = "test_mean_return") -> dict[int, float]:
        """Last recorded value of ``column`` for each seed."""
        k = CURVE_HEADER.index(column)
        return {seed: float(rows[-1][k]) for seed, rows in self.curves.items() if rows}


def smooth(series: Sequence[float], window: int = 10) -> list[float]:
    """Trailing moving average; early points average over whatever prefix exists."""
    if window < 1:
        raise InvalidArgumentError("window must be at least 1")
    values = [float(v) for v in series]
    # direct window sums: a running cumsum would leak rounding error across distant points
    return [float(np.mean(values[max(0, k - window + 1) : k + 1])) for k in range(len(values))]


def _seed_streams(seed: int) -> dict[str, int]:
    """Independent integer seeds per purpose, derived from one run seed."""
    children = np.random.SeedSequence(seed).spawn(3)
    agent, env, curriculum = (int(c.generate_state(1)[0]) for c in children)
    return {"agent": agent, "env": env, "curriculum": curriculum}


def _mean_or_nan(values) -> float:
    return float(np.mean(values)) if len(values) else float("nan")


def _write_rows(path: Path, header, rows) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) if isinstance(v, float) else v for v in row])


def run_seed(config: ExperimentConfig, train: InstanceSet, test: InstanceSet, seed: int, out_dir: Path) -> SeedResult:
    """Train one agent under the configured scheduler and write its per-seed logs."""
    streams = _seed_streams(seed)
    env = make_env(config.environment, streams["env"], config.env_overrides)
    agent = ValueAgent.for_env(env, config.agent_config(), seed=streams["agent"])
    sched_cfg = config.scheduler_config()
    by_id = train.by_id()
    contexts = train.contexts()
    ordered_train = train.sorted_by_id()
    eval_instances = ordered_train + test.sorted_by_id()
    round_robin = config.scheduler == "round_robin"
    state = None if round_robin else initial_state(train.ids, np.random.default_rng(streams["curriculum"]))

    result = SeedResult(seed)
    curriculum_rows = []
    scheduler_rows = []
    eval_rows = []
    episodes = 0
    env_steps = 0
    cursor = 0
    last_evaluated = 0
    iteration = 0

    def evaluate(it: int, set_size: int) -> None:
        returns = [agent.greedy_rollout(env, inst).undiscounted_return for inst in eval_instances]
        train_ret = returns[: len(ordered_train)]
        test_ret = returns[len(ordered_train):]
        result.curve.append(
            [seed, it, episodes, env_steps, set_size, _mean_or_nan(train_ret), _mean_or_nan(test_ret)]
        )
        eval_rows.append([it] + [float(r) for r in returns])

    for iteration in range(1, config.iterations + 1):
        if round_robin:
            batch = []
            for _ in range(len(ordered_train)):
                inst, cursor = round_robin_next(cursor, train)
                batch.append(inst)
            set_size = len(batch)
        else:
            batch = [by_id[i] for i in state.current_ids]
            set_size = state.set_size
        if config.episode_budget and episodes + len(batch) > config.episode_budget:
            iteration -= 1
            break
        stats = agent.train_on_instances(env, batch, episodes_per_instance=1)
        for inst_id, ret, length in stats.episode_log:
            episodes += 1
            result.episodes.append([seed, iteration, episodes, inst_id, float(ret), length])
        env_steps += stats.env_steps
        curriculum_rows.append((iteration, set_size, [inst.id for inst in batch]))
        if not round_robin:
            values = agent.evaluate_values(env, ordered_train)
            state = scheduler_step(state, values, sched_cfg, contexts)
            scheduler_rows.append(
                [iteration, state.last_mean_abs, state.last_eta, int(state.last_grew), state.set_size]
            )
        if iteration % config.eval_interval == 0:
            evaluate(iteration, set_size)
            last_evaluated = iteration
    if iteration and last_evaluated != iteration:
        evaluate(iteration, curriculum_rows[-1][1])

    write_curriculum_log(curriculum_rows, out_dir / f"curriculum_{seed}.csv")
    additions = [(0, sorted(train.ids))] if round_robin else state.addition_log
    write_addition_order(additions, out_dir / f"additions_{seed}.csv")
    _write_rows(out_dir / f"scheduler_{seed}.csv", SCHEDULER_HEADER, scheduler_rows)
    _write_rows(
        out_dir / f"instance_eval_{seed}.csv",
        ["iteration"] + [inst.id for inst in eval_instances],
        eval_rows,
    )
    return result


def _run_seed_job(args):
    config, train_path, test_path, seed, out_dir = args
    return run_seed(config, read_instance_set(train_path), read_instance_set(test_path), seed, Path(out_dir))


def _prepare_output(out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    probe = out_dir / ".write_probe"
    probe.write_text("", encoding="utf-8")
    probe.unlink()


def run_experiment(config: ExperimentConfig, jobs: int = 1, analyze: bool = True) -> RunArtifacts:
    """Run every seed of ``config`` and write the full artifact set to ``config.output_dir``.

    Seeds are independent; with ``jobs > 1`` they run in worker processes.
    Outputs depend only on the config and seeds, never on ``jobs``.
    """
    config.validate()
    out_dir = Path(config.output_dir)
    _prepare_output(out_dir)

    train, test = split_instances(config.environment, config.n_train, config.n_test, config.instance_seed)
    train_path = out_dir / "train_instances.csv"
    test_path = out_dir / "test_instances.csv"
    train.write_csv(train_path)
    test.write_csv(test_path)
    echo = out_dir / "config.txt"
    echo.write_text(dump_config(config), encoding="utf-8")

    job_args = [(config, train_path, test_path, seed, out_dir) for seed in config.seeds]
    if jobs > 1 and len(job_args) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(job_args))) as pool:
            results = list(pool.map(_run_seed_job, job_args))
    else:
        results = [run_seed(config, train, test, seed, out_dir) for seed in config.seeds]

    curve_path = out_dir / "learning_curve.csv"
    episodes_path = out_dir / "episodes.csv"
    _write_rows(curve_path, CURVE_HEADER, [row for r in results for row in r.curve])
    _write_rows(episodes_path, EPISODE_HEADER, [row for r in results for row in r.episodes])

    artifacts = RunArtifacts(
        output_dir=out_dir,
        learning_curve=curve_path,
        episodes=episodes_path,
        curriculum_logs={s: out_dir / f"curriculum_{s}.csv" for s in config.seeds},
        addition_orders={s: out_dir / f"additions_{s}.csv" for s in config.seeds},
        instance_evals={s: out_dir / f"instance_eval_{s}.csv" for s in config.seeds},
        config_echo=echo,
        train_instances=train_path,
        test_instances=test_path,
        curves={r.seed: r.curve for r in results},
    )
    if analyze:
        artifacts.analysis = analyze_run(out_dir)
    return artifacts


def read_learning_curve(path) -> list[dict]:
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        rows = []
        for r in csv.DictReader(fh):
            rows.append(
                {
                    "seed": int(r["seed"]),
                    "iteration": int(r["iteration"]),
                    "episodes": int(r["episodes"]),
                    "env_steps": int(r["env_steps"]),
                    "set_size": int(r["set_size"]),
                    "train_mean_return": float(r["train_mean_return"]),
                    "test_mean_return": float(r["test_mean_return"]),
                }
            )
        return rows


def read_episodes(path) -> list[dict]:
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        return [
            {
                "seed": int(r["seed"]),
                "iteration": int(r["iteration"]),
                "episode": int(r["episode"]),
                "instance_id": int(r["instance_id"]),
                "return": float(r["return"]),
                "length": int(r["length"]),
            }
            for r in csv.DictReader(fh)
        ]


def read_instance_eval(path) -> tuple[list[int], dict[int, list[float]]]:
    """Iterations and a per-instance series of greedy returns."""
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        ids = [int(v) for v in header[1:]]
        iterations = []
        series: dict[int, list[float]] = {i: [] for i in ids}
        for row in reader:
            iterations.append(int(row[0]))
            for i, v in zip(ids, row[1:]):
                series[i].append(float(v))
    return iterations, series


@dataclass
class SweepCell:
    eta: float
    kappa: float
    mean: float
    std: float
    n_seeds: int
    status: str = "ok"


def ablation_sweep(
    base: ExperimentConfig,
    etas: Sequence[float],
    kappas: Sequence[float],
    jobs: int = 1,
    metric: str = "test_mean_return",
) -> list[SweepCell]:
    """Run the eta x kappa grid and write ``ablation.csv`` plus a Table-shaped ``ablation_table.csv``.

    A failing cell is recorded with NaN statistics and the sweep moves on.
    """
    if not etas or not kappas:
        raise InvalidArgumentError("eta and kappa grids must be non-empty")
    root = Path(base.output_dir)
    _prepare_output(root)
    # with no test set the train return is the only meaningful score
    column = "train_mean_return" if base.n_test == 0 and metric == "test_mean_return" else metric
    cells = []
    for kappa, eta in product(kappas, etas):
        cell_dir = root / f"eta{eta:g}_kappa{kappa:g}"
        cfg = base.replace(eta=float(eta), kappa=kappa, output_dir=str(cell_dir))
        try:
            artifacts = run_experiment(cfg, jobs=jobs, analyze=False)
            finals = list(artifacts.final_mean(column).values())
            cells.append(SweepCell(eta, kappa, float(np.mean(finals)), float(np.std(finals)), len(finals)))
        except Exception as exc:  # a failed cell must not abort the sweep
            log.error("sweep cell eta=%s kappa=%s failed: %s", eta, kappa, exc)
            cells.append(SweepCell(eta, kappa, float("nan"), float("nan"), 0, f"failed: {exc}"))

    _write_rows(
        root / "ablation.csv",
        ["eta", "kappa", "mean", "std", "n_seeds", "status"],
        [[float(c.eta), c.kappa, c.mean, c.std, c.n_seeds, c.status] for c in cells],
    )
    lookup = {(c.kappa, c.eta): c for c in cells}
    table = []
    for kappa in kappas:
        row = [kappa]
        for eta in etas:
            c = lookup[(kappa, eta)]
            row.append("missing" if c.status != "ok" else f"{c.mean:.3f} ± {c.std:.3f}")
        table.append(row)
    _write_rows(root / "ablation_table.csv", ["kappa"] + [f"eta={e:g}" for e in etas], table)
    return cells


def default_jobs() -> int:
    return max(1, (os.cpu_count() or 1))
