"""Post-hoc curriculum analytics over run logs."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import Context, format_float
from .curriculum import normalized_contexts
from .errors import InvalidArgumentError


@dataclass
class CurriculumTrace:
    iterations: list[list[int]]
    addition_order: list[int]

    def __post_init__(self):
        if len(set(self.addition_order)) != len(self.addition_order):
            raise InvalidArgumentError("addition order repeats an id")


def kendall_tau(order_a: Sequence[int], order_b: Sequence[int]) -> float:
    """Tau-a between two permutations of the same ids."""
    if len(order_a) != len(set(order_a)) or len(order_b) != len(set(order_b)):
        raise InvalidArgumentError("orders must not repeat ids")
    if set(order_a) != set(order_b):
        raise InvalidArgumentError("orders rank different id sets")
    n = len(order_a)
    if n < 2:
        raise InvalidArgumentError("need at least two ids to compare orders")
    pos_b = {i: k for k, i in enumerate(order_b)}
    ranks = np.array([pos_b[i] for i in order_a])
    # pairs (j < k) in order_a are concordant when order_b keeps them in the same sequence
    signs = np.sign(ranks[None, :] - ranks[:, None])
    upper = np.triu(signs, k=1)
    return float(upper.sum()) / (n * (n - 1) / 2)


def usage_frequency(trace: CurriculumTrace, total_instances: int) -> tuple[dict[int, int], dict[int, float]]:
    """Iteration counts per id, and counts weighted by how early the id joined.

    Weights fall linearly from 1 for the first-added id to ``1/n`` for the
    n-th; ids never added score 0.
    """
    if not trace.iterations:
        raise InvalidArgumentError("empty curriculum trace")
    n = total_instances
    counts: dict[int, int] = {}
    for ids in trace.iterations:
        for i in set(ids):
            counts[i] = counts.get(i, 0) + 1
    weight = {i: (n - rank + 1) / n for rank, i in enumerate(trace.addition_order, start=1)}
    for i in trace.addition_order:
        counts.setdefault(i, 0)
    scores = {i: counts[i] * weight.get(i, 0.0) for i in counts}
    return counts, scores


def curriculum_drift(trace: CurriculumTrace, contexts: Mapping[int, Context]) -> tuple[float, float]:
    """Mean and max percentage shift of the training set between consecutive iterations."""
    if len(trace.iterations) < 2:
        raise InvalidArgumentError("drift needs at least two iterations")
    ids, points = normalized_contexts(contexts)
    index = {i: k for k, i in enumerate(ids)}
    diffs = points[:, None, :] - points[None, :, :]
    dist = np.sqrt((diffs**2).sum(axis=-1))
    diameter = float(dist.max()) if len(ids) > 1 else 0.0
    drifts = []
    for prev, new in zip(trace.iterations[:-1], trace.iterations[1:]):
        if diameter == 0.0:
            drifts.append(0.0)
            continue
        rows = [index[i] for i in new]
        cols = [index[i] for i in prev]
        nearest = dist[np.ix_(rows, cols)].min(axis=1)
        drifts.append(float(nearest.mean()) / diameter * 100.0)
    return float(np.mean(drifts)), float(np.max(drifts))


def forgetting_count(series: Mapping[int, Sequence[float]], delta: Optional[float] = None) -> tuple[int, list[int]]:
    """Ids whose evaluation peaked before the end and finished more than ``delta`` below the peak.

    ``delta=None`` uses 5% of each instance's peak magnitude.
    """
    lengths = {len(v) for v in series.values()}
    if len(lengths) > 1:
        raise InvalidArgumentError("evaluation series must share one length")
    if lengths and lengths.pop() < 2:
        raise InvalidArgumentError("evaluation series need at least two points")
    if delta is not None and not delta > 0:
        raise InvalidArgumentError("delta must be positive")
    flagged = []
    for i in sorted(series):
        values = np.asarray(series[i], dtype=float)
        peak_at = int(np.argmax(values))
        peak = values[peak_at]
        tol = delta if delta is not None else max(0.05 * abs(peak), 1e-12)
        if peak_at < len(values) - 1 and values[-1] < peak - tol:
            flagged.append(i)
    return len(flagged), flagged


def pairwise_tau(orders: Mapping[int, Sequence[int]]) -> dict[tuple[int, int], float]:
    """Tau between every pair of seeds, over the ids both curricula added.

    Pairs sharing fewer than two ids map to NaN.
    """
    out = {}
    for a, b in combinations(sorted(orders), 2):
        common = set(orders[a]) & set(orders[b])
        if len(common) < 2:
            out[(a, b)] = float("nan")
            continue
        out[(a, b)] = kendall_tau([i for i in orders[a] if i in common], [i for i in orders[b] if i in common])
    return out


def analyze_run(run_dir) -> Path:
    """Read a run directory written by the harness and emit ``analysis.csv`` next to it."""
    from .core import read_instance_set
    from .curriculum import read_addition_order, read_curriculum_log
    from .harness import read_instance_eval

    run_dir = Path(run_dir)
    train = read_instance_set(run_dir / "train_instances.csv")
    contexts = train.contexts()
    train_ids = set(train.ids)
    seeds = sorted(int(p.stem.split("_")[-1]) for p in run_dir.glob("curriculum_*.csv"))
    if not seeds:
        raise InvalidArgumentError(f"{run_dir} holds no curriculum logs")
    rows: list[tuple] = []
    orders = {}
    for seed in seeds:
        log_rows = read_curriculum_log(run_dir / f"curriculum_{seed}.csv")
        additions = read_addition_order(run_dir / f"additions_{seed}.csv")
        order = [i for _, i, _ in sorted(additions)]
        orders[seed] = order
        trace = CurriculumTrace([ids for _, _, ids in log_rows], order)
        counts, scores = usage_frequency(trace, len(train))
        for i in sorted(counts):
            rows.append((seed, "usage_count", i, counts[i]))
            rows.append((seed, "weighted_frequency", i, format_float(scores[i])))
        if len(trace.iterations) >= 2:
            mean_drift, max_drift = curriculum_drift(trace, contexts)
            rows.append((seed, "drift_mean_pct", "", format_float(mean_drift)))
            rows.append((seed, "drift_max_pct", "", format_float(max_drift)))
        eval_path = run_dir / f"instance_eval_{seed}.csv"
        if eval_path.exists():
            _, series = read_instance_eval(eval_path)
            train_series = {i: v for i, v in series.items() if i in train_ids}
            if train_series and len(next(iter(train_series.values()))) >= 2:
                count, ids = forgetting_count(train_series)
                rows.append((seed, "forgetting_count", "", count))
                rows.append((seed, "forgetting_ids", "", ";".join(map(str, ids))))
    for (a, b), tau in pairwise_tau(orders).items():
        rows.append(("all", "kendall_tau", f"{a}:{b}", format_float(tau)))
    out = run_dir / "analysis.csv"
    with out.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["seed", "metric", "key", "value"])
        writer.writerows(rows)
    return out
