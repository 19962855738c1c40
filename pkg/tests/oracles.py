"""Independent reference implementations and stub value oracles shared by the tests."""

import itertools
import math

import numpy as np

from spacecl.curriculum import SchedulerConfig, initial_state, scheduler_step


def space_select_oracle(pics, size):
    """Rank each id by how many others beat it, with no sorting."""
    rank = {}
    for i, v in pics.items():
        rank[i] = sum(1 for j, w in pics.items() if w > v or (w == v and j < i))
    by_rank = {r: i for i, r in rank.items()}
    return [by_rank[r] for r in range(min(size, len(pics)))]


def normalize_oracle(contexts):
    ids = sorted(contexts)
    k = len(contexts[ids[0]].features)
    lows = [min(contexts[i].features[d] for i in ids) for d in range(k)]
    highs = [max(contexts[i].features[d] for i in ids) for d in range(k)]
    out = {}
    for i in ids:
        row = []
        for d in range(k):
            span = highs[d] - lows[d]
            row.append((contexts[i].features[d] - lows[d]) / (span if span != 0 else 1.0))
        out[i] = row
    return out


def euclid(a, b):
    return math.sqrt(sum((x - y) * (x - y) for x, y in zip(a, b)))


def cspace_select_oracle(contexts, current_ids, size):
    """Exhaustive greedy: every round rescans every (candidate, member) pair."""
    pts = normalize_oracle(contexts)
    chosen = list(current_ids)
    size = min(size, len(contexts))
    while len(chosen) < size:
        best = None
        for i in sorted(contexts):
            if i in chosen:
                continue
            d = min(euclid(pts[i], pts[j]) for j in chosen)
            if best is None or d < best[0]:
                best = (d, i)
        chosen.append(best[1])
    return chosen


def brute_force_tau(a, b):
    pos_a = {v: k for k, v in enumerate(a)}
    pos_b = {v: k for k, v in enumerate(b)}
    conc = disc = 0
    for x, y in itertools.combinations(a, 2):
        s = (pos_a[x] - pos_a[y]) * (pos_b[x] - pos_b[y])
        if s > 0:
            conc += 1
        elif s < 0:
            disc += 1
    n = len(a)
    return (conc - disc) / (n * (n - 1) / 2)


def run_geometric_oracle(n, config: SchedulerConfig, steps, seed=0):
    """Each instance's value approaches its own target geometrically, one halving per training visit."""
    rng = np.random.default_rng(seed)
    targets = rng.uniform(1.0, 10.0, size=n)
    visits = np.zeros(n, dtype=int)
    state = initial_state(range(n), rng)
    history = [state]
    for _ in range(steps):
        visits[state.current_ids] += 1
        values = {i: float(targets[i] * (1 - 0.5 ** visits[i])) for i in range(n)}
        state = scheduler_step(state, values, config)
        history.append(state)
        if len(state.addition_order) == n:
            break
    return state, history


def run_oscillating_oracle(n, config: SchedulerConfig, steps, seed=0):
    """Every value, and so mean |V|, swings between 0.5x and 1.5x of one baseline forever."""
    rng = np.random.default_rng(seed)
    base = np.full(n, 4.0)
    state = initial_state(range(n), rng)
    max_size = 1
    for t in range(1, steps + 1):
        factor = 1.5 if t % 2 else 0.5
        state = scheduler_step(state, {i: float(base[i] * factor) for i in range(n)}, config)
        max_size = max(max_size, len(state.current_ids))
        if len(state.addition_order) == n:
            return state, t, max_size
    return state, steps, max_size
