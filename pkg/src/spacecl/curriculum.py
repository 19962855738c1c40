"""Curriculum schedulers: SPaCE, context-distance cSPaCE, and round robin.

SPaCE keeps a growing training subset. After each training iteration it
compares the mean absolute start-state value over the subset with the
previous iteration's; if the relative change is within ``eta`` the subset
grows by ``kappa``. The subset is then refilled with the instances whose
value estimate moved the most since the last iteration.
"""

from __future__ import annotations

import csv
import enum
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import Context, InstanceSet
from .errors import InvalidArgumentError

log = logging.getLogger(__name__)


class KappaMode(str, enum.Enum):
    additive = "additive"
    multiplicative = "multiplicative"


class Selection(str, enum.Enum):
    space = "space"
    cspace = "cspace"


@dataclass(frozen=True)
class SchedulerConfig:
    eta: float = 0.05
    kappa: float = 1
    kappa_mode: KappaMode = KappaMode.additive
    dynamic_eta: bool = False
    epsilon_dyn: float = 1e-6
    patience: int = 50
    max_eta: float = 1e6
    selection: Selection = Selection.space

    def __post_init__(self):
        object.__setattr__(self, "kappa_mode", KappaMode(self.kappa_mode))
        object.__setattr__(self, "selection", Selection(self.selection))
        problems = self.problems()
        if problems:
            raise InvalidArgumentError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if not self.eta > 0:
            out.append(f"eta must be positive, got {self.eta}")
        min_kappa = 1 if self.kappa_mode is KappaMode.additive else 2
        if self.kappa < min_kappa:
            out.append(f"kappa must be >= {min_kappa} in {self.kappa_mode.value} mode, got {self.kappa}")
        if self.kappa_mode is KappaMode.additive and int(self.kappa) != self.kappa:
            out.append("additive kappa must be an integer")
        if not self.epsilon_dyn > 0:
            out.append("epsilon_dyn must be positive")
        if self.patience < 0:
            out.append("patience must be non-negative")
        return out


@dataclass
class CurriculumState:
    all_ids: tuple[int, ...]
    current_ids: list[int]
    set_size: int = 1
    prev_values: dict[int, float] = field(default_factory=dict)
    prev_mean_abs: float = 0.0
    iteration: int = 0
    addition_log: list[tuple[int, list[int]]] = field(default_factory=list)
    stalled: int = 0
    # diagnostics from the most recent step
    last_mean_abs: float = 0.0
    last_eta: float = 0.0
    last_grew: bool = False

    @property
    def addition_order(self) -> list[int]:
        return [i for _, ids in self.addition_log for i in ids]

    @property
    def covers_all(self) -> bool:
        return len(self.current_ids) == len(self.all_ids)


def initial_state(ids: Sequence[int], rng: np.random.Generator) -> CurriculumState:
    """Start from a single randomly drawn instance; every previous value is 0."""
    ids = tuple(sorted(ids))
    if not ids:
        raise InvalidArgumentError("cannot build a curriculum over zero instances")
    first = ids[int(rng.integers(len(ids)))]
    return CurriculumState(
        all_ids=ids,
        current_ids=[first],
        set_size=1,
        prev_values={i: 0.0 for i in ids},
        addition_log=[(0, [first])],
    )


def pic(v_now: float, v_prev: float) -> float:
    """Performance improvement capacity: the signed change of an instance's value."""
    return v_now - v_prev


def mean_abs_value(values: Mapping[int, float], over_ids) -> float:
    over_ids = list(over_ids)
    if not over_ids:
        raise InvalidArgumentError("mean over an empty id set")
    return float(np.mean([abs(values[i]) for i in over_ids]))


def converged(v_mean_now: float, v_mean_prev: float, eta: float) -> bool:
    """Is ``v_mean_now`` inside the closed band ``(1 +- eta) * v_mean_prev``?

    Written as ``|now - prev| <= eta * |prev|``, which is the same band for
    either sign of ``prev`` and keeps the endpoints exact in floating point.
    """
    return abs(v_mean_now - v_mean_prev) <= eta * abs(v_mean_prev)


def dynamic_eta(delta_v: float, v_prev: float, epsilon_dyn: float, max_eta: float = 1e6) -> float:
    """Smallest threshold that lets the observed change pass, plus ``epsilon_dyn`` slack.

    With ``v_prev == 0`` no finite threshold helps; ``max_eta`` is returned and
    the caller is expected to force growth.
    """
    if v_prev == 0:
        log.warning("dynamic eta: previous mean value is 0, returning max_eta=%g", max_eta)
        return max_eta
    return (abs(delta_v) + epsilon_dyn) / abs(v_prev)


def space_select(pics: Mapping[int, float], size: int) -> list[int]:
    """Ids with the largest PIC, descending; ties go to the lower id."""
    if not pics:
        raise InvalidArgumentError("no PIC values to select from")
    if size < 1:
        raise InvalidArgumentError(f"selection size must be at least 1, got {size}")
    ranked = sorted(pics, key=lambda i: (-pics[i], i))
    return ranked[:size]


def _normalized_matrix(contexts: Mapping[int, Context], ids: Sequence[int]) -> np.ndarray:
    feats = np.array([contexts[i].features for i in ids], dtype=float)
    lo = feats.min(axis=0)
    span = feats.max(axis=0) - lo
    span[span == 0] = 1.0
    return (feats - lo) / span


def normalized_contexts(contexts: Mapping[int, Context]) -> tuple[list[int], np.ndarray]:
    """Ids in ascending order and their contexts min-max scaled to [0, 1] per feature."""
    ids = sorted(contexts)
    return ids, _normalized_matrix(contexts, ids)


def cspace_select(contexts: Mapping[int, Context], current_ids: Sequence[int], size: int) -> list[int]:
    """Keep ``current_ids`` and greedily add the instance closest to the growing set.

    Distances are Euclidean in min-max normalized context space; ties go to
    the lower id.
    """
    current_ids = list(current_ids)
    if size < len(current_ids):
        raise InvalidArgumentError(f"size {size} smaller than the current set ({len(current_ids)})")
    ids, points = normalized_contexts(contexts)
    size = min(size, len(ids))
    index = {i: k for k, i in enumerate(ids)}
    chosen = list(current_ids)
    nearest = np.full(len(ids), np.inf)
    taken = np.zeros(len(ids), dtype=bool)
    for i in chosen:
        k = index[i]
        taken[k] = True
        nearest = np.minimum(nearest, np.linalg.norm(points - points[k], axis=1))
    while len(chosen) < size:
        candidates = np.where(taken, np.inf, nearest)
        # argmin returns the first minimum, and ids are ascending, so ties go to the lower id
        k = int(np.argmin(candidates))
        taken[k] = True
        chosen.append(ids[k])
        nearest = np.minimum(nearest, np.linalg.norm(points - points[k], axis=1))
    return chosen


def _grow(size: int, config: SchedulerConfig, n: int) -> int:
    if config.kappa_mode is KappaMode.additive:
        grown = size + int(config.kappa)
    else:
        grown = int(np.ceil(size * config.kappa))
    return min(grown, n)


def scheduler_step(
    state: CurriculumState,
    values_all: Mapping[int, float],
    config: SchedulerConfig,
    contexts: Optional[Mapping[int, Context]] = None,
) -> CurriculumState:
    """One pass of the growth check and re-selection; returns a new state."""
    missing = set(state.all_ids) - set(values_all)
    if missing:
        raise InvalidArgumentError(f"values missing for ids {sorted(missing)[:5]}")
    n = len(state.all_ids)
    v_now = mean_abs_value(values_all, state.current_ids)
    v_prev = state.prev_mean_abs
    full = len(state.current_ids) >= n

    eta = config.eta
    forced = False
    if config.dynamic_eta and not full and state.stalled >= config.patience:
        eta = max(eta, dynamic_eta(v_now - v_prev, v_prev, config.epsilon_dyn, config.max_eta))
        forced = v_prev == 0
    set_size = state.set_size
    grew = False
    if not full and (forced or converged(v_now, v_prev, eta)):
        set_size = _grow(set_size, config, n)
        grew = True

    if config.selection is Selection.space:
        pics = {i: pic(values_all[i], state.prev_values.get(i, 0.0)) for i in state.all_ids}
        current = space_select(pics, set_size)
    else:
        if contexts is None:
            raise InvalidArgumentError("context-distance selection needs the instance contexts")
        current = cspace_select(contexts, state.current_ids, set_size)

    iteration = state.iteration + 1
    seen = set(state.addition_order)
    added = [i for i in current if i not in seen]
    addition_log = list(state.addition_log)
    if added:
        addition_log.append((iteration, added))
    still_partial = len(current) < n
    return replace(
        state,
        current_ids=current,
        set_size=set_size,
        prev_values={i: float(values_all[i]) for i in state.all_ids},
        prev_mean_abs=v_now,
        iteration=iteration,
        addition_log=addition_log,
        stalled=0 if (grew or not still_partial) else state.stalled + 1,
        last_mean_abs=v_now,
        last_eta=eta,
        last_grew=grew,
    )


def round_robin_next(cursor: int, instances: InstanceSet):
    """Next instance in id order and the advanced cursor."""
    if len(instances) == 0:
        raise InvalidArgumentError("round robin over an empty set")
    ordered = instances.sorted_by_id()
    k = cursor % len(ordered)
    return ordered[k], (k + 1) % len(ordered)


def write_curriculum_log(rows: Sequence[tuple[int, int, Sequence[int]]], path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "set_size", "ids"])
        for iteration, size, ids in rows:
            writer.writerow([iteration, size, ";".join(str(i) for i in ids)])


def read_curriculum_log(path) -> list[tuple[int, int, list[int]]]:
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            (int(r["iteration"]), int(r["set_size"]), [int(i) for i in r["ids"].split(";") if i])
            for r in reader
        ]


def write_addition_order(addition_log: Sequence[tuple[int, Sequence[int]]], path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rank", "id", "iteration_added"])
        rank = 1
        for iteration, ids in addition_log:
            for i in ids:
                writer.writerow([rank, i, iteration])
                rank += 1


def read_addition_order(path) -> list[tuple[int, int, int]]:
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        return [(int(r["rank"]), int(r["id"]), int(r["iteration_added"])) for r in csv.DictReader(fh)]
