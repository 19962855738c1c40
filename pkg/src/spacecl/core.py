"""Contextual-MDP vocabulary: contexts, instances, environments and rollouts."""

from __future__ import annotations

import abc
import csv
import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import InvalidActionError, InvalidArgumentError

Policy = Callable[[np.ndarray], int]


@dataclass(frozen=True)
class Context:
    features: tuple[float, ...]
    feature_names: tuple[str, ...]
    bounds: Optional[tuple[tuple[float, float], ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(float(f) for f in self.features))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if len(self.features) != len(self.feature_names):
            raise InvalidArgumentError(
                f"{len(self.features)} features but {len(self.feature_names)} names"
            )
        if self.bounds is not None:
            bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
            object.__setattr__(self, "bounds", bounds)
            if len(bounds) != len(self.features):
                raise InvalidArgumentError("bounds must have one (low, high) pair per feature")
            for name, value, (lo, hi) in zip(self.feature_names, self.features, bounds):
                if not lo <= value <= hi:
                    raise InvalidArgumentError(f"{name}={value} outside [{lo}, {hi}]")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.features, dtype=float)


@dataclass(frozen=True)
class Instance:
    id: int
    context: Context

    def __post_init__(self):
        if int(self.id) != self.id or self.id < 0:
            raise InvalidArgumentError(f"instance id must be a non-negative integer, got {self.id!r}")


class SetKind(str, enum.Enum):
    train = "train"
    test = "test"


@dataclass
class InstanceSet:
    instances: list[Instance]
    kind: SetKind = SetKind.train

    def __post_init__(self):
        self.instances = list(self.instances)
        self.kind = SetKind(self.kind)
        ids = [inst.id for inst in self.instances]
        if len(set(ids)) != len(ids):
            raise InvalidArgumentError("instance ids must be unique within a set")
        names = {inst.context.feature_names for inst in self.instances}
        if len(names) > 1:
            raise InvalidArgumentError("all contexts in a set must share feature names")

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self):
        return iter(self.instances)

    def __getitem__(self, index: int) -> Instance:
        return self.instances[index]

    @property
    def ids(self) -> list[int]:
        return [inst.id for inst in self.instances]

    @property
    def feature_names(self) -> tuple[str, ...]:
        return self.instances[0].context.feature_names if self.instances else ()

    def by_id(self) -> dict[int, Instance]:
        return {inst.id: inst for inst in self.instances}

    def contexts(self) -> dict[int, Context]:
        return {inst.id: inst.context for inst in self.instances}

    def feature_matrix(self) -> np.ndarray:
        if not self.instances:
            return np.zeros((0, 0))
        return np.array([inst.context.features for inst in self.instances], dtype=float)

    def sorted_by_id(self) -> list[Instance]:
        return sorted(self.instances, key=lambda inst: inst.id)

    def write_csv(self, path) -> None:
        write_instance_set(self, path)

    @classmethod
    def read_csv(cls, path) -> "InstanceSet":
        return read_instance_set(path)


def write_instance_set(instances: InstanceSet, path) -> None:
    """Write ``instances`` as CSV.

    Two ``#`` lines precede the header: the real feature names and the set
    kind. Columns themselves are ``id,feature_1..feature_k``. Values use
    17 significant digits so a read reproduces them exactly.
    """
    names = instances.feature_names
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("# features: " + ",".join(names) + "\n")
        fh.write(f"# kind: {instances.kind.value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id"] + [f"feature_{k + 1}" for k in range(len(names))])
        for inst in instances:
            writer.writerow([inst.id] + [format_float(v) for v in inst.context.features])


def read_instance_set(path) -> InstanceSet:
    names: tuple[str, ...] = ()
    kind = SetKind.train
    rows = []
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("# features:"):
                raw = line.split(":", 1)[1].strip()
                names = tuple(raw.split(",")) if raw else ()
            elif line.startswith("# kind:"):
                kind = SetKind(line.split(":", 1)[1].strip())
            elif line.startswith("#"):
                continue
            else:
                rows.append(line)
    reader = csv.reader(rows)
    header = next(reader, None)
    if header is None or header[0] != "id":
        raise InvalidArgumentError(f"{path}: missing 'id,...' header")
    if not names:
        names = tuple(header[1:])
    instances = []
    for row in reader:
        if not row:
            continue
        instances.append(Instance(int(row[0]), Context(tuple(float(v) for v in row[1:]), names)))
    return InstanceSet(instances, kind)


def format_float(value: float) -> str:
    """Shortest text that parses back to exactly ``value``."""
    return repr(float(value))


@dataclass
class EpisodeResult:
    undiscounted_return: float
    discounted_return: float
    length: int
    trajectory: Optional[list[tuple]] = None


class ContextualEnvironment(abc.ABC):
    """One member MDP per instance; the start state is fixed for a given (instance, seed).

    Subclasses implement ``_initial_state`` and ``_transition``; this base
    class owns the step counter, the episode cap and observation assembly
    (state features followed by context features).
    """

    state_dimension: int
    context_dimension: int
    action_count: int
    max_steps: int

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._state = None
        self._context: Optional[Context] = None
        self._context_array = np.zeros(0)
        self.steps = 0
        self.terminated = False
        self.truncated = False

    @abc.abstractmethod
    def _initial_state(self, context: Context):
        ...

    @abc.abstractmethod
    def _transition(self, state, action: int, context: Context) -> tuple[object, float, bool]:
        """Return (next_state, reward, terminal) ignoring the episode cap."""

    def _state_features(self, state) -> np.ndarray:
        return np.asarray(state, dtype=float)

    def observe(self, state, context: Context) -> np.ndarray:
        return np.concatenate([self._state_features(state), context.as_array()])

    def initial_observation(self, instance: Instance) -> np.ndarray:
        """Observation at the single start state, without touching episode state."""
        return self.observe(self._initial_state(instance.context), instance.context)

    @property
    def observation_dimension(self) -> int:
        return self.state_dimension + self.context_dimension

    def reset(self, instance: Instance) -> np.ndarray:
        self._context = instance.context
        self._context_array = instance.context.as_array()
        self._state = self._initial_state(instance.context)
        self.steps = 0
        self.terminated = False
        self.truncated = False
        return self.observe(self._state, self._context)

    def step(self, action: int) -> tuple[np.ndarray, float, bool]:
        if self._context is None:
            raise InvalidArgumentError("step() called before reset()")
        if not (0 <= int(action) < self.action_count) or int(action) != action:
            raise InvalidActionError(f"action {action!r} not in [0, {self.action_count})")
        self._state, reward, terminal = self._transition(self._state, int(action), self._context)
        self.steps += 1
        self.terminated = bool(terminal)
        self.truncated = not self.terminated and self.steps >= self.max_steps
        done = self.terminated or self.truncated
        obs = np.concatenate([self._state_features(self._state), self._context_array])
        return obs, float(reward), done

    @property
    def state(self):
        return self._state


def discounted_return(rewards: Sequence[float], gamma: float) -> float:
    if not 0.0 <= gamma <= 1.0:
        raise InvalidArgumentError(f"gamma must lie in [0, 1], got {gamma}")
    total = 0.0
    discount = 1.0
    for r in rewards:
        total += discount * r
        discount *= gamma
    return total


def rollout(
    env: ContextualEnvironment,
    instance: Instance,
    policy: Policy,
    max_steps: int,
    gamma: float,
    record: bool = False,
) -> EpisodeResult:
    if max_steps < 1:
        raise InvalidArgumentError("max_steps must be at least 1")
    obs = env.reset(instance)
    rewards = []
    trajectory = [] if record else None
    done = False
    while not done and len(rewards) < max_steps:
        action = policy(obs)
        if not (0 <= int(action) < env.action_count):
            raise InvalidActionError(f"policy chose action {action} of {env.action_count}")
        next_obs, reward, done = env.step(int(action))
        rewards.append(reward)
        if record:
            trajectory.append((obs, int(action), reward, next_obs, done))
        obs = next_obs
    return EpisodeResult(
        undiscounted_return=float(sum(rewards)),
        discounted_return=discounted_return(rewards, gamma),
        length=len(rewards),
        trajectory=trajectory,
    )


def mean_return_over_set(
    env: ContextualEnvironment,
    instances: Iterable[Instance],
    policy: Policy,
    max_steps: int,
    gamma: float,
) -> float:
    ordered = sorted(instances, key=lambda inst: inst.id)
    if not ordered:
        raise InvalidArgumentError("cannot average returns over an empty instance set")
    returns = [rollout(env, inst, policy, max_steps, gamma).undiscounted_return for inst in ordered]
    return float(np.mean(returns))
