"""Environment registry and instance sampling."""

from __future__ import annotations

import dataclasses

import numpy as np

from ..core import Context, Instance, InstanceSet, SetKind
from ..errors import InvalidArgumentError
from . import cartpole, maze, pointmass
from .cartpole import CartPoleEnv, CartPoleParams, cartpole_context, cartpole_step
from .maze import MazeEnv, MazeParams, generate_maze, maze_context, maze_step
from .pointmass import PointMassEnv, PointMassParams, pointmass_context, pointmass_step

ENV_KINDS = ("cartpole", "pointmass", "maze")

_ENVS = {
    "cartpole": (CartPoleEnv, CartPoleParams),
    "pointmass": (PointMassEnv, PointMassParams),
    "maze": (MazeEnv, MazeParams),
}

# test-set cart-pole lengths are drawn from the span of the replication set
CARTPOLE_TEST_RANGE = (0.25, 1.0)


def _check_kind(kind: str) -> None:
    if kind not in _ENVS:
        raise InvalidArgumentError(f"unknown environment {kind!r}; expected one of {ENV_KINDS}")


def params_for(kind: str, overrides: dict | None = None):
    _check_kind(kind)
    params_cls = _ENVS[kind][1]
    overrides = dict(overrides or {})
    names = {f.name: f for f in dataclasses.fields(params_cls)}
    unknown = sorted(set(overrides) - set(names))
    if unknown:
        raise InvalidArgumentError(f"unknown {kind} parameters: {', '.join(unknown)}")
    return params_cls(**overrides)


def make_env(kind: str, seed: int = 0, overrides: dict | None = None):
    env_cls = _ENVS[kind][0] if kind in _ENVS else None
    params = params_for(kind, overrides)
    return env_cls(seed=seed, params=params)


def _draw_context(kind: str, rng: np.random.Generator) -> Context:
    if kind == "pointmass":
        values = [rng.uniform(lo, hi) for lo, hi in pointmass.BOUNDS]
        return pointmass_context(*values)
    if kind == "cartpole":
        return cartpole_context(rng.uniform(*CARTPOLE_TEST_RANGE))
    return generate_maze(int(rng.integers(2**31)))


def sample_instances(kind: str, n: int, seed: int, kind_of_set: SetKind = SetKind.train, first_id: int = 0) -> InstanceSet:
    """Draw ``n`` instances for ``kind``; ids run ``first_id .. first_id + n - 1``.

    PointMass contexts are uniform within their bounds, cart-pole cycles the
    short/medium/long replication lengths, and mazes come from
    :func:`generate_maze` with seeds drawn from ``seed``.
    """
    _check_kind(kind)
    if n < 1:
        raise InvalidArgumentError(f"need at least one instance, got n={n}")
    rng = np.random.default_rng(seed)
    if kind == "cartpole":
        contexts = [cartpole_context(cartpole.REPLICATION_LENGTHS[k % 3]) for k in range(n)]
    else:
        contexts = [_draw_context(kind, rng) for _ in range(n)]
    return InstanceSet([Instance(first_id + k, ctx) for k, ctx in enumerate(contexts)], kind_of_set)


def split_instances(kind: str, n_train: int, n_test: int, seed: int) -> tuple[InstanceSet, InstanceSet]:
    """Train set from :func:`sample_instances`, plus a test set disjoint by id and context.

    Test ids continue after the train ids. Test contexts come from a separate
    stream and any context already present in either set is redrawn.
    """
    train = sample_instances(kind, n_train, seed)
    if n_test < 0:
        raise InvalidArgumentError("n_test must be non-negative")
    seen = {inst.context.features for inst in train}
    rng = np.random.default_rng([seed, 1])
    test = []
    attempts = 0
    while len(test) < n_test:
        attempts += 1
        if attempts > 1000 * (n_test + 1):
            raise InvalidArgumentError(f"could not draw {n_test} distinct {kind} test contexts")
        ctx = _draw_context(kind, rng)
        if ctx.features in seen:
            continue
        seen.add(ctx.features)
        test.append(Instance(n_train + len(test), ctx))
    return train, InstanceSet(test, SetKind.test)


__all__ = [
    "ENV_KINDS",
    "CartPoleEnv",
    "CartPoleParams",
    "MazeEnv",
    "MazeParams",
    "PointMassEnv",
    "PointMassParams",
    "cartpole_context",
    "cartpole_step",
    "generate_maze",
    "make_env",
    "maze_context",
    "maze_step",
    "params_for",
    "pointmass_context",
    "pointmass_step",
    "sample_instances",
    "split_instances",
]
