"""Cart-pole balancing with the pole half-length as context."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import Context, ContextualEnvironment
from ..errors import InvalidArgumentError, NumericDomainError

FEATURES = ("pole_half_length",)
REPLICATION_LENGTHS = (0.25, 0.5, 1.0)  # short, medium, long

PUSH_LEFT = 0
PUSH_RIGHT = 1


@dataclass(frozen=True)
class CartPoleParams:
    gravity: float = 9.8
    cart_mass: float = 1.0
    pole_mass: float = 0.1
    force_mag: float = 10.0
    tau: float = 0.02
    angle_limit: float = 12 * 2 * math.pi / 360
    position_limit: float = 2.4
    max_steps: int = 200


def cartpole_context(pole_half_length: float) -> Context:
    if not pole_half_length > 0:
        raise InvalidArgumentError(f"pole half-length must be positive, got {pole_half_length}")
    return Context((pole_half_length,), FEATURES)


def cartpole_accelerations(state, action: int, half_length: float, params: CartPoleParams = CartPoleParams()):
    """Return (x_acc, theta_acc) for the given state and push direction."""
    _, _, theta, theta_dot = state
    force = params.force_mag if action == PUSH_RIGHT else -params.force_mag
    total_mass = params.cart_mass + params.pole_mass
    pole_moment = params.pole_mass * half_length
    cos, sin = math.cos(theta), math.sin(theta)
    temp = (force + pole_moment * theta_dot * theta_dot * sin) / total_mass
    theta_acc = (params.gravity * sin - cos * temp) / (
        half_length * (4.0 / 3.0 - params.pole_mass * cos * cos / total_mass)
    )
    x_acc = temp - pole_moment * theta_acc * cos / total_mass
    return x_acc, theta_acc


def cartpole_step(state, action: int, ctx: Context, params: CartPoleParams = CartPoleParams()):
    """Advance one semi-implicit Euler step.

    Returns ``(next_state, reward, done)`` where ``done`` covers the angle and
    position limits only; the episode cap lives in :class:`CartPoleEnv`.
    """
    x, x_dot, theta, theta_dot = (float(v) for v in state)
    if not all(math.isfinite(v) for v in (x, x_dot, theta, theta_dot)):
        raise NumericDomainError(f"non-finite cart-pole state {state!r}")
    if abs(theta) > math.pi:
        raise InvalidArgumentError(f"|theta| must not exceed pi, got {theta}")
    x_acc, theta_acc = cartpole_accelerations((x, x_dot, theta, theta_dot), action, ctx.features[0], params)
    x_dot = x_dot + params.tau * x_acc
    x = x + params.tau * x_dot
    theta_dot = theta_dot + params.tau * theta_acc
    theta = theta + params.tau * theta_dot
    done = abs(x) > params.position_limit or abs(theta) > params.angle_limit
    reward = 0.0 if done else 1.0
    return (x, x_dot, theta, theta_dot), reward, done


class CartPoleEnv(ContextualEnvironment):
    state_dimension = 4
    context_dimension = 1
    action_count = 2

    def __init__(self, seed: int = 0, params: CartPoleParams = CartPoleParams()):
        super().__init__(seed)
        self.params = params
        self.max_steps = params.max_steps
        start = np.random.default_rng(seed).uniform(-0.05, 0.05, size=4)
        self._start = tuple(float(v) for v in start)

    def _initial_state(self, context: Context):
        return self._start

    def _transition(self, state, action, context):
        return cartpole_step(state, action, context, self.params)
