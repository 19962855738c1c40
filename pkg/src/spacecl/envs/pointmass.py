"""Point mass steered through a goal region on a floor with friction."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..core import Context, ContextualEnvironment
from ..errors import InvalidActionError, NumericDomainError

FEATURES = ("goal_x", "goal_y", "goal_width", "friction")
BOUNDS = ((-4.0, 4.0), (-4.0, 4.0), (0.5, 8.0), (0.0, 4.0))

# action index -> unit force; row-major over {-1, 0, +1}^2, index 4 is no force
FORCE_GRID = tuple((fx, fy) for fx in (-1, 0, 1) for fy in (-1, 0, 1))
NO_FORCE = 4


@dataclass(frozen=True)
class PointMassParams:
    mass: float = 1.0
    force_mag: float = 10.0
    dt: float = 0.05
    arena: float = 4.0
    goal_bonus: float = 10.0
    start: tuple[float, float] = (0.0, 0.0)
    max_steps: int = 100


def pointmass_context(goal_x: float, goal_y: float, goal_width: float, friction: float) -> Context:
    return Context((goal_x, goal_y, goal_width, friction), FEATURES, BOUNDS)


def pointmass_step(state, action: int, ctx: Context, params: PointMassParams = PointMassParams()):
    x, y, vx, vy = (float(v) for v in state)
    if not all(math.isfinite(v) for v in (x, y, vx, vy)):
        raise NumericDomainError(f"non-finite point-mass state {state!r}")
    if not 0 <= action < len(FORCE_GRID):
        raise InvalidActionError(f"action {action} outside the 3x3 force grid")
    goal_x, goal_y, goal_width, friction = ctx.features
    fx, fy = FORCE_GRID[action]
    accel = params.force_mag / params.mass
    dt = params.dt
    vx = vx + (fx * accel - friction * vx) * dt
    vy = vy + (fy * accel - friction * vy) * dt
    x = x + vx * dt
    y = y + vy * dt
    # inelastic walls: clamp the position and drop the velocity into the wall
    lim = params.arena
    if x < -lim or x > lim:
        x = min(max(x, -lim), lim)
        vx = 0.0
    if y < -lim or y > lim:
        y = min(max(y, -lim), lim)
        vy = 0.0
    distance = math.hypot(x - goal_x, y - goal_y)
    reward = -distance
    done = distance <= goal_width / 2
    if done:
        reward += params.goal_bonus
    return (x, y, vx, vy), reward, done


class PointMassEnv(ContextualEnvironment):
    state_dimension = 4
    context_dimension = 4
    action_count = 9

    def __init__(self, seed: int = 0, params: PointMassParams = PointMassParams()):
        super().__init__(seed)
        self.params = params
        self.max_steps = params.max_steps

    def _initial_state(self, context):
        return (float(self.params.start[0]), float(self.params.start[1]), 0.0, 0.0)

    def _transition(self, state, action, context):
        return pointmass_step(state, action, context, self.params)
