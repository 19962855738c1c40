"""5x5 grid mazes whose flattened layout is the context."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from typing import Optional

from ..core import Context, ContextualEnvironment
from ..errors import InvalidActionError, InvalidArgumentError, InvalidStateError

SIZE = 5
START = (0, 0)
GOAL = (SIZE - 1, SIZE - 1)
FEATURES = tuple(f"cell_{r}_{c}" for r in range(SIZE) for c in range(SIZE))
BOUNDS = ((0.0, 1.0),) * (SIZE * SIZE)

UP, DOWN, LEFT, RIGHT = range(4)
MOVES = {UP: (-1, 0), DOWN: (1, 0), LEFT: (0, -1), RIGHT: (0, 1)}

BRAID_PROBABILITY = 0.2


@dataclass(frozen=True)
class MazeParams:
    step_penalty: float = -0.01
    goal_reward: float = 1.0
    max_steps: int = 100


def maze_context(layout) -> Context:
    cells = tuple(int(v) for v in layout)
    if len(cells) != SIZE * SIZE or any(v not in (0, 1) for v in cells):
        raise InvalidArgumentError("maze layout must be 25 binary cells")
    if cells[_index(START)] or cells[_index(GOAL)]:
        raise InvalidArgumentError("start and goal cells must be free")
    if shortest_path(cells) is None:
        raise InvalidArgumentError("maze has no path from start to goal")
    return Context(cells, FEATURES, BOUNDS)


def _index(cell) -> int:
    return cell[0] * SIZE + cell[1]


def is_wall(layout, cell) -> bool:
    r, c = cell
    if not (0 <= r < SIZE and 0 <= c < SIZE):
        return True
    return bool(layout[_index(cell)])


def shortest_path(layout, start=START, goal=GOAL) -> Optional[list[tuple[int, int]]]:
    """Breadth-first search; returns the cell sequence start..goal or None."""
    if is_wall(layout, start) or is_wall(layout, goal):
        return None
    parents = {start: None}
    queue = deque([start])
    while queue:
        cell = queue.popleft()
        if cell == goal:
            path = []
            while cell is not None:
                path.append(cell)
                cell = parents[cell]
            return path[::-1]
        for dr, dc in MOVES.values():
            nxt = (cell[0] + dr, cell[1] + dc)
            if nxt not in parents and not is_wall(layout, nxt):
                parents[nxt] = cell
                queue.append(nxt)
    return None


def generate_maze(seed: int) -> Context:
    """Carve a maze by randomized depth-first search, then open a few extra walls.

    Carving runs over the 3x3 lattice of even-coordinate cells, so every
    lattice cell (start and goal included) ends up connected. A tree on that
    lattice admits only 192 layouts, so each remaining wall is then knocked
    out with probability ``BRAID_PROBABILITY`` to widen the instance space.
    """
    rng = random.Random(seed)
    grid = [[1] * SIZE for _ in range(SIZE)]
    grid[0][0] = 0
    stack = [(0, 0)]
    while stack:
        r, c = stack[-1]
        options = [
            (r + 2 * dr, c + 2 * dc, dr, dc)
            for dr, dc in MOVES.values()
            if 0 <= r + 2 * dr < SIZE and 0 <= c + 2 * dc < SIZE and grid[r + 2 * dr][c + 2 * dc]
        ]
        if not options:
            stack.pop()
            continue
        nr, nc, dr, dc = rng.choice(options)
        grid[r + dr][c + dc] = 0
        grid[nr][nc] = 0
        stack.append((nr, nc))
    for r in range(SIZE):
        for c in range(SIZE):
            if grid[r][c] and rng.random() < BRAID_PROBABILITY:
                grid[r][c] = 0
    return maze_context([v for row in grid for v in row])


def maze_step(state, action: int, ctx: Context, params: MazeParams = MazeParams()):
    layout = ctx.features
    state = (int(state[0]), int(state[1]))
    if is_wall(layout, state):
        raise InvalidStateError(f"agent position {state} is a wall or off the grid")
    if action not in MOVES:
        raise InvalidActionError(f"maze action must be one of 0..3, got {action}")
    dr, dc = MOVES[action]
    nxt = (state[0] + dr, state[1] + dc)
    if is_wall(layout, nxt):
        nxt = state
    reward = params.step_penalty
    done = nxt == GOAL
    if done:
        reward += params.goal_reward
    return nxt, reward, done


def action_between(a, b) -> int:
    delta = (b[0] - a[0], b[1] - a[1])
    for action, move in MOVES.items():
        if move == delta:
            return action
    raise InvalidArgumentError(f"cells {a} and {b} are not adjacent")


class MazeEnv(ContextualEnvironment):
    state_dimension = 2
    context_dimension = SIZE * SIZE
    action_count = 4

    def __init__(self, seed: int = 0, params: MazeParams = MazeParams()):
        super().__init__(seed)
        self.params = params
        self.max_steps = params.max_steps

    def _initial_state(self, context):
        return START

    def _transition(self, state, action, context):
        return maze_step(state, action, context, self.params)
