"""Benchmark domains: the noisy 8x8 gridworld family and cliff walking.

Maps are plain text, one row per line::

    #  wall        .  free        G  goal
    S  start       C  cliff cell

States are the occupiable cells in row-major order.  In the gridworld that is
every non-wall cell (the goal is an absorbing terminal state); in the cliff
domain cliff and goal cells are never occupied, since stepping onto either
teleports the agent back to the start.
"""

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

import numpy as np

from .mdp import CostModel, TabularMdp

__all__ = [
    "MapError",
    "GridMap",
    "FixedUnit",
    "GaussianUnit",
    "GeneratedMeans",
    "parse_map",
    "load_map",
    "default_gridworld_map",
    "default_cliff_map",
    "build_gridworld",
    "build_cliff",
    "slide_distribution",
    "cliff_edge_states",
    "GRID_MOVES",
    "CLIFF_MOVES",
]

WALL, FREE, GOAL, START, CLIFF = "#", ".", "G", "S", "C"
SYMBOLS = {WALL, FREE, GOAL, START, CLIFF}

# (d_row, d_col); index 0 is "stay"
GRID_MOVES = ((0, 0), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))
CLIFF_MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1))  # up, down, left, right

ORTHOGONAL_SLIDE = Fraction(15, 100)
DIAGONAL_SLIDE = Fraction(5, 100)
CLIFF_COST = 5.0
STEP_COST = 1.0


class MapError(ValueError):
    pass


@dataclass(frozen=True)
class GridMap:
    rows: tuple

    @property
    def height(self):
        return len(self.rows)

    @property
    def width(self):
        return len(self.rows[0])

    def __getitem__(self, cell):
        r, c = cell
        return self.rows[r][c]

    def inside(self, cell):
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width

    def available(self, cell):
        return self.inside(cell) and self[cell] != WALL

    def cells(self, *symbols):
        return [
            (r, c)
            for r in range(self.height)
            for c in range(self.width)
            if self.rows[r][c] in symbols
        ]

    @property
    def goal(self):
        return self.cells(GOAL)[0]

    @property
    def start(self):
        found = self.cells(START)
        return found[0] if found else None

    def __str__(self):
        return "\n".join(self.rows)


def parse_map(text):
    lines = [line.rstrip() for line in text.splitlines()]
    while lines and not lines[-1]:
        lines.pop()
    if not lines:
        raise MapError("empty map")
    width = len(lines[0])
    for i, line in enumerate(lines):
        if len(line) != width:
            raise MapError(f"line {i + 1}: ragged row of length {len(line)}, expected {width}")
        for j, ch in enumerate(line):
            if ch not in SYMBOLS:
                raise MapError(f"line {i + 1}, column {j + 1}: unknown symbol {ch!r}")
    grid = GridMap(tuple(lines))
    goals = grid.cells(GOAL)
    if len(goals) != 1:
        where = ", ".join(f"line {r + 1} column {c + 1}" for r, c in goals)
        raise MapError(f"expected exactly one goal, found {len(goals)}" + (f" ({where})" if where else ""))
    starts = grid.cells(START)
    if len(starts) > 1 or (grid.cells(CLIFF) and len(starts) != 1):
        raise MapError(f"expected exactly one start cell, found {len(starts)}")
    _check_connected(grid)
    return grid


def _check_connected(grid):
    open_cells = grid.cells(FREE, GOAL, START, CLIFF)
    seen = {open_cells[0]}
    queue = deque(seen)
    while queue:
        r, c = queue.popleft()
        for dr, dc in CLIFF_MOVES:
            nb = (r + dr, c + dc)
            if nb not in seen and grid.available(nb):
                seen.add(nb)
                queue.append(nb)
    missing = [cell for cell in open_cells if cell not in seen]
    if missing:
        r, c = missing[0]
        raise MapError(f"line {r + 1}, column {c + 1}: cell not reachable (map is not connected)")


def load_map(path):
    with open(path, encoding="utf-8") as fh:
        return parse_map(fh.read())


def _shipped(name):
    return parse_map(resources.files("glearning").joinpath("maps").joinpath(name).read_text(encoding="utf-8"))


def default_gridworld_map():
    return _shipped("gridworld8x8.txt")


def default_cliff_map():
    return _shipped("cliff12x4.txt")


@dataclass(frozen=True)
class FixedUnit:
    def means(self, shape, rng):
        return np.ones(shape), 0.0


@dataclass(frozen=True)
class GaussianUnit:
    std: float = 2.0
    mean: float = 1.0

    def means(self, shape, rng):
        return np.full(shape, self.mean), self.std


@dataclass(frozen=True)
class GeneratedMeans:
    """Means drawn once per domain from U[low, high], row-major over (s, a)."""

    mean_low: float = 1.0
    mean_high: float = 3.0
    std: float = 4.0

    def means(self, shape, rng):
        if rng is None:
            raise ValueError("GeneratedMeans needs a generator stream")
        span = self.mean_high - self.mean_low
        flat = [self.mean_low + span * rng.uniform() for _ in range(shape[0] * shape[1])]
        return np.array(flat).reshape(shape), self.std


def slide_distribution(grid, target):
    """Exact landing distribution around an intended target cell."""
    out = {}
    stay = Fraction(1)
    r, c = target
    for dr, dc in GRID_MOVES[1:]:
        nb = (r + dr, c + dc)
        if grid.available(nb):
            mass = DIAGONAL_SLIDE if dr and dc else ORTHOGONAL_SLIDE
            out[nb] = mass
            stay -= mass
    out[target] = stay
    return out


def build_gridworld(grid, variant=FixedUnit(), gen_rng=None, gamma=0.95):
    if grid.cells(START, CLIFF):
        raise MapError("gridworld maps may not contain start or cliff cells")
    cells = grid.cells(FREE, GOAL)
    index = {cell: i for i, cell in enumerate(cells)}
    S, A = len(cells), len(GRID_MOVES)
    p = np.zeros((S, A, S))
    terminal = np.zeros(S, dtype=bool)
    goal = index[grid.goal]
    terminal[goal] = True
    for cell, s in index.items():
        if s == goal:
            p[s, :, s] = 1.0
            continue
        for a, (dr, dc) in enumerate(GRID_MOVES):
            target = (cell[0] + dr, cell[1] + dc)
            if not grid.available(target):
                target = cell
            for landing, mass in slide_distribution(grid, target).items():
                p[s, a, index[landing]] += float(mass)
    mean, std = variant.means((S, A), gen_rng)
    mean = np.array(mean, dtype=float)
    mean[terminal] = 0.0
    std_table = np.full((S, A), float(std))
    std_table[terminal] = 0.0
    return TabularMdp(p, CostModel(mean, std_table), gamma, terminal, labels=tuple(cells))


def build_cliff(grid, gamma=0.95):
    if grid.start is None:
        raise MapError("cliff map needs a start cell")
    cells = grid.cells(FREE, START)
    index = {cell: i for i, cell in enumerate(cells)}
    start = index[grid.start]
    S, A = len(cells), len(CLIFF_MOVES)
    p = np.zeros((S, A, S))
    mean = np.zeros((S, A))
    for cell, s in index.items():
        for a, (dr, dc) in enumerate(CLIFF_MOVES):
            nb = (cell[0] + dr, cell[1] + dc)
            if not grid.available(nb):
                nxt, cost = s, STEP_COST
            elif grid[nb] == CLIFF:
                nxt, cost = start, CLIFF_COST
            elif grid[nb] == GOAL:
                nxt, cost = start, 0.0
            else:
                nxt, cost = index[nb], STEP_COST
            p[s, a, nxt] = 1.0
            mean[s, a] = cost
    return TabularMdp(p, CostModel.deterministic(mean), gamma, np.zeros(S, dtype=bool), labels=tuple(cells))


def cliff_edge_states(grid, m):
    """State indices of the cells directly above a cliff cell."""
    edge = {(r - 1, c) for r, c in grid.cells(CLIFF)}
    return [i for i, cell in enumerate(m.labels) if cell in edge]
