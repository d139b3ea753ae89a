"""Procedural test environments: corridors, halls, mazes, and a trap world
with an inviting but risky opening."""
from __future__ import annotations

import numpy as np

from .simulator import GroundTruthGrid


def _grid_from_free(free: np.ndarray, start_cell: tuple[int, int],
                    cell_width: float) -> GroundTruthGrid:
    occ = ~free
    occ[0, :] = occ[-1, :] = occ[:, 0] = occ[:, -1] = True
    if occ[start_cell[1], start_cell[0]]:
        raise ValueError(f"start cell {start_cell} is occupied")
    g = GroundTruthGrid(occ, cell_width, (0.0, 0.0))
    return GroundTruthGrid(occ, cell_width, g.cell_center(start_cell))


def corridor_map(length: int = 60, width: int = 5,
                 cell_width: float = 0.5) -> GroundTruthGrid:
    """Straight east-west corridor, start at the west end."""
    free = np.zeros((width + 2, length + 2), bool)
    free[1:width + 1, 1:length + 1] = True
    return _grid_from_free(free, (2, 1 + width // 2), cell_width)


def bend_map(arm: int = 30, width: int = 5,
             cell_width: float = 0.5) -> GroundTruthGrid:
    """Two corridor arms joined by a 90-degree bend (east then south)."""
    side = arm + width + 2
    free = np.zeros((side, side), bool)
    free[1:width + 1, 1:arm + width + 1] = True          # east arm
    free[1:arm + width + 1, arm + 1:arm + width + 1] = True  # south arm
    return _grid_from_free(free, (2, 1 + width // 2), cell_width)


def hall_map(cols: int = 50, rows: int = 26,
             cell_width: float = 0.5) -> GroundTruthGrid:
    """Open rectangular hall, wide relative to the sensing range."""
    free = np.zeros((rows, cols), bool)
    free[1:-1, 1:-1] = True
    return _grid_from_free(free, (2, rows // 2), cell_width)


def maze_map(cols: int = 100, rows: int = 100, seed: int = 0,
             cell_width: float = 0.5, corridor: int = 6, wall: int = 10,
             room_every: int = 3, room_pad: int = 2) -> GroundTruthGrid:
    """Seeded maze: recursive-backtracker over a coarse lattice, scaled so
    corridors are ``corridor`` cells wide and walls ``wall`` cells thick,
    with a subset of junctions widened into rooms. Junction entrances sit
    behind thick walls, so every turn is a sharp, occluding bend."""
    rng = np.random.default_rng(seed)
    pitch = corridor + wall
    mc = max(2, (cols - 2 - corridor) // pitch + 1)
    mr = max(2, (rows - 2 - corridor) // pitch + 1)
    visited = np.zeros((mr, mc), bool)
    free = np.zeros((rows, cols), bool)

    def cell_rect(cy, cx):
        return 1 + pitch * cy, 1 + pitch * cx

    def carve(cy, cx, pad=0):
        y0, x0 = cell_rect(cy, cx)
        free[max(1, y0 - pad):min(rows - 1, y0 + corridor + pad),
             max(1, x0 - pad):min(cols - 1, x0 + corridor + pad)] = True

    def carve_between(a, b):
        ay, ax = cell_rect(*a)
        by, bx = cell_rect(*b)
        y0, y1 = min(ay, by), max(ay, by) + corridor
        x0, x1 = min(ax, bx), max(ax, bx) + corridor
        free[y0:min(rows - 1, y1), x0:min(cols - 1, x1)] = True

    stack = [(0, 0)]
    visited[0, 0] = True
    carve(0, 0)
    junctions = []
    while stack:
        cy, cx = stack[-1]
        nbrs = [(cy + dy, cx + dx) for dy, dx in
                ((-1, 0), (1, 0), (0, -1), (0, 1))
                if 0 <= cy + dy < mr and 0 <= cx + dx < mc
                and not visited[cy + dy, cx + dx]]
        if not nbrs:
            stack.pop()
            continue
        nxt = nbrs[int(rng.integers(len(nbrs)))]
        visited[nxt] = True
        carve_between((cy, cx), nxt)
        carve(*nxt)
        junctions.append(nxt)
        stack.append(nxt)
    # widen a subset of junctions into rooms for spaciousness contrast
    for i, (cy, cx) in enumerate(junctions):
        if i % room_every == 0:
            carve(cy, cx, pad=room_pad)
    return _grid_from_free(free, (1 + corridor // 2, 1 + corridor // 2),
                           cell_width)


def trap_map(cell_width: float = 0.5) -> GroundTruthGrid:
    """A main room plus a small free pocket behind a one-cell-wide gap.
    The pocket is genuinely free space, but every path into it squeezes
    between obstacles, so entering is cheap in distance and expensive in
    traversal risk. Planners that ignore risk while choosing viewpoints
    dive in; risk-aware ones cover the room first and pay less overall."""
    rows, cols = 30, 46
    free = np.zeros((rows, cols), bool)
    free[1:-1, 1:29] = True                      # main room
    free[1:-1, 33:-1] = True                     # pocket
    free[14:15, 29:33] = True                    # one-cell-wide neck
    # clutter pillars around the neck tighten the squeeze further
    free[12:13, 27:29] = False
    free[16:17, 27:29] = False
    return _grid_from_free(free, (4, 15), cell_width)


BUILTIN_MAPS = {
    "corridor": corridor_map,
    "bend": bend_map,
    "hall": hall_map,
    "maze": maze_map,
    "trap": trap_map,
}
