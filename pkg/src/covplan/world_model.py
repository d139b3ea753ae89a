"""Information roadmap: a fixed-size rolling lattice of risk and coverage state."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

NodeId = tuple[int, int]  # (col, row)

# Direction order is fixed everywhere: N, NE, E, SE, S, SW, W, NW.
# Grid convention: col grows east, row grows south (text-map layout).
DIR_NAMES = ("N", "NE", "E", "SE", "S", "SW", "W", "NW")
DIR_DELTAS = ((0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1))
SQRT2 = math.sqrt(2.0)
# step length in cells per direction
DIR_LENGTHS = tuple(SQRT2 if dx != 0 and dy != 0 else 1.0 for dx, dy in DIR_DELTAS)


def opposite_dir(d: int) -> int:
    return (d + 4) % 8


class RiskClass(enum.IntEnum):
    FREE = 0
    UNKNOWN = 1
    OCCUPIED = 2

    @property
    def probability(self) -> float:
        return (0.0, 0.5, 1.0)[self]


@dataclass(frozen=True)
class IrmEdge:
    distance: float  # meters
    risk: float  # accumulated traversal risk, >= 0


class Irm:
    """Robot-centered lattice with per-node risk class / coverage probability
    and per-edge traversal risk.

    Nodes are 8-connected; edges are implicit. Edge risk is stored per
    directed (node, direction) pair but kept symmetric by the mutators.
    Instances copy cheaply, so planner rollouts can work on snapshots.
    """

    def __init__(self, width: int, height: int, cell_width: float,
                 origin: tuple[float, float]):
        if width < 3 or height < 3:
            raise ValueError(f"lattice must be at least 3x3, got {width}x{height}")
        if cell_width <= 0:
            raise ValueError(f"cell_width must be positive, got {cell_width}")
        self.width = int(width)
        self.height = int(height)
        self.cell_width = float(cell_width)
        self.origin = (float(origin[0]), float(origin[1]))
        self.risk = np.full((self.height, self.width), int(RiskClass.UNKNOWN), np.int8)
        self.coverage = np.zeros((self.height, self.width))
        self.edge_risk = np.zeros((self.height, self.width, 8))

    # -- geometry ---------------------------------------------------------

    def in_bounds(self, n: NodeId) -> bool:
        c, r = n
        return 0 <= c < self.width and 0 <= r < self.height

    def _check_bounds(self, n: NodeId) -> None:
        if not self.in_bounds(n):
            raise IndexError(f"node {n} outside {self.width}x{self.height} lattice")

    def node_at(self, world_xy: tuple[float, float]) -> NodeId:
        """Cell containing a world point (not necessarily in bounds)."""
        return (int(math.floor((world_xy[0] - self.origin[0]) / self.cell_width)),
                int(math.floor((world_xy[1] - self.origin[1]) / self.cell_width)))

    def cell_center(self, n: NodeId) -> tuple[float, float]:
        return (self.origin[0] + (n[0] + 0.5) * self.cell_width,
                self.origin[1] + (n[1] + 0.5) * self.cell_width)

    @property
    def center_node(self) -> NodeId:
        return (self.width // 2, self.height // 2)

    # -- node / edge state ------------------------------------------------

    def risk_class(self, n: NodeId) -> RiskClass:
        self._check_bounds(n)
        return RiskClass(int(self.risk[n[1], n[0]]))

    def set_risk(self, n: NodeId, risk_class: RiskClass) -> None:
        self._check_bounds(n)
        self.risk[n[1], n[0]] = int(risk_class)

    def set_edge_risk(self, a: NodeId, b: NodeId, rho: float) -> None:
        if rho < 0:
            raise ValueError(f"edge risk must be nonnegative, got {rho}")
        d = self._direction(a, b)
        self.edge_risk[a[1], a[0], d] = rho
        self.edge_risk[b[1], b[0], opposite_dir(d)] = rho

    def edge(self, a: NodeId, b: NodeId) -> IrmEdge:
        d = self._direction(a, b)
        return IrmEdge(DIR_LENGTHS[d] * self.cell_width,
                       float(self.edge_risk[a[1], a[0], d]))

    def _direction(self, a: NodeId, b: NodeId) -> int:
        self._check_bounds(a)
        self._check_bounds(b)
        delta = (b[0] - a[0], b[1] - a[1])
        try:
            return DIR_DELTAS.index(delta)
        except ValueError:
            raise ValueError(f"nodes {a} and {b} are not adjacent") from None

    def neighbors(self, n: NodeId) -> list[tuple[NodeId, IrmEdge]]:
        self._check_bounds(n)
        out = []
        for d, (dx, dy) in enumerate(DIR_DELTAS):
            m = (n[0] + dx, n[1] + dy)
            if self.in_bounds(m):
                out.append((m, IrmEdge(DIR_LENGTHS[d] * self.cell_width,
                                       float(self.edge_risk[n[1], n[0], d]))))
        return out

    # -- snapshots / rolling window ----------------------------------------

    def copy(self) -> Irm:
        out = Irm.__new__(Irm)
        out.width, out.height = self.width, self.height
        out.cell_width, out.origin = self.cell_width, self.origin
        out.risk = self.risk.copy()
        out.coverage = self.coverage.copy()
        out.edge_risk = self.edge_risk.copy()
        return out

    def recenter(self, new_center: tuple[float, float]) -> Irm:
        """Shift the window by whole cells so new_center falls in the central
        cell.  Data for world cells present in both windows is copied
        unchanged; exposed cells come back unknown and uncovered."""
        c, r = self.node_at(new_center)
        dx = c - self.center_node[0]
        dy = r - self.center_node[1]
        out = Irm(self.width, self.height, self.cell_width,
                  (self.origin[0] + dx * self.cell_width,
                   self.origin[1] + dy * self.cell_width))
        # new[r, c] = old[r + dy, c + dx] where both indices are in bounds
        r0, r1 = max(0, -dy), min(self.height, self.height - dy)
        c0, c1 = max(0, -dx), min(self.width, self.width - dx)
        if r0 < r1 and c0 < c1:
            src = (slice(r0 + dy, r1 + dy), slice(c0 + dx, c1 + dx))
            dst = (slice(r0, r1), slice(c0, c1))
            out.risk[dst] = self.risk[src]
            out.coverage[dst] = self.coverage[src]
            out.edge_risk[dst] = self.edge_risk[src]
        # drop edge risk on edges whose far endpoint was reinitialized,
        # keeping the directed store symmetric
        kept = np.zeros((self.height, self.width), bool)
        kept[r0:r1, c0:c1] = True
        for d, (ddx, ddy) in enumerate(DIR_DELTAS):
            nbr_kept = np.zeros_like(kept)
            rr0, rr1 = max(0, -ddy), min(self.height, self.height - ddy)
            cc0, cc1 = max(0, -ddx), min(self.width, self.width - ddx)
            nbr_kept[rr0:rr1, cc0:cc1] = kept[rr0 + ddy:rr1 + ddy, cc0 + ddx:cc1 + ddx]
            out.edge_risk[:, :, d][~(kept & nbr_kept)] = 0.0
        return out

    # -- debug output -------------------------------------------------------

    def to_ppm(self, path) -> None:
        """Binary P6 dump: occupied black, unknown gray, free shaded from
        white (uncovered) to brown (covered)."""
        img = np.empty((self.height, self.width, 3), np.uint8)
        img[:] = 128
        free = self.risk == int(RiskClass.FREE)
        occ = self.risk == int(RiskClass.OCCUPIED)
        brown = np.array([139.0, 90.0, 43.0])
        white = np.array([255.0, 255.0, 255.0])
        pc = self.coverage[free][:, None]
        img[free] = np.clip(white * (1 - pc) + brown * pc, 0, 255).astype(np.uint8)
        img[occ] = 0
        with open(path, "wb") as f:
            f.write(b"P6\n%d %d\n255\n" % (self.width, self.height))
            f.write(img.tobytes())


def new_irm(width: int, height: int, cell_width: float,
            origin: tuple[float, float]) -> Irm:
    return Irm(width, height, cell_width, origin)
