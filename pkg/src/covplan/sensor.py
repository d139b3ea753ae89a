"""Probabilistic coverage sensor: logistic range model, ray-traced world
coverage update, precomputed coverage masks, spaciousness, adaptive range."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernels import FREE, coverage_update_kernel, ray_table
from .world_model import Irm, NodeId


@dataclass(frozen=True)
class SensorParams:
    r0: float = 4.0        # sigmoid midpoint, m
    k: float = 1.5         # sigmoid steepness, 1/m
    r_max: float = 8.0     # model-defined max range, m
    n_rays: int = 360
    rho_block: float = 0.5  # node risk at or above this blocks a ray

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError(f"steepness must be positive, got {self.k}")
        if not 0 < self.r0 < self.r_max:
            raise ValueError(f"need 0 < r0 < r_max, got r0={self.r0} r_max={self.r_max}")
        if self.n_rays < 8:
            raise ValueError(f"need at least 8 rays, got {self.n_rays}")


def coverage_probability(r, params: SensorParams):
    """Logistic fall-off of coverage probability with robot-to-node range."""
    return 1.0 / (1.0 + np.exp(params.k * (np.asarray(r, float) - params.r0)))


def coverage_update(irm: Irm, n_q: NodeId, params: SensorParams,
                    r_max: float | None = None) -> np.ndarray:
    """Ray-traced coverage update from node ``n_q``: along each ray, nodes
    below the blocking risk and inside range get max-merged coverage; the
    first node failing either test stops the ray. Mutates ``irm.coverage``
    in place and returns it."""
    irm._check_bounds(n_q)
    if r_max is None:
        r_max = params.r_max
    max_cells = int(math.ceil(r_max / irm.cell_width)) + 1
    starts, dx, dy, _ = ray_table(params.n_rays, max_cells)
    coverage_update_kernel(irm.coverage, irm.risk, n_q[0], n_q[1],
                           irm.cell_width, params.r0, params.k, r_max,
                           params.rho_block, starts, dx, dy)
    return irm.coverage


@dataclass(frozen=True)
class CoverageMask:
    """Robot-centered coverage-probability stencil for one adaptive range,
    built on an obstacle-free world so rollouts can skip ray tracing."""
    stencil: np.ndarray
    cell_width: float
    r_adapt: float
    kind: str = "logistic"

    @property
    def radius_cells(self) -> int:
        return self.stencil.shape[0] // 2


def build_coverage_mask(r_adapt: float, params: SensorParams,
                        cell_width: float) -> CoverageMask:
    if r_adapt <= 0:
        raise ValueError(f"adaptive range must be positive, got {r_adapt}")
    if r_adapt > params.r_max:
        raise ValueError(f"adaptive range {r_adapt} exceeds r_max {params.r_max}")
    radius = int(math.ceil(r_adapt / cell_width))
    side = 2 * radius + 1
    free = Irm(max(side, 3), max(side, 3), cell_width, (0.0, 0.0))
    free.risk[:] = FREE
    coverage_update(free, free.center_node, params, r_max=r_adapt)
    c = free.center_node
    stencil = free.coverage[c[1] - radius:c[1] + radius + 1,
                            c[0] - radius:c[0] + radius + 1].copy()
    stencil.setflags(write=False)
    return CoverageMask(stencil, cell_width, r_adapt)


def binary_mask(static_range: float, cell_width: float) -> CoverageMask:
    """Low-fidelity mask: probability 1 inside the static range, 0 outside."""
    if static_range <= 0:
        raise ValueError(f"static range must be positive, got {static_range}")
    radius = int(math.ceil(static_range / cell_width))
    ii = np.arange(-radius, radius + 1)
    r = np.hypot(*np.meshgrid(ii, ii)) * cell_width
    stencil = (r < static_range).astype(float)
    stencil.setflags(write=False)
    return CoverageMask(stencil, cell_width, static_range, kind="binary")


def apply_mask(irm: Irm, n_q: NodeId, mask: CoverageMask) -> np.ndarray:
    """Max-merge the translated stencil into the coverage map; stencil cells
    falling outside the lattice are dropped. No ray tracing."""
    s = mask.stencil
    rad = mask.radius_cells
    x0, y0 = n_q[0] - rad, n_q[1] - rad
    gx0, gy0 = max(0, x0), max(0, y0)
    gx1 = min(irm.width, x0 + s.shape[1])
    gy1 = min(irm.height, y0 + s.shape[0])
    if gx0 < gx1 and gy0 < gy1:
        win = irm.coverage[gy0:gy1, gx0:gx1]
        np.maximum(win, s[gy0 - y0:gy1 - y0, gx0 - x0:gx1 - x0], out=win)
    return irm.coverage


@dataclass
class Scan:
    """Planar range-finder return: first-hit points per ray, world frame."""
    origin: tuple[float, float]
    points: np.ndarray  # (n, 2)

    def distances(self) -> np.ndarray:
        return np.hypot(self.points[:, 0] - self.origin[0],
                        self.points[:, 1] - self.origin[1])


@dataclass
class SpaciousnessFilter:
    """Low-pass filtered median scan distance; a scalar notion of how
    spacious the robot's surroundings are. The first scan seeds the state
    directly so there is no cold-start transient."""
    alpha1: float = 0.95
    alpha2: float = 0.05
    state: float | None = None

    def update(self, scan: Scan) -> float:
        if scan.points.shape[0] == 0:
            return self.state if self.state is not None else 0.0
        med = float(np.median(scan.distances()))
        if self.state is None:
            self.state = med
        else:
            self.state = self.alpha1 * self.state + self.alpha2 * med
        return self.state


def spaciousness_update(filt: SpaciousnessFilter, scan: Scan) -> float:
    return filt.update(scan)


def adaptive_range(r_spac: float, alpha: float, r_max: float) -> float:
    """Scale spaciousness by alpha, saturating at the model's max range."""
    if r_spac <= r_max / alpha:
        return alpha * r_spac
    return r_max


@dataclass
class MaskCache:
    """Masks memoized on the adaptive range quantized to coarse steps."""
    params: SensorParams
    cell_width: float
    quantum: float = 0.25
    _cache: dict = field(default_factory=dict)

    def get(self, r_adapt: float) -> CoverageMask:
        q = max(self.quantum,
                round(r_adapt / self.quantum) * self.quantum)
        q = min(q, self.params.r_max)
        if q not in self._cache:
            self._cache[q] = build_coverage_mask(q, self.params, self.cell_width)
        return self._cache[q]
