"""Closed-loop ground truth: map loading, simulated range finder, lattice
maintenance from scans, mission execution, and exploration metrics."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baselines
from ._kernels import scan_kernel, sense_kernel
from .mdp import JointState, RewardWeights, RobotState, action_delta
from .planner import (ActionSequence, PlannerConfig, coverage_plan,
                      empty_sequence, global_fallback)
from .sensor import (MaskCache, Scan, SensorParams, SpaciousnessFilter,
                     apply_mask, coverage_update)
from .world_model import DIR_DELTAS, DIR_LENGTHS, Irm, NodeId, RiskClass

PLANNERS = ("adaptive", "lf4", "lf8", "decoupled")


class MapParseError(ValueError):
    pass


@dataclass
class GroundTruthGrid:
    """Simulator-only occupancy grid; the planner never reads it."""
    occupancy: np.ndarray  # bool, True = occupied
    cell_width: float
    start: tuple[float, float]  # world coords

    @property
    def width(self) -> int:
        return self.occupancy.shape[1]

    @property
    def height(self) -> int:
        return self.occupancy.shape[0]

    @property
    def free_area(self) -> float:
        return float((~self.occupancy).sum()) * self.cell_width ** 2

    def cell_of(self, world_xy: tuple[float, float]) -> NodeId:
        return (int(math.floor(world_xy[0] / self.cell_width)),
                int(math.floor(world_xy[1] / self.cell_width)))

    def cell_center(self, n: NodeId) -> tuple[float, float]:
        return ((n[0] + 0.5) * self.cell_width, (n[1] + 0.5) * self.cell_width)

    def reachable_free_cells(self) -> np.ndarray:
        """Free cells 8-connected to the start cell (flood fill)."""
        free = ~self.occupancy
        seen = np.zeros_like(free)
        stack = [self.cell_of(self.start)]
        seen[stack[0][1], stack[0][0]] = True
        while stack:
            x, y = stack.pop()
            for dx, dy in DIR_DELTAS:
                nx, ny = x + dx, y + dy
                if (0 <= nx < self.width and 0 <= ny < self.height
                        and free[ny, nx] and not seen[ny, nx]):
                    seen[ny, nx] = True
                    stack.append((nx, ny))
        return seen


def load_environment(text: str, cell_width: float = 0.5) -> GroundTruthGrid:
    """Parse an ASCII grid: '#' occupied, '.' free, exactly one 'S' start.
    The boundary must be fully occupied (closed world)."""
    lines = [ln for ln in text.splitlines() if ln.strip() != ""]
    if not lines:
        raise MapParseError("empty map")
    width = len(lines[0])
    starts = []
    occ = np.zeros((len(lines), width), bool)
    for r, ln in enumerate(lines):
        if len(ln) != width:
            raise MapParseError(f"row {r + 1}: ragged row, expected width {width}, got {len(ln)}")
        for c, ch in enumerate(ln):
            if ch == "#":
                occ[r, c] = True
            elif ch == "S":
                starts.append((c, r))
            elif ch != ".":
                raise MapParseError(f"row {r + 1}, col {c + 1}: invalid character {ch!r}")
    if len(starts) != 1:
        raise MapParseError(f"expected exactly one start 'S', found {len(starts)}")
    if not (occ[0].all() and occ[-1].all() and occ[:, 0].all() and occ[:, -1].all()):
        raise MapParseError("world not closed: boundary contains free cells")
    grid = GroundTruthGrid(occ, cell_width, (0.0, 0.0))
    start = (starts[0][0], starts[0][1])
    return GroundTruthGrid(occ, cell_width, grid.cell_center(start))


def load_map_file(path) -> GroundTruthGrid:
    """Read a .map file: three header lines (cols, rows, cell_width)
    followed by the ASCII grid."""
    lines = Path(path).read_text().splitlines()
    if len(lines) < 4:
        raise MapParseError(f"{path}: truncated map file")
    try:
        cols, rows, cw = int(lines[0]), int(lines[1]), float(lines[2])
    except ValueError as e:
        raise MapParseError(f"{path}: bad header: {e}") from None
    grid = load_environment("\n".join(lines[3:]), cell_width=cw)
    if grid.width != cols or grid.height != rows:
        raise MapParseError(f"{path}: header says {cols}x{rows}, grid is "
                            f"{grid.width}x{grid.height}")
    return grid


def save_map_file(grid: GroundTruthGrid, path) -> None:
    start_cell = grid.cell_of(grid.start)
    rows = []
    for r in range(grid.height):
        row = "".join("#" if grid.occupancy[r, c] else "." for c in range(grid.width))
        if r == start_cell[1]:
            row = row[:start_cell[0]] + "S" + row[start_cell[0] + 1:]
        rows.append(row)
    Path(path).write_text(
        f"{grid.width}\n{grid.height}\n{grid.cell_width}\n" + "\n".join(rows) + "\n")


def simulate_scan(pose: tuple[float, float], grid: GroundTruthGrid,
                  n_rays: int = 360, max_range: float = 12.0) -> Scan:
    cell = grid.cell_of(pose)
    if not (0 <= cell[0] < grid.width and 0 <= cell[1] < grid.height) \
            or grid.occupancy[cell[1], cell[0]]:
        raise ValueError(f"scan pose {pose} is not in free space")
    dists = scan_kernel(grid.occupancy, pose[0], pose[1], grid.cell_width,
                        n_rays, max_range)
    thetas = 2.0 * np.pi * np.arange(n_rays) / n_rays
    pts = np.column_stack([pose[0] + dists * np.cos(thetas),
                           pose[1] + dists * np.sin(thetas)])
    return Scan(origin=pose, points=pts)


def refresh_edge_risk(irm: Irm, risk_scale: float = 1.0) -> None:
    """Derive edge traversal risk from obstacle proximity: edges whose
    endpoints hug occupied cells carry risk proportional to edge length."""
    occ = (irm.risk == int(RiskClass.OCCUPIED)).astype(float)
    prox = np.zeros_like(occ)
    h, w = occ.shape
    for dx, dy in DIR_DELTAS:
        src_r = slice(max(0, dy), min(h, h + dy))
        src_c = slice(max(0, dx), min(w, w + dx))
        dst_r = slice(max(0, -dy), min(h, h - dy))
        dst_c = slice(max(0, -dx), min(w, w - dx))
        prox[dst_r, dst_c] += occ[src_r, src_c]
    prox /= 8.0
    for d, (dx, dy) in enumerate(DIR_DELTAS):
        nbr = np.zeros_like(prox)
        src_r = slice(max(0, dy), min(h, h + dy))
        src_c = slice(max(0, dx), min(w, w + dx))
        dst_r = slice(max(0, -dy), min(h, h - dy))
        dst_c = slice(max(0, -dx), min(w, w - dx))
        nbr[dst_r, dst_c] = prox[src_r, src_c]
        irm.edge_risk[:, :, d] = (risk_scale * DIR_LENGTHS[d] * irm.cell_width
                                  * 0.5 * (prox + nbr))


def sense_and_update(irm: Irm, pose: tuple[float, float],
                     grid: GroundTruthGrid, params: SensorParams,
                     map_range: float = 12.0, n_rays: int = 360,
                     coverage_model: str = "raytrace",
                     lf_mask=None, risk_scale: float = 1.0,
                     rolling: bool = True) -> Irm:
    """Integrate one sensing cycle: roll the window to the pose, mark
    ray-visible cells free and ray hits occupied, refresh edge risks, then
    run the coverage model. The low-fidelity model stamps a full disc with
    no occlusion; the default traces rays on the known risk map."""
    if rolling:
        irm = irm.recenter(pose)
    # ground-truth cell g maps to lattice cell g + off
    off_x = int(round(-irm.origin[0] / irm.cell_width))
    off_y = int(round(-irm.origin[1] / irm.cell_width))
    sense_kernel(grid.occupancy, irm.risk, off_x, off_y, pose[0], pose[1],
                 grid.cell_width, n_rays, map_range)
    refresh_edge_risk(irm, risk_scale)
    node = irm.node_at(pose)
    if coverage_model == "raytrace":
        coverage_update(irm, node, params)
    elif coverage_model == "disc":
        apply_mask(irm, node, lf_mask)
    else:
        raise ValueError(f"unknown coverage model {coverage_model!r}")
    return irm


# ---------------------------------------------------------------------------
# missions
# ---------------------------------------------------------------------------

@dataclass
class MissionOptions:
    map_range: float = 12.0       # risk-mapping lidar range, m
    scan_rays: int = 360
    risk_scale: float = 1.0
    metric_radius: float = 8.0    # covered-area metric radius, m
    decoupled_budget: float = 24.0  # viewpoint tour budget, m
    frames_every: int = 0
    frames_dir: str | None = None


@dataclass
class MissionLog:
    planner: str
    seed: int
    map_name: str = ""
    # per-step rows: (step, x, y, path_m, covered_m2, episode, fallback)
    rows: list = field(default_factory=list)
    completed: bool = False
    total_risk: float = 0.0
    total_free_m2: float = 0.0
    reachable_free_m2: float = 0.0
    episode_seconds: list = field(default_factory=list)
    trace: list = field(default_factory=list)

    CSV_HEADER = "step,x,y,path_m,covered_m2,episode,fallback"

    @property
    def final_covered_m2(self) -> float:
        return self.rows[-1][4] if self.rows else 0.0

    @property
    def final_path_m(self) -> float:
        return self.rows[-1][3] if self.rows else 0.0

    @property
    def steps(self) -> int:
        return self.rows[-1][0] if self.rows else 0

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write(self.CSV_HEADER + "\n")
            for step, x, y, path_m, cov, ep, fb in self.rows:
                f.write(f"{step},{x:.6f},{y:.6f},{path_m:.6f},{cov:.6f},"
                        f"{ep},{int(fb)}\n")

    @staticmethod
    def from_csv(path) -> "MissionLog":
        log = MissionLog(planner="?", seed=-1)
        with open(path) as f:
            header = f.readline().strip()
            if header != MissionLog.CSV_HEADER:
                raise ValueError(f"{path}: unexpected CSV header {header!r}")
            for ln in f:
                s, x, y, p, c, e, fb = ln.strip().split(",")
                log.rows.append((int(s), float(x), float(y), float(p),
                                 float(c), int(e), bool(int(fb))))
        return log


def _disc_offsets(radius_m: float, cell_width: float) -> np.ndarray:
    rad = int(math.ceil(radius_m / cell_width))
    ii = np.arange(-rad, rad + 1)
    return np.hypot(*np.meshgrid(ii, ii)) * cell_width <= radius_m


def _mix_seed(seed: int, episode: int) -> int:
    return (seed * 0x9E3779B1 + episode * 0x85EBCA77 + 1) & 0xFFFFFFFFFFFFFFFF


def run_mission(grid: GroundTruthGrid, planner: str, params: SensorParams,
                wts: RewardWeights, cfg: PlannerConfig, seed: int,
                step_limit: int, opts: MissionOptions | None = None,
                map_name: str = "") -> MissionLog:
    """Closed exploration loop: sense, plan one episode, execute up to the
    episode period, repeat. Ends at the step limit or when no frontier
    remains. Deterministic for fixed (grid, config, seed)."""
    if planner not in PLANNERS:
        raise ValueError(f"unknown planner {planner!r}, expected one of {PLANNERS}")
    opts = opts or MissionOptions()
    w = grid.cell_width
    # lattice aligned with the ground-truth grid and spanning it, so the
    # frontier bookkeeping survives the whole mission at desk scale
    irm = Irm(grid.width, grid.height, w, (0.0, 0.0))
    robot = RobotState(grid.cell_of(grid.start), 2)  # facing E
    filt = SpaciousnessFilter()
    mask_cache = MaskCache(params, w)
    lf_mask = None
    coverage_model = "raytrace"
    if planner in ("lf4", "lf8"):
        lf_mask = baselines.LfConfig(
            static_range=4.0 if planner == "lf4" else 8.0).mask(w)
        coverage_model = "disc"

    log = MissionLog(planner=planner, seed=seed, map_name=map_name,
                     total_free_m2=grid.free_area)
    log.reachable_free_m2 = float(grid.reachable_free_cells().sum()) * w * w
    disc = _disc_offsets(opts.metric_radius, w)
    rad = disc.shape[0] // 2
    visited = np.zeros_like(grid.occupancy)
    gt_free = ~grid.occupancy

    def mark(node: NodeId) -> None:
        x0, y0 = node[0] - rad, node[1] - rad
        gx0, gy0 = max(0, x0), max(0, y0)
        gx1 = min(grid.width, x0 + disc.shape[1])
        gy1 = min(grid.height, y0 + disc.shape[0])
        visited[gy0:gy1, gx0:gx1] |= disc[gy0 - y0:gy1 - y0, gx0 - x0:gx1 - x0]

    def covered_m2() -> float:
        return float((visited & gt_free).sum()) * w * w

    step = 0
    path_m = 0.0
    episode = 0
    prev = empty_sequence(robot)
    pose = irm.cell_center(robot.node)
    sense_and_update(irm, pose, grid, params, opts.map_range, opts.scan_rays,
                     coverage_model, lf_mask, opts.risk_scale, rolling=False)
    mark(robot.node)
    log.rows.append((0, pose[0], pose[1], 0.0, covered_m2(), 0, False))
    stalled = 0

    while step < step_limit and stalled < 5:
        pose = irm.cell_center(robot.node)
        scan = simulate_scan(pose, grid, opts.scan_rays, opts.map_range)
        sense_and_update(irm, pose, grid, params, opts.map_range,
                         opts.scan_rays, coverage_model, lf_mask,
                         opts.risk_scale, rolling=False)
        s = JointState(robot, irm)
        ep_seed = _mix_seed(seed, episode)
        info: dict = {"episode": episode}
        t0 = time.perf_counter()
        if planner == "adaptive":
            seq = coverage_plan(s, scan, prev, filt, cfg, params, wts,
                                mask_cache, ep_seed, info=info)
        elif planner in ("lf4", "lf8"):
            seq = baselines.lf_planner(
                s, scan, prev, cfg, baselines.LfConfig(lf_mask.r_adapt),
                params, wts, seed=ep_seed, info=info)
        else:
            seq = baselines.decoupled_planner(
                s, opts.decoupled_budget, params, wts, cfg)
        log.episode_seconds.append(time.perf_counter() - t0)
        fallback = False
        if seq.is_empty:
            seq = global_fallback(s, wts.k_rho)
            fallback = True
            if seq.is_empty:
                log.completed = True
                break
        prev = seq if not fallback else empty_sequence(robot)
        info.update(fallback=fallback, length=len(seq))
        log.trace.append(info)

        executed = 0
        for a in seq.actions[:cfg.episode_period]:
            dx, dy = action_delta(a)
            target = (robot.node[0] + dx, robot.node[1] + dy)
            if (not irm.in_bounds(target)
                    or irm.risk_class(target) != RiskClass.FREE):
                break  # world changed under the plan; replan
            edge = irm.edge(robot.node, target)
            gt_cell = grid.cell_of(irm.cell_center(target))
            assert not grid.occupancy[gt_cell[1], gt_cell[0]], \
                "planner stepped into ground-truth occupied space"
            robot = RobotState(target, a)
            step += 1
            executed += 1
            path_m += edge.distance
            log.total_risk += edge.risk
            mark(robot.node)
            x, y = irm.cell_center(robot.node)
            log.rows.append((step, x, y, path_m, covered_m2(), episode + 1,
                             fallback))
            if (opts.frames_every and opts.frames_dir
                    and step % opts.frames_every == 0):
                irm.to_ppm(Path(opts.frames_dir) / f"frame_{step:05d}.ppm")
            if step >= step_limit:
                break
        if prev.actions[:executed]:
            prev = ActionSequence(start=robot,
                                  actions=prev.actions[executed:],
                                  rewards=prev.rewards[executed:],
                                  world_path=prev.world_path[executed:])
        stalled = stalled + 1 if executed == 0 else 0
        episode += 1
    return log
