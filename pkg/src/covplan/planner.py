"""Receding-horizon MCTS coverage planner: episode pipeline, root
reconciliation, tree search over masked rollouts, reward-thresholded action
extraction, and the nearest-frontier global fallback."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._kernels import mcts_kernel
from .mdp import (ActionDir, JointState, RewardWeights, RobotState,
                  action_delta, action_length, distance_weight)
from .sensor import (CoverageMask, MaskCache, Scan, SensorParams,
                     SpaciousnessFilter, adaptive_range, apply_mask)
from .world_model import DIR_DELTAS, DIR_LENGTHS, Irm, NodeId, RiskClass


@dataclass
class PlannerConfig:
    discount: float = 0.95
    max_depth: int = 15             # path/action budget per episode
    max_simulations: int = 2000
    ucb_c: float = 1.4
    reward_floor: float = 0.05      # one-step reward lower bound for extraction
    rho_path_max: float = 1.0       # root reconciliation risk budget
    d_path_max: float = 4.0         # root reconciliation distance budget, m
    episode_period: int = 3         # actions executed per episode
    range_scale: float = 2.0        # spaciousness-to-range scaling alpha

    def __post_init__(self):
        if self.max_depth < 1 or self.max_simulations < 1:
            raise ValueError("max_depth and max_simulations must be >= 1")
        if not 0 < self.discount <= 1:
            raise ValueError("discount must be in (0, 1]")


@dataclass
class ActionSequence:
    """Committed plan, executable from ``start``. ``world_path`` holds the
    world coordinates of every node along it (including the start node) so
    the next episode can reconcile its root after the lattice rolls."""
    start: RobotState
    actions: list[ActionDir] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    world_path: list[tuple[float, float]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def is_empty(self) -> bool:
        return not self.actions


def empty_sequence(robot: RobotState) -> ActionSequence:
    return ActionSequence(start=robot)


@dataclass
class PlanTree:
    """MCTS arena: per (node, action) visit counts, mean discounted returns,
    and deterministic one-step rewards."""
    root: RobotState
    child: np.ndarray
    n_sa: np.ndarray
    q_sa: np.ndarray
    r_sa: np.ndarray
    node_count: int


def mcts(s: JointState, mask: CoverageMask, cfg: PlannerConfig,
         wts: RewardWeights, seed: int = 0) -> PlanTree:
    """Build the lookahead tree with UCT. Rollout coverage starts from the
    caller's map plus the mask applied at the root (the robot has already
    observed from there), and evolves only through masked updates; the
    caller's world is never mutated."""
    world = s.world
    cov_root = world.coverage.copy()
    tmp = world.copy()
    tmp.coverage = cov_root
    apply_mask(tmp, s.robot.node, mask)
    child, n_sa, q_sa, r_sa, count = mcts_kernel(
        world.risk, world.edge_risk, cov_root, np.asarray(mask.stencil),
        s.robot.node[0], s.robot.node[1], s.robot.heading,
        cfg.max_simulations, cfg.max_depth, cfg.discount, cfg.ucb_c,
        world.cell_width, wts.k_i, wts.k_d, wts.k_rho, wts.k_mu,
        wts.rotation_array(), wts.beta_known, wts.beta_unknown,
        np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    return PlanTree(s.robot, child, n_sa, q_sa, r_sa, count)


def extract_action_sequence(tree: PlanTree, cfg: PlannerConfig,
                            world: Irm | None = None) -> ActionSequence:
    """Greedy max-Q walk from the root, truncated at the first step whose
    one-step reward does not clear the floor. May be empty, which hands
    control to the global fallback."""
    seq = ActionSequence(start=tree.root)
    node = 0
    pos = tree.root.node
    if world is not None:
        seq.world_path.append(world.cell_center(pos))
    for _ in range(cfg.max_depth):
        visited = tree.n_sa[node] > 0
        if not visited.any():
            break
        q = np.where(visited, tree.q_sa[node], -np.inf)
        a = int(np.argmax(q))  # ties go to the lowest action index
        r = float(tree.r_sa[node, a])
        if r <= cfg.reward_floor:
            break
        dx, dy = action_delta(a)
        pos = (pos[0] + dx, pos[1] + dy)
        seq.actions.append(a)
        seq.rewards.append(r)
        if world is not None:
            seq.world_path.append(world.cell_center(pos))
        nxt = int(tree.child[node, a])
        if nxt < 0:
            break
        node = nxt
    return seq


def _reconcile(s: JointState, prev: ActionSequence,
               cfg: PlannerConfig) -> tuple[RobotState, int, int]:
    """Locate the reconciled root on the previous path. Returns the root
    state plus the path indices of the closest node and the root."""
    robot = s.robot
    if prev.is_empty or not prev.world_path:
        return robot, 0, 0
    world = s.world
    here = world.cell_center(robot.node)
    d2 = [(p[0] - here[0]) ** 2 + (p[1] - here[1]) ** 2 for p in prev.world_path]
    i_q = int(np.argmin(d2))
    rho_path = 0.0
    d_path = 0.0
    i_root = i_q
    heading = robot.heading
    for i in range(i_q, len(prev.actions)):
        a = prev.actions[i]
        n_i = world.node_at(prev.world_path[i])
        n_j = world.node_at(prev.world_path[i + 1])
        if not (world.in_bounds(n_i) and world.in_bounds(n_j)):
            break
        d_ij = action_length(a, world.cell_width)
        rho_ij = world.edge(n_i, n_j).risk
        rho_path += rho_ij / d_ij
        d_path += d_ij
        if rho_path > cfg.rho_path_max or d_path > cfg.d_path_max:
            break
        i_root = i + 1
        heading = a
    if i_root == i_q:
        heading = robot.heading
    node = world.node_at(prev.world_path[i_root])
    return RobotState(node, heading), i_q, i_root


def root_node(s: JointState, prev: ActionSequence,
              cfg: PlannerConfig) -> RobotState:
    """Place the new search root part-way along the previously committed
    path, bounded by the normalized-risk and distance budgets."""
    return _reconcile(s, prev, cfg)[0]


def coverage_plan(s: JointState, scan: Scan, prev: ActionSequence,
                  filt: SpaciousnessFilter, cfg: PlannerConfig,
                  params: SensorParams, wts: RewardWeights,
                  mask_cache: MaskCache | None = None, seed: int = 0,
                  mask_override: CoverageMask | None = None,
                  info: dict | None = None) -> ActionSequence:
    """One planning episode: spaciousness -> adaptive range -> mask ->
    root reconciliation -> MCTS -> extraction. The returned sequence is
    executable from the robot's current node (any reconciliation prefix from
    the previous plan is prepended). Empty means fallback handoff."""
    world = s.world
    r_spac = filt.update(scan)
    if mask_override is not None:
        mask = mask_override
        r_adapt = mask.r_adapt
    else:
        r_adapt = adaptive_range(r_spac, cfg.range_scale, params.r_max)
        if mask_cache is None:
            mask_cache = MaskCache(params, world.cell_width)
        mask = mask_cache.get(r_adapt)
    root, i_q, i_root = _reconcile(s, prev, cfg)
    k_d = _calibrated_distance_weight(params, world.cell_width, wts, mask)
    wts_cal = replace(wts, k_d=k_d)
    tree = mcts(JointState(root, world), mask, cfg, wts_cal, seed)
    tail = extract_action_sequence(tree, cfg, world)
    seq = ActionSequence(start=s.robot)
    seq.world_path.append(world.cell_center(s.robot.node))
    for i in range(i_q, i_root):
        seq.actions.append(prev.actions[i])
        seq.rewards.append(prev.rewards[i])
        seq.world_path.append(prev.world_path[i + 1])
    seq.actions.extend(tail.actions)
    seq.rewards.extend(tail.rewards)
    seq.world_path.extend(tail.world_path[1:])
    if info is not None:
        info.update(r_spac=r_spac, r_adapt=r_adapt,
                    root=list(root.node), simulations=cfg.max_simulations,
                    rewards=[round(r, 6) for r in seq.rewards],
                    extracted=len(tail.actions))
    return seq


_KD_CACHE: dict[tuple, float] = {}


def _calibrated_distance_weight(params: SensorParams, cell_width: float,
                                wts: RewardWeights, mask: CoverageMask) -> float:
    key = (mask.kind, mask.r_adapt, cell_width, wts.k_i, wts.beta_known,
           params.r0, params.k, params.n_rays)
    if key not in _KD_CACHE:
        _KD_CACHE[key] = (wts.beta_known
                          * distance_weight(params, cell_width, wts.k_i, mask))
    return _KD_CACHE[key]


def _shift_or(mask: np.ndarray, deltas) -> np.ndarray:
    out = np.zeros_like(mask)
    h, w = mask.shape
    for dx, dy in deltas:
        src_r = slice(max(0, dy), min(h, h + dy))
        src_c = slice(max(0, dx), min(w, w + dx))
        dst_r = slice(max(0, -dy), min(h, h - dy))
        dst_c = slice(max(0, -dx), min(w, w - dx))
        out[dst_r, dst_c] |= mask[src_r, src_c]
    return out


def frontier_map(world: Irm, threshold: float = 0.5) -> np.ndarray:
    """Exploration frontiers: free nodes with coverage below the threshold
    that touch unknown space (8-connected), plus free nodes sharing an edge
    with unknown space (4-connected) whose coverage is not yet complete
    (p_c < 1). The second set matters at corridor bends, where the corner
    cell gets covered from a distance while the space behind it is still
    unmapped; without it the mission would declare completion with whole
    branches unexplored. A sensing model that saturates coverage at exactly
    1 (the fixed-disc one) is taken at its word and stops early there."""
    unknown = world.risk == int(RiskClass.UNKNOWN)
    free = world.risk == int(RiskClass.FREE)
    near8 = _shift_or(unknown, DIR_DELTAS)
    near4 = _shift_or(unknown, ((0, -1), (1, 0), (0, 1), (-1, 0)))
    return free & ((near8 & (world.coverage < threshold))
                   | (near4 & (world.coverage < 1.0)))


def shortest_risk_path(world: Irm, start: NodeId, goal_mask: np.ndarray,
                       k_rho: float = 2.0) -> list[ActionDir] | None:
    """Dijkstra over free nodes minimizing distance plus weighted edge risk,
    to the nearest node flagged in ``goal_mask``. Equal-cost goals break
    ties toward the smaller node id. None when unreachable."""
    free = world.risk == int(RiskClass.FREE)
    best = np.full((world.height, world.width), np.inf)
    came: dict[NodeId, tuple[NodeId, int]] = {}
    best[start[1], start[0]] = 0.0
    heap: list[tuple[float, NodeId]] = [(0.0, start)]
    goal = None
    while heap:
        cost, node = heapq.heappop(heap)
        if cost > best[node[1], node[0]]:
            continue
        if goal_mask[node[1], node[0]]:
            goal = node
            break
        for a in range(8):
            dx, dy = DIR_DELTAS[a]
            nxt = (node[0] + dx, node[1] + dy)
            if not world.in_bounds(nxt) or not free[nxt[1], nxt[0]]:
                continue
            step = (DIR_LENGTHS[a] * world.cell_width
                    + k_rho * world.edge_risk[node[1], node[0], a])
            nc = cost + step
            if nc < best[nxt[1], nxt[0]]:
                best[nxt[1], nxt[0]] = nc
                came[nxt] = (node, a)
                heapq.heappush(heap, (nc, nxt))
    if goal is None:
        return None
    actions: list[int] = []
    node = goal
    while node != start:
        node, a = came[node]
        actions.append(a)
    actions.reverse()
    return actions


def _sequence_from_actions(world: Irm, robot: RobotState,
                           actions: list[ActionDir]) -> ActionSequence:
    seq = ActionSequence(start=robot)
    pos = robot.node
    seq.world_path.append(world.cell_center(pos))
    for a in actions:
        dx, dy = action_delta(a)
        pos = (pos[0] + dx, pos[1] + dy)
        seq.actions.append(a)
        seq.rewards.append(0.0)
        seq.world_path.append(world.cell_center(pos))
    return seq


def global_fallback(s: JointState, k_rho: float = 2.0) -> ActionSequence:
    """Shortest safe path to the nearest frontier (free, uncovered, touching
    unknown space). Empty when no frontier remains, which ends the mission."""
    world = s.world
    frontiers = frontier_map(world)
    # the node we stand on is already being sensed; don't route to it
    frontiers[s.robot.node[1], s.robot.node[0]] = False
    if not frontiers.any():
        return empty_sequence(s.robot)
    actions = shortest_risk_path(world, s.robot.node, frontiers, k_rho)
    if not actions:
        return empty_sequence(s.robot)
    return _sequence_from_actions(world, s.robot, actions)
