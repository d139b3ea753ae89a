"""Reference planners to compare against the adaptive one: fixed-range
variants of the same search, and a decoupled viewpoint-selection + touring
planner."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .mdp import JointState, RewardWeights, RobotState
from .planner import (ActionSequence, PlannerConfig, _sequence_from_actions,
                      coverage_plan, empty_sequence, shortest_risk_path)
from .sensor import (CoverageMask, Scan, SensorParams, SpaciousnessFilter,
                     binary_mask, coverage_update)
from .world_model import Irm, NodeId, RiskClass


@dataclass(frozen=True)
class LfConfig:
    """Low-fidelity sensing model: full coverage inside a fixed disc,
    nothing outside, no occlusion."""
    static_range: float = 8.0

    def __post_init__(self):
        if self.static_range <= 0:
            raise ValueError(
                f"static range must be positive, got {self.static_range}")

    def mask(self, cell_width: float) -> CoverageMask:
        return binary_mask(self.static_range, cell_width)


def lf_planner(s: JointState, scan: Scan, prev: ActionSequence,
               cfg: PlannerConfig, lf: LfConfig, params: SensorParams,
               wts: RewardWeights, seed: int = 0,
               info: dict | None = None) -> ActionSequence:
    """Same receding-horizon search as the adaptive planner, but rewards are
    computed under the fixed-disc sensing model instead of the range-adapted
    probabilistic one."""
    return coverage_plan(s, scan, prev, SpaciousnessFilter(), cfg, params,
                         wts, seed=seed,
                         mask_override=lf.mask(s.world.cell_width),
                         info=info)


# ---------------------------------------------------------------------------
# decoupled viewpoint planner
# ---------------------------------------------------------------------------

def _raytraced_gain(world: Irm, cov: np.ndarray, node: NodeId,
                    params: SensorParams) -> float:
    """Marginal coverage (free cells only) of sensing from ``node``,
    evaluated by the full occlusion-aware model on scratch coverage."""
    probe = world.copy()
    probe.coverage[:] = cov
    coverage_update(probe, node, params)
    free = world.risk == int(RiskClass.FREE)
    return float((probe.coverage - cov)[free].sum())


def select_viewpoints(world: Irm, start: NodeId, params: SensorParams,
                      budget: float, gain_floor: float = 0.5,
                      stride: int = 2, max_viewpoints: int = 12
                      ) -> list[tuple[NodeId, float]]:
    """Greedy viewpoint selection over a strided grid of free nodes. Gains
    are re-evaluated lazily (the classic priority-queue trick) since coverage
    gain is submodular. Stops at the gain floor, the travel budget, or the
    viewpoint cap."""
    free = world.risk == int(RiskClass.FREE)
    cand = [(x, y) for y in range(0, world.height, stride)
            for x in range(0, world.width, stride) if free[y, x]]
    cov = world.coverage.copy()
    # upper bounds, stale after each pick; re-evaluate the top lazily
    heap = [(-_raytraced_gain(world, cov, n, params), n) for n in cand]
    heapq.heapify(heap)
    picks: list[tuple[NodeId, float]] = []
    spent = 0.0
    while heap and len(picks) < max_viewpoints:
        neg, n = heapq.heappop(heap)
        gain = _raytraced_gain(world, cov, n, params)
        if heap and gain < -heap[0][0]:
            heapq.heappush(heap, (-gain, n))
            continue
        if gain <= gain_floor:
            break
        anchor = picks[-1][0] if picks else start
        leg = math.hypot(n[0] - anchor[0], n[1] - anchor[1]) * world.cell_width
        if spent + leg > budget:
            continue
        spent += leg
        picks.append((n, gain))
        probe = world.copy()
        probe.coverage[:] = cov
        coverage_update(probe, n, params)
        cov = probe.coverage
    return picks


def _tour_order(start: NodeId, nodes: list[NodeId]) -> list[NodeId]:
    """Nearest-neighbour tour from the start, improved by 2-opt."""
    rem = list(nodes)
    order: list[NodeId] = []
    cur = start
    while rem:
        nxt = min(rem, key=lambda n: (math.hypot(n[0] - cur[0], n[1] - cur[1]),
                                      n))
        rem.remove(nxt)
        order.append(nxt)
        cur = nxt

    def leg(a: NodeId, b: NodeId) -> float:
        return math.hypot(a[0] - b[0], a[1] - b[1])

    def tour_len(seq: list[NodeId]) -> float:
        pts = [start] + seq
        return sum(leg(pts[i], pts[i + 1]) for i in range(len(seq)))

    improved = True
    while improved:
        improved = False
        for i in range(len(order) - 1):
            for j in range(i + 1, len(order)):
                cand = order[:i] + order[i:j + 1][::-1] + order[j + 1:]
                if tour_len(cand) + 1e-12 < tour_len(order):
                    order = cand
                    improved = True
    return order


def decoupled_planner(s: JointState, budget: float, params: SensorParams,
                      wts: RewardWeights, cfg: PlannerConfig) -> ActionSequence:
    """Two-stage baseline: pick informative viewpoints first, then route
    through them with risk-weighted shortest paths. Unlike the unified
    search, path risk plays no part in choosing the viewpoints."""
    world = s.world
    picks = select_viewpoints(world, s.robot.node, params, budget,
                              gain_floor=cfg.reward_floor / max(wts.k_i, 1e-12))
    if not picks:
        return empty_sequence(s.robot)
    order = _tour_order(s.robot.node, [n for n, _ in picks])
    actions = []
    cur = s.robot.node
    for goal in order:
        goal_mask = np.zeros((world.height, world.width), bool)
        goal_mask[goal[1], goal[0]] = True
        leg = shortest_risk_path(world, cur, goal_mask, wts.k_rho)
        if leg is None:
            continue
        actions.extend(leg)
        cur = goal
    if not actions:
        return empty_sequence(s.robot)
    return _sequence_from_actions(world, s.robot, actions)
