"""The coverage MDP: joint robot-world state, the 8-action lattice space,
deterministic transitions, marginal-coverage reward, and the distance-weight
calibration that makes cardinal and diagonal steps equally rewarding on a
risk-free world."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import world_model as wm
from .sensor import CoverageMask, SensorParams, apply_mask, build_coverage_mask
from .world_model import DIR_DELTAS, DIR_LENGTHS, DIR_NAMES, Irm, NodeId, RiskClass

# A heading or action is an index into the fixed N..NW direction order.
Heading = int
ActionDir = int

ACTIONS = tuple(range(8))
SQRT2 = math.sqrt(2.0)


def heading_name(h: Heading) -> str:
    return DIR_NAMES[h]


def action_delta(a: ActionDir) -> tuple[int, int]:
    return DIR_DELTAS[a]


def action_length(a: ActionDir, cell_width: float) -> float:
    return DIR_LENGTHS[a] * cell_width


def heading_change(h1: Heading, h2: Heading) -> int:
    """Magnitude of the heading change in 45-degree steps (0..4)."""
    d = abs(h1 - h2)
    return min(d, 8 - d)


@dataclass(frozen=True)
class RobotState:
    node: NodeId
    heading: Heading


@dataclass
class JointState:
    robot: RobotState
    world: Irm


@dataclass(frozen=True)
class RewardWeights:
    k_i: float = 1.0
    k_d: float = 0.0      # calibrated via distance_weight()
    k_rho: float = 2.0
    k_mu: float = 0.2
    beta_known: float = 1.0
    beta_unknown: float = 0.3
    # rotation cost per 45-degree heading-change step
    rotation_cost: tuple[float, ...] = (0.0, 0.1, 0.3, 0.6, 1.0)

    def __post_init__(self):
        if self.k_i <= 0:
            raise ValueError("k_i must be positive")
        if not self.beta_known > self.beta_unknown >= 0:
            raise ValueError("need beta_known > beta_unknown >= 0")
        rot = self.rotation_cost
        if len(rot) != 5 or rot[0] != 0.0 or any(
                b < a for a, b in zip(rot, rot[1:])):
            raise ValueError("rotation costs must start at 0 and be "
                             "non-decreasing over the five turn magnitudes")

    def rotation_array(self) -> np.ndarray:
        return np.asarray(self.rotation_cost, float)


def is_blocked(world: Irm, node: NodeId, a: ActionDir) -> bool:
    dx, dy = DIR_DELTAS[a]
    target = (node[0] + dx, node[1] + dy)
    return (not world.in_bounds(target)
            or world.risk_class(target) != RiskClass.FREE)


def transition(s: JointState, a: ActionDir) -> JointState:
    """Deterministic motion: the robot reaches the target node unless it is
    out of bounds, unknown, or occupied, in which case the move is a no-op.
    The world is untouched; rollouts compose this with apply_mask."""
    if is_blocked(s.world, s.robot.node, a):
        return s
    dx, dy = DIR_DELTAS[a]
    node = (s.robot.node[0] + dx, s.robot.node[1] + dy)
    return JointState(RobotState(node, a), s.world)


def _beta_map(world: Irm, wts: RewardWeights) -> np.ndarray:
    # known occupancy earns full weight, unknown a fraction; occupied cells
    # never earn coverage reward
    beta = np.full(world.risk.shape, wts.beta_known)
    beta[world.risk == int(RiskClass.UNKNOWN)] = wts.beta_unknown
    beta[world.risk == int(RiskClass.OCCUPIED)] = 0.0
    return beta


def marginal_coverage(s: JointState, a: ActionDir, mask: CoverageMask,
                      wts: RewardWeights = RewardWeights()) -> float:
    """Occupancy-weighted probability gain of the masked coverage update at
    the post-action robot node. Read-only; always >= 0."""
    post = transition(s, a)
    world = s.world
    rad = mask.radius_cells
    cx, cy = post.robot.node
    x0, y0 = cx - rad, cy - rad
    gx0, gy0 = max(0, x0), max(0, y0)
    gx1 = min(world.width, x0 + mask.stencil.shape[1])
    gy1 = min(world.height, y0 + mask.stencil.shape[0])
    if gx0 >= gx1 or gy0 >= gy1:
        return 0.0
    win = world.coverage[gy0:gy1, gx0:gx1]
    sten = mask.stencil[gy0 - y0:gy1 - y0, gx0 - x0:gx1 - x0]
    delta = np.maximum(sten - win, 0.0)
    beta = _beta_map(world, wts)[gy0:gy1, gx0:gx1]
    return float(np.sum(beta * delta))


def reward(s: JointState, a: ActionDir, mask: CoverageMask,
           wts: RewardWeights) -> float:
    """Weighted sum of marginal coverage and action penalties. Blocked
    actions pay the attempted distance so rollouts do not idle against
    walls for free."""
    d = action_length(a, s.world.cell_width)
    if is_blocked(s.world, s.robot.node, a):
        return -wts.k_d * d
    target = (s.robot.node[0] + DIR_DELTAS[a][0], s.robot.node[1] + DIR_DELTAS[a][1])
    rho = s.world.edge(s.robot.node, target).risk
    rot = wts.rotation_cost[heading_change(s.robot.heading, a)]
    info = marginal_coverage(s, a, mask, wts)
    return (wts.k_i * info
            - (wts.k_d * d + wts.k_rho * rho + wts.k_mu * rot))


def risk_free_state(mask: CoverageMask) -> JointState:
    """A free world whose only covered region is the robot's current sensor
    footprint, with the robot at the center."""
    side = mask.stencil.shape[0] + 5
    if side % 2 == 0:
        side += 1
    world = Irm(side, side, mask.cell_width, (0.0, 0.0))
    world.risk[:] = int(RiskClass.FREE)
    apply_mask(world, world.center_node, mask)
    return JointState(RobotState(world.center_node, 2), world)  # facing E


def distance_weight(params: SensorParams, cell_width: float, k_i: float,
                    mask: CoverageMask | None = None) -> float:
    """Distance weight that equalizes the reward of cardinal and diagonal
    steps on a risk-free world, compensating for the lattice-discretization
    mismatch in their marginal coverage."""
    if mask is None:
        mask = build_coverage_mask(params.r_max, params, cell_width)
    s0 = risk_free_state(mask)
    wts = RewardWeights(k_i=k_i)
    i_card = marginal_coverage(s0, 2, mask, wts)   # E
    i_diag = marginal_coverage(s0, 3, mask, wts)   # SE
    return k_i * (i_diag - i_card) / (cell_width * (SQRT2 - 1.0))
