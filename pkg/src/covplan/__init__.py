"""Adaptive-range coverage path planning and exploration simulation."""

from .world_model import Irm, IrmEdge, NodeId, RiskClass, new_irm
from .sensor import (CoverageMask, MaskCache, Scan, SensorParams,
                     SpaciousnessFilter, adaptive_range, apply_mask,
                     binary_mask, build_coverage_mask, coverage_probability,
                     coverage_update, spaciousness_update)
from .mdp import (ActionDir, Heading, JointState, RewardWeights, RobotState,
                  distance_weight, marginal_coverage, reward, transition)
from .planner import (ActionSequence, PlannerConfig, PlanTree, coverage_plan,
                      extract_action_sequence, global_fallback, mcts,
                      root_node)
from .baselines import LfConfig, decoupled_planner, lf_planner, select_viewpoints
from .simulator import (GroundTruthGrid, MapParseError, MissionLog,
                        MissionOptions, load_environment, load_map_file,
                        run_mission, save_map_file, simulate_scan)
from .config import ConfigError, ExperimentConfig, parse_config, serialize_config

__all__ = [name for name in dir() if not name.startswith("_")]
