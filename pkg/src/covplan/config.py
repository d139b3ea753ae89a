"""INI experiment configuration: typed sections mapping 1:1 onto the
sensor, reward, planner, and mission parameter groups."""
from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields, replace

from .mdp import RewardWeights
from .planner import PlannerConfig
from .sensor import SensorParams
from .simulator import MissionOptions


class ConfigError(ValueError):
    pass


@dataclass
class MissionSpec:
    map: str = "maze"          # builtin name or path to a .map file
    planner: str = "adaptive"
    seeds: tuple = (0,)
    step_limit: int = 400
    cell_width: float = 0.5
    maze_seed: int = 0


@dataclass
class ExperimentConfig:
    sensor: SensorParams = field(default_factory=SensorParams)
    rewards: RewardWeights = field(default_factory=RewardWeights)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    mission: MissionSpec = field(default_factory=MissionSpec)
    options: MissionOptions = field(default_factory=MissionOptions)

    _SECTIONS = ("sensor", "rewards", "planner", "mission", "options")


def _parse_value(raw: str, like):
    if isinstance(like, bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"expected boolean, got {raw!r}")
    if isinstance(like, int):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    if isinstance(like, tuple):
        parts = [p for p in raw.replace(",", " ").split() if p]
        elem = like[0] if like else 0.0
        return tuple(type(elem)(p) for p in parts)
    if like is None:
        return raw or None
    return raw


def _format_value(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(str(x) for x in v)
    return "" if v is None else str(v)


def parse_config(text: str) -> ExperimentConfig:
    """Parse INI text. Unknown sections or keys are errors, not typos to
    silently ignore."""
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(str(e)) from None
    cfg = ExperimentConfig()
    for section in cp.sections():
        if section not in ExperimentConfig._SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        group = getattr(cfg, section)
        valid = {f.name: getattr(group, f.name) for f in fields(group)}
        updates = {}
        for key, raw in cp[section].items():
            if key not in valid:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            try:
                updates[key] = _parse_value(raw, valid[key])
            except (TypeError, ValueError) as e:
                raise ConfigError(f"[{section}] {key}: {e}") from None
        try:
            setattr(cfg, section, replace(group, **updates))
        except ValueError as e:
            raise ConfigError(f"[{section}]: {e}") from None
    return cfg


def apply_overrides(cfg: ExperimentConfig, pairs: list[str]) -> ExperimentConfig:
    """Apply ``section.key=value`` overrides from the command line."""
    for pair in pairs:
        if "=" not in pair or "." not in pair.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {pair!r}")
        dotted, raw = pair.split("=", 1)
        section, key = dotted.split(".", 1)
        if section not in ExperimentConfig._SECTIONS:
            raise ConfigError(f"unknown config section {section!r}")
        group = getattr(cfg, section)
        valid = {f.name: getattr(group, f.name) for f in fields(group)}
        if key not in valid:
            raise ConfigError(f"unknown key {key!r} in section [{section}]")
        try:
            setattr(cfg, section,
                    replace(group, **{key: _parse_value(raw, valid[key])}))
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{dotted}: {e}") from None
    return cfg


def serialize_config(cfg: ExperimentConfig) -> str:
    cp = configparser.ConfigParser()
    for section in ExperimentConfig._SECTIONS:
        group = getattr(cfg, section)
        cp[section] = {f.name: _format_value(getattr(group, f.name))
                       for f in fields(group)}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
