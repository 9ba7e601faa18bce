"""Experiment configuration: frozen dataclasses plus a flat ``key=value`` text format."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping

from .ca_model import CAParams
from .fire_model import FireParams
from .population import GROUP_ORDER, ConsumerGroup, ProfileKind

SECTIONS = ('population', 'dynamics', 'ca', 'fire', 'world')


class ConfigError(ValueError):
    """Raised for configuration values the testbed cannot run with."""


@dataclass(frozen=True)
class PopulationCounts:
    good: int = 10
    ordinary: int = 40
    intermittent: int = 5
    bad: int = 45
    consumers: int = 500

    @property
    def providers(self) -> int:
        return self.good + self.ordinary + self.intermittent + self.bad

    def provider_kinds(self) -> List[ProfileKind]:
        return (
            [ProfileKind.GOOD] * self.good
            + [ProfileKind.ORDINARY] * self.ordinary
            + [ProfileKind.INTERMITTENT] * self.intermittent
            + [ProfileKind.BAD] * self.bad
        )

    def consumer_groups(self) -> List[ConsumerGroup]:
        """Even split over the three groups; earlier groups take the remainder."""
        base, extra = divmod(self.consumers, len(GROUP_ORDER))
        groups: List[ConsumerGroup] = []
        for index, group in enumerate(GROUP_ORDER):
            groups.extend([group] * (base + (1 if index < extra else 0)))
        return groups


@dataclass(frozen=True)
class DynamicsConfig:
    p_ppc: float = 0.0
    p_cpc: float = 0.0
    p_plc: float = 0.0
    p_clc: float = 0.0
    delta_phi_max: float = 0.0
    p_mu_c: float = 0.0
    m: float = 0.0
    p_profile_switch: float = 0.0
    # Stage barrier between request waves; recorded only, it has no effect on the rounds.
    wt_ms: int = 1000

    def active(self) -> Dict[str, float]:
        return {
            f.name: getattr(self, f.name)
            for f in dataclasses.fields(self)
            if f.name != 'wt_ms' and getattr(self, f.name)
        }


@dataclass(frozen=True)
class WorldParams:
    radius_of_operation: float = 0.5
    degradation_slope: float = 10.0


@dataclass(frozen=True)
class ExperimentConfig:
    experiment_id: int = 1
    rounds: int = 500
    nisr: int = 30
    base_seed: int = 0
    population: PopulationCounts = field(default_factory=PopulationCounts)
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    ca: CAParams = field(default_factory=CAParams)
    fire: FireParams = field(default_factory=FireParams)
    world: WorldParams = field(default_factory=WorldParams)

    def __post_init__(self) -> None:
        problems = validate(self)
        if problems:
            raise ConfigError('; '.join(problems))

    def seeds(self) -> List[int]:
        return [self.base_seed + index for index in range(self.nisr)]


def _probability(name: str, value: float, problems: List[str]) -> None:
    if not 0.0 <= value <= 1.0:
        problems.append(f'{name} must be in [0, 1] (got {value})')


def validate(config: ExperimentConfig) -> List[str]:
    problems: List[str] = []
    if config.rounds < 0:
        problems.append('rounds must be >= 0')
    if config.nisr < 1:
        problems.append('nisr must be >= 1')
    if config.base_seed < 0:
        problems.append('base_seed must be >= 0')

    counts = config.population
    for name in ('good', 'ordinary', 'intermittent', 'bad'):
        if getattr(counts, name) < 0:
            problems.append(f'population.{name} must be >= 0')
    if counts.providers <= 0:
        problems.append('population needs at least one provider')
    if counts.consumers <= 0:
        problems.append('population.consumers must be > 0')

    dynamics = config.dynamics
    for name in ('p_ppc', 'p_cpc', 'p_plc', 'p_clc', 'p_mu_c', 'p_profile_switch'):
        _probability(f'dynamics.{name}', getattr(dynamics, name), problems)
    if dynamics.delta_phi_max < 0:
        problems.append('dynamics.delta_phi_max must be >= 0')
    if dynamics.m < 0:
        problems.append('dynamics.m must be >= 0')

    _probability('ca.threshold', config.ca.threshold, problems)
    if config.ca.alpha <= 0 or config.ca.beta <= 0:
        problems.append('ca.alpha and ca.beta must be > 0')
    if config.ca.wave_capacity < 0:
        problems.append('ca.wave_capacity must be >= 0')

    fire = config.fire
    if fire.history_size < 1:
        problems.append('fire.history_size must be >= 1')
    if fire.recency_scaling <= 0:
        problems.append('fire.recency_scaling must be > 0')
    if fire.branching_factor < 1:
        problems.append('fire.branching_factor must be >= 1')
    if fire.referral_length < 0:
        problems.append('fire.referral_length must be >= 0')
    for name in ('w_interaction', 'w_role', 'w_witness', 'w_certified'):
        if getattr(fire, name) < 0:
            problems.append(f'fire.{name} must be >= 0')
    for name in ('gamma_interaction', 'gamma_role', 'gamma_witness', 'gamma_certified'):
        if getattr(fire, name) <= 0:
            problems.append(f'fire.{name} must be > 0')
    _probability('fire.exploration', fire.exploration, problems)
    if fire.certified_capacity < 1:
        problems.append('fire.certified_capacity must be >= 1')

    if config.world.radius_of_operation < 0:
        problems.append('world.radius_of_operation must be >= 0')
    if config.world.degradation_slope < 0:
        problems.append('world.degradation_slope must be >= 0')
    return problems


# ----- flat key=value format -----
def config_to_dict(config: ExperimentConfig) -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if f.name in SECTIONS:
            for inner in dataclasses.fields(value):
                flat[f'{f.name}.{inner.name}'] = getattr(value, inner.name)
        else:
            flat[f.name] = value
    return flat


def config_to_text(config: ExperimentConfig) -> str:
    return ''.join(f'{key}={value!r}\n' for key, value in config_to_dict(config).items())


def _coerce(key: str, raw: Any, current: Any) -> Any:
    if isinstance(raw, str):
        raw = raw.strip()
    try:
        if isinstance(current, bool):
            return str(raw).lower() in ('1', 'true', 'yes')
        if isinstance(current, int):
            if isinstance(raw, float) and not raw.is_integer():
                raise ValueError(raw)
            return int(raw) if not isinstance(raw, str) else int(raw, 10)
        if isinstance(current, float):
            return float(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f'{key}: invalid value {raw!r}') from exc
    return raw


def with_overrides(config: ExperimentConfig, overrides: Mapping[str, Any]) -> ExperimentConfig:
    """Apply flat (possibly dotted) overrides; unknown keys are rejected."""
    current = config_to_dict(config)
    top: Dict[str, Any] = {}
    nested: Dict[str, Dict[str, Any]] = {}
    for key, raw in overrides.items():
        if key not in current:
            raise ConfigError(f'unknown configuration key {key!r}')
        value = _coerce(key, raw, current[key])
        if '.' in key:
            section, name = key.split('.', 1)
            nested.setdefault(section, {})[name] = value
        else:
            top[key] = value
    for section, values in nested.items():
        top[section] = dataclasses.replace(getattr(config, section), **values)
    return dataclasses.replace(config, **top)


def parse_config_text(text: str) -> Dict[str, str]:
    values: Dict[str, str] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f'line {number}: expected key=value')
        key, value = line.split('=', 1)
        values[key.strip()] = value.strip()
    return values


def config_from_text(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    return with_overrides(base or ExperimentConfig(), parse_config_text(text))
