"""Providers, consumers and everything that mutates them between rounds."""
from __future__ import annotations

import enum
import itertools
import math
import types
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Dict, Generic, List, NamedTuple, Optional, Sequence, TypeVar

import numpy as np

from .world import Location, distance, random_location

if TYPE_CHECKING:
    from .fire_model import Rating

UG_MIN = -10.0
UG_MAX = 10.0
INTERMITTENT_RANGE = (-5.0, 5.0)
ACTIVITY_RANGE = (0.25, 1.0)


class PerformanceLevel(enum.IntEnum):
    """Performance levels; the integer value is the utility gained."""

    WORST = -10
    BAD = -5
    OK = 0
    GOOD = 5
    PERFECT = 10

    @property
    def utility(self) -> float:
        return float(self.value)


class ProfileKind(enum.Enum):
    GOOD = 'good'
    ORDINARY = 'ordinary'
    BAD = 'bad'
    INTERMITTENT = 'intermittent'


class ConsumerGroup(enum.Enum):
    NO_TRUST = 'notrust'
    FIRE = 'fire'
    CA = 'ca'


GROUP_ORDER = (ConsumerGroup.NO_TRUST, ConsumerGroup.FIRE, ConsumerGroup.CA)


@dataclass(frozen=True)
class ProviderProfile:
    kind: ProfileKind
    mu_range: Optional[tuple[float, float]]
    sigma: Optional[float]


PROFILES: Dict[ProfileKind, ProviderProfile] = {
    ProfileKind.GOOD: ProviderProfile(
        ProfileKind.GOOD, (PerformanceLevel.GOOD.utility, PerformanceLevel.PERFECT.utility), 1.0
    ),
    ProfileKind.ORDINARY: ProviderProfile(
        ProfileKind.ORDINARY, (PerformanceLevel.OK.utility, PerformanceLevel.GOOD.utility), 2.0
    ),
    ProfileKind.BAD: ProviderProfile(
        ProfileKind.BAD, (PerformanceLevel.WORST.utility, PerformanceLevel.OK.utility), 2.0
    ),
    ProfileKind.INTERMITTENT: ProviderProfile(ProfileKind.INTERMITTENT, None, None),
}


@dataclass(eq=False)
class Provider:
    id: int
    loc: Location
    radius_of_operation: float
    profile: ProviderProfile
    mu: Optional[float] = None
    certified_ratings: List['Rating'] = field(default_factory=list)

    @property
    def kind(self) -> ProfileKind:
        return self.profile.kind


@dataclass(eq=False)
class Consumer:
    id: int
    loc: Location
    radius_of_operation: float
    group: ConsumerGroup
    activity: float
    interaction_count: int = 0


def _sample_mu(profile: ProviderProfile, rng: np.random.Generator) -> Optional[float]:
    if profile.mu_range is None:
        return None
    low, high = profile.mu_range
    return float(rng.uniform(low, high))


class AgentFactory:
    """Creates agents with ids unique for the lifetime of one simulation run."""

    def __init__(self, radius_of_operation: float = 0.5) -> None:
        self.radius_of_operation = radius_of_operation
        self._ids = itertools.count(1)

    def spawn_provider(self, kind: ProfileKind, rng: np.random.Generator) -> Provider:
        profile = PROFILES[kind]
        loc = random_location(rng)
        return Provider(
            id=next(self._ids),
            loc=loc,
            radius_of_operation=self.radius_of_operation,
            profile=profile,
            mu=_sample_mu(profile, rng),
        )

    def spawn_consumer(self, group: ConsumerGroup, rng: np.random.Generator) -> Consumer:
        loc = random_location(rng)
        low, high = ACTIVITY_RANGE
        return Consumer(
            id=next(self._ids),
            loc=loc,
            radius_of_operation=self.radius_of_operation,
            group=group,
            activity=float(rng.uniform(low, high)),
        )


def clamp_ug(value: float) -> float:
    return min(max(value, UG_MIN), UG_MAX)


def sample_performance(
    provider: Provider,
    consumer_loc: Location,
    rng: np.random.Generator,
    degradation_slope: float = 10.0,
) -> float:
    """Utility a consumer at ``consumer_loc`` gets from one interaction with ``provider``."""
    if provider.mu is None:
        low, high = INTERMITTENT_RANGE
        value = float(rng.uniform(low, high))
    else:
        value = float(rng.normal(provider.mu, provider.profile.sigma))
    gap = distance(provider.loc, consumer_loc) - provider.radius_of_operation
    if gap > 0.0:
        value -= degradation_slope * gap
    return clamp_ug(value)


def drift_performance(provider: Provider, magnitude: float, rng: np.random.Generator) -> Provider:
    # Intermittent providers have no mean to move.
    if provider.mu is None:
        return provider
    provider.mu = clamp_ug(provider.mu + float(rng.uniform(-magnitude, magnitude)))
    return provider


def switch_profile(provider: Provider, rng: np.random.Generator) -> Provider:
    others = [kind for kind in ProfileKind if kind is not provider.kind]
    new_kind = others[int(rng.integers(len(others)))]
    provider.profile = PROFILES[new_kind]
    provider.mu = _sample_mu(provider.profile, rng)
    return provider


A = TypeVar('A')
K = TypeVar('K')


class Replacement(NamedTuple):
    agents: List[A]
    departed: List[A]
    arrived: List[A]

    # Python 3.10 rejects NamedTuple + Generic; keep Replacement[A] subscriptable.
    __class_getitem__ = classmethod(types.GenericAlias)


def replacement_limit(p_limit: float, size: int) -> int:
    # Tolerance keeps products such as 0.1 * 100 from flooring to 9.
    return int(math.floor(p_limit * size + 1e-9))


def replace_population(
    agents: Sequence[A],
    p_limit: float,
    spawn: Callable[[K], A],
    kind_of: Callable[[A], K],
    rng: np.random.Generator,
) -> Replacement[A]:
    """Swap up to ``floor(p_limit * len(agents))`` random agents for newcomers of the same kind.

    Newcomers take the departed agents' slots, so list order and per-kind counts are kept.
    """
    limit = replacement_limit(p_limit, len(agents))
    survivors = list(agents)
    if limit <= 0:
        return Replacement(survivors, [], [])
    count = int(rng.integers(0, limit + 1))
    if count == 0:
        return Replacement(survivors, [], [])
    slots = sorted(int(i) for i in rng.choice(len(agents), size=count, replace=False))
    departed: List[A] = []
    arrived: List[A] = []
    for slot in slots:
        leaving = survivors[slot]
        newcomer = spawn(kind_of(leaving))
        departed.append(leaving)
        arrived.append(newcomer)
        survivors[slot] = newcomer
    return Replacement(survivors, departed, arrived)
