"""Trustor-side trust and reputation.

Four sources of evidence are combined into one trust value per provider:
interaction trust (own ratings), witness reputation (ratings held by consumers reached
through a bounded referral search), role-based trust (a static rule table) and
certified reputation (ratings the provider keeps about itself and shows on demand).
Each source yields a recency-weighted mean rating and a reliability in [0, 1].
"""
from __future__ import annotations

import enum
import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Deque, Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from .population import Provider

logger = logging.getLogger(__name__)

# Ratings are raw utility values in [-10, 10]; deviations are normalised by half the range.
RATING_SCALE = 10.0
HALF_LIFE_ROUNDS = 5.0


class NoNearbyProvidersError(LookupError):
    """Raised when a consumer has nobody to ask for the service."""


class Rating(NamedTuple):
    evaluator: int
    target: int
    round: int
    value: float


class TrustEstimate(NamedTuple):
    value: float
    reliability: float


class Component(enum.Enum):
    INTERACTION = 'interaction'
    ROLE = 'role'
    WITNESS = 'witness'
    CERTIFIED = 'certified'


@dataclass(frozen=True)
class FireParams:
    history_size: int = 10
    recency_scaling: float = -HALF_LIFE_ROUNDS / math.log(0.5)
    branching_factor: int = 2
    referral_length: int = 5
    w_interaction: float = 2.0
    w_role: float = 2.0
    w_witness: float = 1.0
    w_certified: float = 0.5
    gamma_interaction: float = -math.log(0.5)
    gamma_role: float = -math.log(0.5)
    gamma_witness: float = -math.log(0.5)
    gamma_certified: float = -math.log(0.5)
    exploration: float = 0.2
    certified_capacity: int = 10

    def weight(self, component: Component) -> float:
        return {
            Component.INTERACTION: self.w_interaction,
            Component.ROLE: self.w_role,
            Component.WITNESS: self.w_witness,
            Component.CERTIFIED: self.w_certified,
        }[component]


@dataclass(frozen=True)
class RoleRule:
    value: float
    reliability: float
    targets: Optional[frozenset[int]] = None

    def matches(self, target: int) -> bool:
        return self.targets is None or target in self.targets


class RatingHistory:
    """Local rating lists, at most ``capacity`` per (evaluator, target), oldest evicted first."""

    def __init__(self, capacity: int = 10) -> None:
        self.capacity = capacity
        self._ratings: Dict[int, Dict[int, Deque[Rating]]] = {}

    def record(self, rating: Rating) -> None:
        by_target = self._ratings.setdefault(rating.evaluator, {})
        bucket = by_target.get(rating.target)
        if bucket is None:
            bucket = by_target[rating.target] = deque(maxlen=self.capacity)
        bucket.append(rating)

    def ratings(self, evaluator: int, target: int) -> Sequence[Rating]:
        return self._ratings.get(evaluator, {}).get(target, ())

    def forget_evaluator(self, evaluator: int) -> None:
        self._ratings.pop(evaluator, None)

    def forget_target(self, target: int) -> None:
        for by_target in self._ratings.values():
            by_target.pop(target, None)


def offer_certified_rating(store: List[Rating], rating: Rating, capacity: int) -> None:
    """Keep the ``capacity`` best-valued ratings (newest first among equal values)."""
    store.append(rating)
    if len(store) > capacity:
        store.sort(key=lambda r: (r.value, r.round), reverse=True)
        del store[capacity:]


def recency_weights(rounds: np.ndarray, now: int, recency_scaling: float) -> np.ndarray:
    return np.exp(-(now - rounds) / recency_scaling)


def component_trust(
    ratings: Sequence[Rating],
    now: int,
    recency_scaling: float,
    gamma: float,
) -> Optional[TrustEstimate]:
    if not ratings:
        return None
    values = np.fromiter((r.value for r in ratings), dtype=float, count=len(ratings))
    rounds = np.fromiter((r.round for r in ratings), dtype=float, count=len(ratings))
    weights = recency_weights(rounds, now, recency_scaling)
    total = float(weights.sum())
    value = float(weights @ values) / total
    rho_rating = 1.0 - math.exp(-gamma * total)
    deviation = float(weights @ np.abs(values - value)) / total
    rho_deviation = 1.0 - deviation / RATING_SCALE
    reliability = min(max(rho_rating * rho_deviation, 0.0), 1.0)
    return TrustEstimate(value, reliability)


def role_based_trust(evaluator: int, target: int, rules: Iterable[RoleRule]) -> Optional[TrustEstimate]:
    matching = [rule for rule in rules if rule.matches(target)]
    if not matching:
        return None
    total = sum(rule.reliability for rule in matching)
    if total > 0.0:
        value = sum(rule.reliability * rule.value for rule in matching) / total
    else:
        value = sum(rule.value for rule in matching) / len(matching)
    return TrustEstimate(value, max(rule.reliability for rule in matching))


class AcquaintanceGraph:
    """Referral network over consumers; witness sets are memoised per evaluator.

    Build a fresh graph each round so referrals reflect the current population.
    """

    def __init__(
        self,
        neighbours: Mapping[int, Sequence[int]],
        branching_factor: int,
        referral_length: int,
        rng: np.random.Generator,
    ) -> None:
        self._neighbours = neighbours
        self.branching_factor = branching_factor
        self.referral_length = referral_length
        self._rng = rng
        self._witnesses: Dict[int, List[int]] = {}

    def acquaintances(self, agent: int) -> Sequence[int]:
        return self._neighbours.get(agent, ())

    def witnesses(self, evaluator: int) -> List[int]:
        cached = self._witnesses.get(evaluator)
        if cached is None:
            cached = self._witnesses[evaluator] = self._referral_search(evaluator)
        return cached

    def _referral_search(self, evaluator: int) -> List[int]:
        visited = {evaluator}
        found: List[int] = []
        frontier = [evaluator]
        for _ in range(self.referral_length):
            next_frontier: List[int] = []
            for node in frontier:
                options = [a for a in self.acquaintances(node) if a not in visited]
                if len(options) > self.branching_factor:
                    picks = self._rng.choice(len(options), size=self.branching_factor, replace=False)
                    options = [options[int(i)] for i in picks]
                for agent in options:
                    visited.add(agent)
                    found.append(agent)
                    next_frontier.append(agent)
            if not next_frontier:
                break
            frontier = next_frontier
        return found


class FireModel:
    def __init__(self, params: FireParams = FireParams(), role_rules: Iterable[RoleRule] = ()) -> None:
        self.params = params
        self.history = RatingHistory(params.history_size)
        self.role_rules = tuple(role_rules)

    def record_rating(self, rating: Rating, provider: Optional[Provider] = None) -> None:
        self.history.record(rating)
        if provider is not None:
            offer_certified_rating(provider.certified_ratings, rating, self.params.certified_capacity)

    # ----- components -----
    def interaction_trust(self, evaluator: int, target: int, now: int) -> Optional[TrustEstimate]:
        return component_trust(
            self.history.ratings(evaluator, target),
            now,
            self.params.recency_scaling,
            self.params.gamma_interaction,
        )

    def witness_reputation(
        self, evaluator: int, target: int, now: int, graph: AcquaintanceGraph
    ) -> Optional[TrustEstimate]:
        ratings = [
            rating
            for witness in graph.witnesses(evaluator)
            if witness != evaluator
            for rating in self.history.ratings(witness, target)
        ]
        return component_trust(ratings, now, self.params.recency_scaling, self.params.gamma_witness)

    def role_based_trust(self, evaluator: int, target: int) -> Optional[TrustEstimate]:
        return role_based_trust(evaluator, target, self.role_rules)

    def certified_reputation(self, provider: Provider, now: int) -> Optional[TrustEstimate]:
        return component_trust(
            provider.certified_ratings,
            now,
            self.params.recency_scaling,
            self.params.gamma_certified,
        )

    def overall_trust(self, components: Mapping[Component, Optional[TrustEstimate]]) -> Optional[float]:
        defined = [(self.params.weight(c), est) for c, est in components.items() if est is not None]
        if not defined:
            return None
        denominator = sum(w * est.reliability for w, est in defined)
        if denominator <= 0.0:
            # Every defined source has zero reliability: fall back to the coefficient weights.
            weight_sum = sum(w for w, _ in defined)
            if weight_sum <= 0.0:
                return sum(est.value for _, est in defined) / len(defined)
            return sum(w * est.value for w, est in defined) / weight_sum
        return sum(w * est.reliability * est.value for w, est in defined) / denominator

    def components(
        self, evaluator: int, provider: Provider, now: int, graph: AcquaintanceGraph
    ) -> Dict[Component, Optional[TrustEstimate]]:
        return {
            Component.INTERACTION: self.interaction_trust(evaluator, provider.id, now),
            Component.ROLE: self.role_based_trust(evaluator, provider.id),
            Component.WITNESS: self.witness_reputation(evaluator, provider.id, now, graph),
            Component.CERTIFIED: self.certified_reputation(provider, now),
        }

    def trust(self, evaluator: int, provider: Provider, now: int, graph: AcquaintanceGraph) -> Optional[float]:
        return self.overall_trust(self.components(evaluator, provider, now, graph))

    # ----- selection -----
    def select_provider(
        self,
        evaluator: int,
        candidates: Sequence[Provider],
        now: int,
        graph: AcquaintanceGraph,
        rng: np.random.Generator,
    ) -> Provider:
        if not candidates:
            raise NoNearbyProvidersError(f'consumer {evaluator} has no nearby providers')
        known: List[tuple[Provider, float]] = []
        unknown: List[Provider] = []
        for provider in candidates:
            value = self.trust(evaluator, provider, now, graph)
            if value is None:
                unknown.append(provider)
            else:
                known.append((provider, value))
        if not known:
            return unknown[int(rng.integers(len(unknown)))]
        if unknown and rng.random() < self.params.exploration:
            return unknown[int(rng.integers(len(unknown)))]
        best = max(value for _, value in known)
        leaders = [provider for provider, value in known if value == best]
        if len(leaders) == 1:
            return leaders[0]
        return leaders[int(rng.integers(len(leaders)))]
