"""The round loop.

One ``Simulation`` owns one seeded random stream and every piece of mutable state of a
run, so a run is reproducible from ``(config, seed)`` alone and runs never share state.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from .ca_model import RequestMessage, Task, Trustee
from .config import ExperimentConfig
from .fire_model import AcquaintanceGraph, FireModel, Rating
from .population import (
    GROUP_ORDER,
    AgentFactory,
    Consumer,
    ConsumerGroup,
    PerformanceLevel,
    Provider,
    drift_performance,
    replace_population,
    sample_performance,
    switch_profile,
)
from .world import apply_angular_jitter, cartesian_array, neighbour_indices, pairwise_distances

logger = logging.getLogger(__name__)

WAVE_LEVELS = (
    PerformanceLevel.PERFECT,
    PerformanceLevel.GOOD,
    PerformanceLevel.OK,
    PerformanceLevel.BAD,
    PerformanceLevel.WORST,
)


class InteractionRecord(NamedTuple):
    run_id: int
    group: ConsumerGroup
    consumer_id: int
    interaction_index: int
    round: int
    ug: float


class RoundStats(NamedTuple):
    run_id: int
    round: int
    group: ConsumerGroup
    active: int
    served: int
    isolated: int


class RunResult(NamedTuple):
    records: List[InteractionRecord]
    round_stats: List[RoundStats]


@dataclass
class SimulationState:
    rng: np.random.Generator
    providers: List[Provider]
    consumers: List[Consumer]
    trustees: Dict[int, Trustee]
    fire: FireModel
    round: int = 0
    records: List[InteractionRecord] = field(default_factory=list)
    round_stats: List[RoundStats] = field(default_factory=list)


class Simulation:
    def __init__(self, config: ExperimentConfig, seed: int, run_id: int = 0) -> None:
        self.config = config
        self.run_id = run_id
        rng = np.random.default_rng(seed)
        self.factory = AgentFactory(config.world.radius_of_operation)
        providers = [self.factory.spawn_provider(kind, rng) for kind in config.population.provider_kinds()]
        consumers = [self.factory.spawn_consumer(group, rng) for group in config.population.consumer_groups()]
        self.state = SimulationState(
            rng=rng,
            providers=providers,
            consumers=consumers,
            trustees={p.id: Trustee(p.id, config.ca) for p in providers},
            fire=FireModel(config.fire),
        )
        self._nearby: List[List[Provider]] = []
        self._consumer_slot: Dict[int, int] = {}
        self._fire_neighbours: Dict[int, List[int]] = {}
        self._geometry_dirty = True
        self._graph: Optional[AcquaintanceGraph] = None

    # ----- geometry -----
    def _refresh_geometry(self) -> None:
        if not self._geometry_dirty:
            return
        providers = self.state.providers
        consumers = self.state.consumers
        consumer_xyz = cartesian_array([c.loc for c in consumers])
        radii = [c.radius_of_operation for c in consumers]
        provider_xyz = cartesian_array([p.loc for p in providers])
        to_providers = neighbour_indices(pairwise_distances(consumer_xyz, provider_xyz), radii)
        self._nearby = [[providers[int(i)] for i in row] for row in to_providers]

        fire_positions = [i for i, c in enumerate(consumers) if c.group is ConsumerGroup.FIRE]
        fire_xyz = consumer_xyz[fire_positions]
        fire_radii = [radii[i] for i in fire_positions]
        to_fire = neighbour_indices(pairwise_distances(fire_xyz, fire_xyz), fire_radii)
        fire_ids = [consumers[i].id for i in fire_positions]
        self._fire_neighbours = {
            fire_ids[row]: [fire_ids[int(j)] for j in cols if int(j) != row]
            for row, cols in enumerate(to_fire)
        }
        self._consumer_slot = {c.id: i for i, c in enumerate(consumers)}
        self._geometry_dirty = False

    def nearby_providers(self, consumer: Consumer) -> List[Provider]:
        self._refresh_geometry()
        return self._nearby[self._consumer_slot[consumer.id]]

    def acquaintance_graph(self) -> AcquaintanceGraph:
        self._refresh_geometry()
        return AcquaintanceGraph(
            self._fire_neighbours,
            self.config.fire.branching_factor,
            self.config.fire.referral_length,
            self.state.rng,
        )

    # ----- bookkeeping -----
    def _record(self, consumer: Consumer, ug: float) -> InteractionRecord:
        consumer.interaction_count += 1
        record = InteractionRecord(
            run_id=self.run_id,
            group=consumer.group,
            consumer_id=consumer.id,
            interaction_index=consumer.interaction_count,
            round=self.state.round,
            ug=ug,
        )
        self.state.records.append(record)
        return record

    def _sample(self, provider: Provider, consumer: Consumer) -> float:
        return sample_performance(provider, consumer.loc, self.state.rng, self.config.world.degradation_slope)

    # ----- protocols -----
    def run_round(self) -> None:
        state = self.state
        self._refresh_geometry()
        draws = state.rng.random(len(state.consumers))
        active = [c for c, draw in zip(state.consumers, draws) if draw < c.activity]
        self._graph = self.acquaintance_graph()

        served: Dict[ConsumerGroup, int] = {group: 0 for group in GROUP_ORDER}
        isolated: Dict[ConsumerGroup, int] = {group: 0 for group in GROUP_ORDER}
        waiting: List[Consumer] = []
        for consumer in active:
            if not self.nearby_providers(consumer):
                isolated[consumer.group] += 1
            elif consumer.group is ConsumerGroup.CA:
                waiting.append(consumer)
            elif self.serve_direct(consumer) is not None:
                served[consumer.group] += 1
        served[ConsumerGroup.CA] += len(self.ca_waves(waiting))

        for group in GROUP_ORDER:
            state.round_stats.append(
                RoundStats(
                    run_id=self.run_id,
                    round=state.round,
                    group=group,
                    active=sum(1 for c in active if c.group is group),
                    served=served[group],
                    isolated=isolated[group],
                )
            )
        logger.debug(
            'run %s round %s: %s active, served %s',
            self.run_id,
            state.round,
            len(active),
            {g.value: n for g, n in served.items()},
        )
        self._graph = None
        self.apply_dynamics()
        state.round += 1

    def serve_direct(self, consumer: Consumer) -> Optional[InteractionRecord]:
        candidates = self.nearby_providers(consumer)
        if not candidates:
            return None
        rng = self.state.rng
        if consumer.group is ConsumerGroup.FIRE:
            graph = self._graph or self.acquaintance_graph()
            provider = self.state.fire.select_provider(consumer.id, candidates, self.state.round, graph, rng)
        else:
            provider = candidates[int(rng.integers(len(candidates)))]
        ug = self._sample(provider, consumer)
        record = self._record(consumer, ug)
        if consumer.group is ConsumerGroup.FIRE:
            self.state.fire.record_rating(Rating(consumer.id, provider.id, self.state.round, ug), provider)
        return record

    def ca_waves(self, consumers: Sequence[Consumer]) -> List[InteractionRecord]:
        """Broadcast descending-quality requests until every consumer is served or WORST passed.

        Within a wave the providers take turns, one attempted task each per turn in a fresh
        random order, until none of them has a request it is willing to attempt.
        """
        state = self.state
        by_id = {c.id: c for c in consumers}
        served: set[int] = set()
        unserved = list(consumers)
        records: List[InteractionRecord] = []
        for level in WAVE_LEVELS:
            if not unserved:
                break
            task = Task(requirement=level)
            for consumer in unserved:
                message = RequestMessage(trustor=consumer.id, task=task, round=state.round)
                for provider in self.nearby_providers(consumer):
                    state.trustees[provider.id].handle_request(message)
            records.extend(self._serve_wave(by_id, served))
            unserved = [c for c in unserved if c.id not in served]
        for trustee in state.trustees.values():
            trustee.expire_pending()
        return records

    def _serve_wave(self, by_id: Dict[int, Consumer], served: set[int]) -> List[InteractionRecord]:
        state = self.state
        capacity = self.config.ca.wave_capacity
        attempts: Dict[int, int] = {}
        records: List[InteractionRecord] = []
        working = [p for p in state.providers if state.trustees[p.id].pending]
        while working:
            still_working: List[Provider] = []
            for slot in state.rng.permutation(len(working)):
                provider = working[int(slot)]
                trustee = state.trustees[provider.id]
                message = trustee.next_task(served)
                if message is None:
                    continue
                consumer = by_id[message.trustor]
                ug = self._sample(provider, consumer)
                trustee.complete_task(message, ug)
                served.add(consumer.id)
                records.append(self._record(consumer, ug))
                attempts[provider.id] = attempts.get(provider.id, 0) + 1
                if trustee.pending and not (capacity and attempts[provider.id] >= capacity):
                    still_working.append(provider)
            working = still_working
        return records

    # ----- dynamics -----
    def _chosen(self, count: int, probability: float) -> np.ndarray:
        if probability <= 0.0 or count == 0:
            return np.empty(0, dtype=int)
        return np.flatnonzero(self.state.rng.random(count) < probability)

    def apply_dynamics(self) -> None:
        state = self.state
        dynamics = self.config.dynamics
        rng = state.rng

        providers = replace_population(
            state.providers,
            dynamics.p_ppc,
            lambda kind: self.factory.spawn_provider(kind, rng),
            lambda p: p.kind,
            rng,
        )
        for provider in providers.departed:
            del state.trustees[provider.id]
            state.fire.history.forget_target(provider.id)
        for provider in providers.arrived:
            state.trustees[provider.id] = Trustee(provider.id, self.config.ca)
        state.providers = providers.agents

        consumers = replace_population(
            state.consumers,
            dynamics.p_cpc,
            lambda group: self.factory.spawn_consumer(group, rng),
            lambda c: c.group,
            rng,
        )
        for consumer in consumers.departed:
            state.fire.history.forget_evaluator(consumer.id)
            for trustee in state.trustees.values():
                trustee.forget_trustor(consumer.id)
        state.consumers = consumers.agents
        if providers.departed or consumers.departed:
            self._geometry_dirty = True

        for index in self._chosen(len(state.providers), dynamics.p_plc):
            provider = state.providers[int(index)]
            provider.loc = apply_angular_jitter(provider.loc, dynamics.delta_phi_max, rng)
            self._geometry_dirty = True
        for index in self._chosen(len(state.consumers), dynamics.p_clc):
            consumer = state.consumers[int(index)]
            consumer.loc = apply_angular_jitter(consumer.loc, dynamics.delta_phi_max, rng)
            self._geometry_dirty = True

        for index in self._chosen(len(state.providers), dynamics.p_mu_c):
            drift_performance(state.providers[int(index)], dynamics.m, rng)
        for index in self._chosen(len(state.providers), dynamics.p_profile_switch):
            switch_profile(state.providers[int(index)], rng)

    def run(self) -> RunResult:
        for _ in range(self.config.rounds):
            self.run_round()
        return RunResult(self.state.records, self.state.round_stats)


def run_simulation(config: ExperimentConfig, seed: int, run_id: int = 0) -> RunResult:
    if not isinstance(config, ExperimentConfig):
        raise TypeError('run_simulation expects an ExperimentConfig')
    logger.debug('starting run %s (experiment %s, seed %s)', run_id, config.experiment_id, seed)
    return Simulation(config, seed, run_id).run()
