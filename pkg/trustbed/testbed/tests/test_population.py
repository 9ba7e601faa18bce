from collections import Counter
from unittest import mock

import numpy as np
from django.test import SimpleTestCase

from testbed.population import (
    PROFILES,
    AgentFactory,
    ConsumerGroup,
    ProfileKind,
    drift_performance,
    replace_population,
    replacement_limit,
    sample_performance,
    switch_profile,
)
from testbed.world import Location


class SpawnTests(SimpleTestCase):
    def test_profile_mean_ranges(self):
        rng = np.random.default_rng(0)
        factory = AgentFactory()
        for _ in range(200):
            self.assertTrue(5.0 <= factory.spawn_provider(ProfileKind.GOOD, rng).mu <= 10.0)
            self.assertTrue(-10.0 <= factory.spawn_provider(ProfileKind.BAD, rng).mu <= 0.0)
            self.assertTrue(0.0 <= factory.spawn_provider(ProfileKind.ORDINARY, rng).mu <= 5.0)
        self.assertIsNone(factory.spawn_provider(ProfileKind.INTERMITTENT, rng).mu)

    def test_same_seed_same_provider(self):
        a = AgentFactory().spawn_provider(ProfileKind.GOOD, np.random.default_rng(4))
        b = AgentFactory().spawn_provider(ProfileKind.GOOD, np.random.default_rng(4))
        self.assertEqual((a.loc, a.mu, a.kind), (b.loc, b.mu, b.kind))

    def test_ids_are_unique_across_agent_types(self):
        rng = np.random.default_rng(1)
        factory = AgentFactory()
        ids = [factory.spawn_provider(ProfileKind.BAD, rng).id for _ in range(5)]
        ids += [factory.spawn_consumer(ConsumerGroup.CA, rng).id for _ in range(5)]
        self.assertEqual(len(set(ids)), 10)

    def test_consumer_activity(self):
        rng = np.random.default_rng(12)
        factory = AgentFactory()
        consumers = [factory.spawn_consumer(ConsumerGroup.CA, rng) for _ in range(10_000)]
        activities = [c.activity for c in consumers]
        self.assertTrue(all(0.25 <= a <= 1.0 for a in activities))
        self.assertAlmostEqual(float(np.mean(activities)), 0.625, delta=0.01)
        self.assertTrue(all(c.group is ConsumerGroup.CA for c in consumers))


class PerformanceTests(SimpleTestCase):
    def setUp(self):
        self.factory = AgentFactory(radius_of_operation=0.5)
        self.rng = np.random.default_rng(21)

    def test_intermittent_support(self):
        provider = self.factory.spawn_provider(ProfileKind.INTERMITTENT, self.rng)
        samples = [sample_performance(provider, provider.loc, self.rng) for _ in range(10_000)]
        self.assertGreaterEqual(min(samples), -5.0)
        self.assertLessEqual(max(samples), 5.0)

    def test_noise_free_draw_returns_mean(self):
        provider = self.factory.spawn_provider(ProfileKind.GOOD, self.rng)
        rng = mock.Mock()
        rng.normal.return_value = provider.mu
        self.assertEqual(sample_performance(provider, provider.loc, rng), provider.mu)
        rng.normal.assert_called_once_with(provider.mu, PROFILES[ProfileKind.GOOD].sigma)

    def test_linear_degradation_beyond_radius(self):
        provider = self.factory.spawn_provider(ProfileKind.GOOD, self.rng)
        provider.loc = Location(1.0, 0.0, np.pi / 2)
        provider.mu = 7.0
        far = Location(1.0, np.pi, np.pi / 2)
        rng = mock.Mock()
        rng.normal.return_value = 7.0
        # distance 2.0, radius 0.5: 1.5 units past the range at slope 10
        self.assertAlmostEqual(sample_performance(provider, far, rng, degradation_slope=10.0), -8.0)
        self.assertEqual(sample_performance(provider, far, rng, degradation_slope=100.0), -10.0)

    def test_samples_stay_in_range(self):
        for kind in ProfileKind:
            provider = self.factory.spawn_provider(kind, self.rng)
            for _ in range(500):
                consumer_loc = self.factory.spawn_consumer(ConsumerGroup.FIRE, self.rng).loc
                value = sample_performance(provider, consumer_loc, self.rng)
                self.assertTrue(-10.0 <= value <= 10.0)


class DriftAndSwitchTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(5)
        self.provider = AgentFactory().spawn_provider(ProfileKind.ORDINARY, self.rng)

    def test_zero_drift(self):
        before = self.provider.mu
        drift_performance(self.provider, 0.0, self.rng)
        self.assertEqual(self.provider.mu, before)

    def test_drift_clamps_at_perfect(self):
        self.provider.mu = 9.8
        rng = mock.Mock()
        rng.uniform.return_value = 1.0
        drift_performance(self.provider, 1.0, rng)
        self.assertEqual(self.provider.mu, 10.0)

    def test_drift_step_is_bounded(self):
        self.provider.mu = 0.0
        for _ in range(10_000):
            before = self.provider.mu
            drift_performance(self.provider, 1.0, self.rng)
            self.assertLessEqual(abs(self.provider.mu - before), 1.0)

    def test_intermittent_has_nothing_to_drift(self):
        provider = AgentFactory().spawn_provider(ProfileKind.INTERMITTENT, self.rng)
        drift_performance(provider, 1.0, self.rng)
        self.assertIsNone(provider.mu)

    def test_switch_always_changes_profile(self):
        for _ in range(200):
            old = self.provider.kind
            switch_profile(self.provider, self.rng)
            self.assertIsNot(self.provider.kind, old)
            if self.provider.kind is ProfileKind.BAD:
                self.assertTrue(-10.0 <= self.provider.mu <= 0.0)
            if self.provider.kind is ProfileKind.INTERMITTENT:
                self.assertIsNone(self.provider.mu)

    def test_switch_is_seeded(self):
        def outcome():
            provider = AgentFactory().spawn_provider(ProfileKind.GOOD, np.random.default_rng(3))
            switch_profile(provider, np.random.default_rng(30))
            return provider.kind, provider.mu

        self.assertEqual(outcome(), outcome())


class ReplacementTests(SimpleTestCase):
    def setUp(self):
        self.factory = AgentFactory()
        self.rng = np.random.default_rng(77)
        kinds = [ProfileKind.GOOD] * 10 + [ProfileKind.ORDINARY] * 40 + [ProfileKind.INTERMITTENT] * 5 + [ProfileKind.BAD] * 45
        self.providers = [self.factory.spawn_provider(kind, self.rng) for kind in kinds]

    def _replace(self, agents, p_limit):
        return replace_population(
            agents,
            p_limit,
            lambda kind: self.factory.spawn_provider(kind, self.rng),
            lambda p: p.kind,
            self.rng,
        )

    def test_zero_limit_changes_nothing(self):
        result = self._replace(self.providers, 0.0)
        self.assertEqual([p.id for p in result.agents], [p.id for p in self.providers])
        self.assertEqual((result.departed, result.arrived), ([], []))

    def test_limit_and_proportions(self):
        agents = self.providers
        before = Counter(p.kind for p in agents)
        seen_counts = set()
        for _ in range(300):
            result = self._replace(agents, 0.02)
            seen_counts.add(len(result.departed))
            self.assertLessEqual(len(result.departed), 2)
            self.assertEqual(
                Counter(p.kind for p in result.departed), Counter(p.kind for p in result.arrived)
            )
            self.assertEqual(Counter(p.kind for p in result.agents), before)
            self.assertEqual(len(result.agents), 100)
            agents = result.agents
        self.assertEqual(seen_counts, {0, 1, 2})

    def test_newcomers_take_the_departed_slots(self):
        result = self._replace(self.providers, 0.10)
        departed_ids = {p.id for p in result.departed}
        for old, new in zip(self.providers, result.agents):
            if old.id in departed_ids:
                self.assertIn(new, result.arrived)
                self.assertIs(new.kind, old.kind)
            else:
                self.assertIs(new, old)

    def test_limit_rounding(self):
        self.assertEqual(replacement_limit(0.10, 100), 10)
        self.assertEqual(replacement_limit(0.02, 100), 2)
        self.assertEqual(replacement_limit(0.05, 500), 25)
        self.assertEqual(replacement_limit(0.0, 100), 0)
