"""
Tests for crowdcache.policy.
"""
from __future__ import generator_stop
import logging
import unittest

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from mock import MagicMock

from crowdcache.channel import ChannelRealization
from crowdcache.freshness_cache import SCENARIO_INSERT, SCENARIO_SKIPPED, CacheEntry, CacheState
from crowdcache.policy import RunMetrics, SlotDecision, Simulator, audit_slot, decide_sensing, run_horizon, run_slot
from crowdcache.scenario import ScenarioConfig, TaskType, UserProfile, generate_scenario

SMALL = ScenarioConfig(num_users=5, num_subchannels=4, num_task_types=3, num_slots=40, rng_seed=3)


def _users(count=2):
    return [UserProfile(k, 100.0, 0.2, 1e6, 1e-12, 10.0) for k in range(count)]


def _channels(count=2):
    return ChannelRealization(gains=np.full((count, count), 1e-9))


def _decision(slot, sensing, cost, aoi=0.0, latency=1.0, feasible=True):
    return SlotDecision(slot=slot, task_id=1, sensing=sensing, cached=True, aoi=aoi, candidate_latency=latency,
                        slot_cost=cost, slot_duration=1.0, feasible=feasible)


class DecideSensingTest(unittest.TestCase):

    def test_uncached_task_is_sensed(self):
        self.assertEqual(1, decide_sensing(0.0, False, 10.0, 7.0, 50.0))
        self.assertEqual(1, decide_sensing(100.0, False, 0.0, 7.0, 50.0))

    def test_fresh_result_is_reused(self):
        self.assertEqual(0, decide_sensing(5.0, True, 1.0, 7.0, 50.0))

    def test_stale_result_is_resensed(self):
        self.assertEqual(1, decide_sensing(7.0, True, 1.0, 7.0, 50.0))
        self.assertEqual(1, decide_sensing(49.0, True, 1.0, 7.0, 50.0))

    def test_age_outside_window(self):
        self.assertEqual(0, decide_sensing(51.0, True, 1.0, 7.0, 50.0))

    @given(aoi=st.floats(min_value=0.0, max_value=50.0), latency=st.floats(min_value=0.0, max_value=100.0),
           beta=st.floats(min_value=0.0, max_value=100.0))
    def test_threshold_is_monotone_in_age(self, aoi, latency, beta):
        if decide_sensing(aoi, True, latency, beta, 50.0):
            self.assertEqual(1, decide_sensing(min(50.0, aoi + 1.0), True, latency, beta, 50.0))


class RunSlotTest(unittest.TestCase):

    def test_uncached_task_is_sensed_and_cached(self):
        cache = CacheState(5e7, 50.0)

        decision, cache = run_slot(1, TaskType(2, 1e7), _users(), _channels(), cache, {2: 1}, SMALL)

        self.assertEqual(1, decision.sensing)
        self.assertFalse(decision.cached)
        self.assertEqual(SCENARIO_INSERT, decision.commit.scenario)
        self.assertEqual(SMALL.weight_latency * decision.candidate_latency, decision.slot_cost)
        self.assertEqual(decision.candidate_latency, decision.allocation.system_latency)
        self.assertEqual((True, 0.0), cache.lookup(2))
        self.assertEqual(1e7, decision.cache_used)

    def test_fresh_cached_task_is_reused(self):
        cache = CacheState(5e7, 50.0, {2: CacheEntry(2, 1e7, 0.5)})

        decision, cache = run_slot(4, TaskType(2, 1e7), _users(), _channels(), cache, {2: 3}, SMALL)

        self.assertEqual(0, decision.sensing)
        self.assertEqual(SMALL.weight_aoi * 0.5, decision.slot_cost)
        self.assertIsNone(decision.assignment)
        self.assertIsNone(decision.commit)
        self.assertEqual(SMALL.cache_hit_slot_duration, decision.slot_duration)
        self.assertEqual([], audit_slot(decision, cache, _users()))

    def test_always_sense_policy_skips_cache(self):
        cache = CacheState(5e7, 50.0, {2: CacheEntry(2, 1e7, 0.5)})

        decision, cache = run_slot(4, TaskType(2, 1e7), _users(), _channels(), cache, {2: 3}, SMALL, policy='b5')

        self.assertEqual(1, decision.sensing)
        self.assertEqual(SCENARIO_SKIPPED, decision.commit.scenario)
        self.assertEqual((True, 0.5), cache.lookup(2))

    def test_fixed_slot_duration(self):
        config = SMALL.replace(slot_duration_mode='fixed', fixed_slot_duration=2.5)

        decision, _ = run_slot(1, TaskType(1, 1e7), _users(), _channels(), CacheState(5e7, 50.0), {1: 1}, config)

        self.assertEqual(2.5, decision.slot_duration)


class AuditTest(unittest.TestCase):

    def test_reuse_without_cached_result(self):
        decision = SlotDecision(slot=1, task_id=1, sensing=0, cached=False, aoi=0.0, candidate_latency=1.0,
                                slot_cost=0.0, slot_duration=1.0, feasible=True)
        self.assertEqual(['C5'], audit_slot(decision, CacheState(1e7, 50.0), []))

    def test_overfull_cache(self):
        cache = CacheState(1e7, 50.0, {1: CacheEntry(1, 2e7, 0.0)})
        self.assertEqual(['C2'], audit_slot(_decision(1, 0, 0.0), cache, []))

    def test_stale_entry(self):
        cache = CacheState(1e8, 50.0, {1: CacheEntry(1, 1e7, 50.0)})
        self.assertEqual(['C7'], audit_slot(_decision(1, 0, 0.0), cache, []))


class RunMetricsTest(unittest.TestCase):

    def test_from_trace(self):
        trace = [
            _decision(1, 1, 4.0, latency=4.0),
            _decision(2, 0, 0.2, aoi=2.0),
            _decision(3, 1, 6.0, latency=6.0, feasible=False),
            _decision(4, 0, 0.4, aoi=4.0),
        ]

        metrics = RunMetrics.from_trace(trace)

        self.assertAlmostEqual(2.65, metrics.mean_objective)
        self.assertEqual(0.5, metrics.cache_hit_rate)
        self.assertEqual(5.0, metrics.mean_latency_on_sense)
        self.assertEqual(3.0, metrics.mean_aoi_on_hit)
        self.assertEqual(1, metrics.infeasible_slots)
        self.assertEqual(4, metrics.num_slots)

    def test_empty_trace(self):
        metrics = RunMetrics.from_trace([])
        self.assertEqual(0.0, metrics.mean_objective)
        self.assertEqual(0.0, metrics.cache_hit_rate)


class RunHorizonTest(unittest.TestCase):

    def setUp(self):
        self.scenario = generate_scenario(SMALL)

    def test_every_slot_is_traced(self):
        result = run_horizon(self.scenario)

        self.assertEqual('proposed', result.policy)
        self.assertEqual(SMALL.num_slots, len(result.trace))
        self.assertEqual(list(range(1, SMALL.num_slots + 1)), [d.slot for d in result.trace])
        self.assertEqual(list(self.scenario.task_schedule), [d.task_id for d in result.trace])
        self.assertEqual((), result.violations)
        # nothing is cached before the first slot
        self.assertEqual(1, result.trace[0].sensing)

    def test_reuse_only_when_cached(self):
        for policy in ('proposed', 'b1', 'b2', 'b3', 'b4', 'b5'):
            result = run_horizon(self.scenario, policy=policy)
            self.assertEqual((), result.violations, policy)
            for decision in result.trace:
                if not decision.sensing:
                    self.assertTrue(decision.cached)
                    self.assertLess(decision.aoi, SMALL.aoi_max)

    def test_always_sense_never_hits(self):
        result = run_horizon(self.scenario, policy='b5')

        self.assertEqual(0.0, result.metrics.cache_hit_rate)
        self.assertTrue(all(d.cache_used == 0.0 for d in result.trace))

    def test_reruns_are_identical(self):
        for policy in ('proposed', 'b2'):
            first = run_horizon(generate_scenario(SMALL), policy=policy)
            second = run_horizon(generate_scenario(SMALL), policy=policy)
            self.assertEqual(first.trace_rows(), second.trace_rows())
            self.assertEqual(first.metrics, second.metrics)

    def test_latency_mode_slot_durations(self):
        result = run_horizon(self.scenario)

        for decision in result.trace:
            expected = decision.candidate_latency if decision.sensing else SMALL.cache_hit_slot_duration
            self.assertEqual(expected, decision.slot_duration)

    def test_trace_rows(self):
        result = run_horizon(self.scenario)

        row = result.trace_rows()[0]
        self.assertEqual(8, len(row))
        self.assertEqual((1, self.scenario.task_schedule[0], 1), row[:3])

    def test_logs_summary(self):
        logger = MagicMock()

        run_horizon(self.scenario, logger=logger, stats=MagicMock())

        self.assertEqual(2, logger.info.call_count)
        self.assertNotIn(logging.ERROR, [c[0][0] for c in logger.log.call_args_list])

    def test_slot_sees_publication_counts_through_t(self):
        """
        Slot t commits with the counts of slots 1..t, the current publication included
        """
        simulator = Simulator(SMALL, 'proposed')
        seen = []
        original = simulator.run_slot

        def recording_run_slot(state, cache, frequencies, rng, expired=()):
            seen.append((state.slot, dict(frequencies)))
            return original(state, cache, frequencies, rng, expired)

        simulator.run_slot = recording_run_slot
        simulator.run_horizon(self.scenario)

        schedule = self.scenario.task_schedule
        self.assertEqual(SMALL.num_slots, len(seen))
        for t, frequencies in seen:
            for task_id in range(1, SMALL.num_task_types + 1):
                self.assertEqual(list(schedule[:t]).count(task_id), frequencies[task_id])


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_slot_cost_is_the_cheaper_option(seed):
    """
    With a re-sensing frequency of 1 the cost of a cached slot is the
    smaller of the weighted latency and the weighted age
    """
    config = SMALL.replace(resense_frequency=1.0, num_slots=30, rng_seed=seed)

    result = run_horizon(generate_scenario(config))

    for d in result.trace:
        if d.cached:
            expected = min(config.weight_latency * d.candidate_latency, config.weight_aoi * d.aoi)
            assert d.slot_cost == pytest.approx(expected, rel=1e-12)
        else:
            assert d.sensing == 1
