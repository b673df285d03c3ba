"""
Per-slot decisions and the horizon loop.

Each slot the simulator first solves the latency sub-problem for the
published task (assignment, then allocation) to learn the latency D it would
pay by re-sensing. With that number it decides between re-sensing (cost
beta_1 * D) and reusing the cached result (cost beta_2 * aoi), then updates
the cache. A task that is not cached is always re-sensed.

Usage::

        from crowdcache.policy import run_horizon
        from crowdcache.scenario import ScenarioConfig, generate_scenario

        result = run_horizon(generate_scenario(ScenarioConfig(rng_seed=1)), policy='proposed')
        print(result.metrics.mean_objective)
"""
from __future__ import generator_stop

from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np

from crowdcache import baselines
from crowdcache.allocation import AllocationResult, allocate, energy_check
from crowdcache.assignment import AssignmentResult, build_alpha, solve_matching
from crowdcache.baselines import PolicySpec, get_policy
from crowdcache.freshness_cache import SCENARIO_SKIPPED, CacheState, CommitResult
from crowdcache.logging import SlotLoggerAdapter
from crowdcache.object import Object
from crowdcache.scenario import Scenario, ScenarioConfig, SlotState, slot_states, task_frequency
from crowdcache.util import divide_or_zero

TRACE_COLUMNS = ('t', 'task_id', 'l', 'latency', 'aoi', 'slot_cost', 'cache_bits', 'evictions')


def decide_sensing(aoi: float, cached: bool, candidate_latency: float, beta: float, aoi_max: float) -> int:
    """
    1 (re-sense) when the task is not cached, or when its age lies within
    [0, aoi_max] and has reached beta times the latency re-sensing would
    cost; 0 (reuse) otherwise.
    """
    if not cached:
        return 1
    return int(0.0 <= aoi <= aoi_max and aoi >= beta * candidate_latency)


@dataclass(frozen=True)
class SlotDecision:
    slot: int
    task_id: int
    sensing: int
    cached: bool
    aoi: float
    candidate_latency: float
    slot_cost: float
    slot_duration: float
    feasible: bool
    assignment: Optional[AssignmentResult] = None
    allocation: Optional[AllocationResult] = None
    commit: Optional[CommitResult] = None
    cache_used: float = 0.0
    expired: Tuple[int, ...] = ()

    @property
    def evictions(self) -> int:
        return len(self.expired) + (len(self.commit.evicted) if self.commit is not None else 0)

    def trace_row(self) -> Tuple:
        return (self.slot, self.task_id, self.sensing, self.candidate_latency, self.aoi, self.slot_cost,
                self.cache_used, self.evictions)


@dataclass(frozen=True)
class RunMetrics:
    mean_objective: float
    cache_hit_rate: float
    mean_latency_on_sense: float
    mean_aoi_on_hit: float
    infeasible_slots: int
    num_slots: int

    @classmethod
    def from_trace(cls, trace: Sequence[SlotDecision]) -> 'RunMetrics':
        costs = np.array([d.slot_cost for d in trace], dtype=float)
        sensed = [d.candidate_latency for d in trace if d.sensing]
        hits = [d.aoi for d in trace if not d.sensing]
        return cls(
            mean_objective=float(costs.mean()) if costs.size else 0.0,
            cache_hit_rate=divide_or_zero(len(hits), len(trace)),
            mean_latency_on_sense=float(np.mean(sensed)) if sensed else 0.0,
            mean_aoi_on_hit=float(np.mean(hits)) if hits else 0.0,
            infeasible_slots=sum(1 for d in trace if d.sensing and not d.feasible),
            num_slots=len(trace),
        )


@dataclass(frozen=True)
class HorizonResult:
    policy: str
    metrics: RunMetrics
    trace: Tuple[SlotDecision, ...]
    violations: Tuple[Tuple[int, Tuple[str, ...]], ...] = ()

    def trace_rows(self) -> List[Tuple]:
        return [d.trace_row() for d in self.trace]


def audit_slot(decision: SlotDecision, cache: CacheState, users: Sequence) -> List[str]:
    """Names of the constraints the slot's outcome violates (empty when none)."""
    violations = []
    if not decision.sensing:
        if not decision.cached:
            violations.append('C5')
        if decision.assignment is not None or decision.allocation is not None:
            violations.append('reuse_with_resources')
    else:
        assignment, allocation = decision.assignment, decision.allocation
        if assignment is not None:
            users_used = [k for k, _ in assignment.matching]
            channels_used = [n for _, n in assignment.matching]
            if len(set(users_used)) != len(users_used) or len(set(channels_used)) != len(channels_used):
                violations.append('C3/C4')
        if allocation is not None:
            if allocation.feasible and allocation.allocated < allocation.demand * (1.0 - 1e-9):
                violations.append('C1')
            if not all(energy_check(allocation, users).values()):
                violations.append('C6')
    if cache.used > cache.capacity:
        violations.append('C2')
    if any(e.aoi >= cache.aoi_max or e.aoi < 0 for e in cache.entries.values()):
        violations.append('C7')
    if decision.slot_cost < 0:
        violations.append('cost')
    return violations


class Simulator(Object):
    """
    Runs one policy over a scenario. The cache is created per horizon; the
    policy's own random stream (random assignment, random sensing) comes from
    the scenario so that reruns are identical.
    """

    def __init__(self, config: ScenarioConfig, policy='proposed', name=None, logger=None, stats=None):
        self.policy = policy if isinstance(policy, PolicySpec) else get_policy(policy)
        super(Simulator, self).__init__(name=name or 'simulator.%s' % self.policy.name, logger=logger, stats=stats)
        self.config = config
        self._slot_logger = SlotLoggerAdapter(self._logger, self.policy.name)

    def new_cache(self) -> CacheState:
        return CacheState(self.config.cache_capacity, self.config.aoi_max, logger=self._logger, stats=self._stats)

    def solve_latency(self, state: SlotState, rng: np.random.Generator) -> Tuple[AssignmentResult, AllocationResult]:
        """Assignment and allocation for re-sensing the slot's task."""
        config, policy = self.config, self.policy
        alpha = build_alpha(state.users, state.channels, config.bandwidth, config.noise_density_w_hz)

        if policy.subchannel_strategy == 'hungarian':
            assignment = solve_matching(alpha)
        elif policy.subchannel_strategy == 'greedy_best_gain':
            assignment = baselines.greedy_best_gain_assign(state.channels, alpha)
        else:
            assignment = baselines.random_assign(alpha, rng)

        if policy.task_split == 'lemma1':
            allocation = allocate(assignment, state.users, state.task.size, strict=config.strict_lemma1)
        else:
            allocation = baselines.split_task(policy, assignment, state.users, state.task.size,
                                              weight=config.fractional_weight)
        return assignment, allocation

    def _decide(self, cached, aoi, candidate_latency, rng) -> int:
        rule = self.policy.sensing_rule
        if rule == 'definition4':
            return decide_sensing(aoi, cached, candidate_latency, self.config.sensing_threshold, self.config.aoi_max)
        if rule == 'random_bernoulli':
            return baselines.random_sensing(cached, self.config.resense_frequency, rng)
        return 1

    def _commit(self, cache: CacheState, task, frequencies) -> CommitResult:
        rule = self.policy.cache_rule
        if rule == 'bayesian':
            return cache.commit_sensing_result(task, frequencies)
        if rule == 'replace_oldest':
            return baselines.replace_oldest(cache, task)
        return CommitResult(task.task_id, False, SCENARIO_SKIPPED)

    def _slot_duration(self, sensing: int, latency: float) -> float:
        if self.config.slot_duration_mode == 'fixed':
            return self.config.fixed_slot_duration
        return latency if sensing else self.config.cache_hit_slot_duration

    def run_slot(self, state: SlotState, cache: CacheState, frequencies: Mapping[int, float],
                 rng: np.random.Generator, expired: Tuple[int, ...] = ()) -> SlotDecision:
        """
        One slot on a cache that has already been aged for this slot. Mutates
        CACHE when the task is re-sensed.
        """
        config = self.config
        self._slot_logger.slot = state.slot
        task = state.task
        cached, aoi = cache.lookup(task.task_id)

        with self._stats.timer('slot.latency_subproblem'):
            assignment, allocation = self.solve_latency(state, rng)
        latency = allocation.system_latency

        sensing = self._decide(cached, aoi, latency, rng)
        if not sensing:
            self._stats.incr('slot.reuse')
            self._slot_logger.debug('Reusing task %d at aoi %.4g (latency would be %.4g s)', task.task_id, aoi,
                                    latency)
            return SlotDecision(
                slot=state.slot, task_id=task.task_id, sensing=0, cached=cached, aoi=aoi,
                candidate_latency=latency, slot_cost=config.weight_aoi * aoi,
                slot_duration=self._slot_duration(0, latency), feasible=True,
                cache_used=cache.used, expired=expired,
            )

        self._stats.incr('slot.sense')
        if not allocation.feasible:
            self._stats.incr('slot.infeasible')
            self._slot_logger.warning('Energy caps leave %.4g of %.4g bits of task %d unallocated',
                                      allocation.shortfall, task.size, task.task_id)
        commit = self._commit(cache, task, frequencies)
        self._slot_logger.debug('Re-sensing task %d in %.4g s (cached=%s, aoi=%.4g, commit=%s, evicted=%s)',
                                task.task_id, latency, cached, aoi, commit.scenario, list(commit.evicted))
        return SlotDecision(
            slot=state.slot, task_id=task.task_id, sensing=1, cached=cached, aoi=aoi,
            candidate_latency=latency, slot_cost=config.weight_latency * latency,
            slot_duration=self._slot_duration(1, latency), feasible=allocation.feasible,
            assignment=assignment, allocation=allocation, commit=commit,
            cache_used=cache.used, expired=expired,
        )

    def run_horizon(self, scenario: Scenario) -> HorizonResult:
        """
        Slots 1..T: age the cache by the previous slot's duration, then decide
        with the publication counts of slots 1..t.
        """
        rng = scenario.policy_rng()
        cache = self.new_cache()
        trace = []
        violations = []
        previous_duration = 0.0

        self._logger.info('Running policy %s over %d slots (seed %d)', self.policy.name,
                          scenario.config.num_slots, scenario.config.rng_seed)
        with self._stats.timer('horizon.run'):
            for state in slot_states(scenario):
                expired = tuple(cache.advance_aoi(previous_duration))
                frequencies = task_frequency(scenario.task_schedule, state.slot, scenario.config.num_task_types)
                decision = self.run_slot(state, cache, frequencies, rng, expired)
                broken = audit_slot(decision, cache, state.users)
                if broken:
                    self._slot_logger.error('Slot violates %s', ', '.join(broken))
                    violations.append((state.slot, tuple(broken)))
                trace.append(decision)
                previous_duration = decision.slot_duration

        metrics = RunMetrics.from_trace(trace)
        self._logger.info('Policy %s: mean objective %.6g, hit rate %.3f, %d infeasible slots', self.policy.name,
                          metrics.mean_objective, metrics.cache_hit_rate, metrics.infeasible_slots)
        return HorizonResult(self.policy.name, metrics, tuple(trace), tuple(violations))


def run_slot(slot_index: int, task, users: Sequence, channels, cache_state: CacheState,
             frequencies: Mapping[int, float], config: ScenarioConfig, policy='proposed',
             rng: Optional[np.random.Generator] = None) -> Tuple[SlotDecision, CacheState]:
    """Functional form of :py:meth:`Simulator.run_slot`."""
    simulator = Simulator(config, policy)
    state = SlotState(slot=slot_index, task=task, users=tuple(users), channels=channels)
    rng = rng if rng is not None else np.random.default_rng(config.rng_seed)
    return simulator.run_slot(state, cache_state, frequencies, rng), cache_state


def run_horizon(scenario: Scenario, config: Optional[ScenarioConfig] = None, policy='proposed',
                logger=None, stats=None) -> HorizonResult:
    """Functional form of :py:meth:`Simulator.run_horizon`."""
    return Simulator(config or scenario.config, policy, logger=logger, stats=stats).run_horizon(scenario)
