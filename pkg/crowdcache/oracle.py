"""
Brute-force references for the per-slot solvers, and runtime scaling measurements.

The references are slow and exact enough to validate the fast paths on
small instances:

* matching: enumerate every injective pairing;
* allocation: solve the min-max program as a linear program;
* eviction: enumerate every eviction set that restores the capacity.

Usage::

        from crowdcache.oracle import run_oracle_suite

        report = run_oracle_suite(instances=1000, seed=7)
        print(report.format())
"""
from __future__ import generator_stop

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from crowdcache.allocation import allocate, energy_caps
from crowdcache.assignment import AlphaMatrix, build_alpha, solve_matching
from crowdcache.channel import draw_channels
from crowdcache.freshness_cache import CacheEntry, CacheState, posterior_scores_for
from crowdcache.logging import get_logger
from crowdcache.policy import Simulator, run_horizon
from crowdcache.scenario import ScenarioConfig, TaskType, draw_user_parameters, generate_scenario, slot_states
from crowdcache.util import loglog_slope, relative_difference

MATCHING_RTOL = 1e-12
UNCAPPED_RTOL = 1e-6
EQUAL_TIME_RTOL = 1e-12
CAPPED_RTOL = 1e-4
POSTERIOR_MASS_ATOL = 1e-12


def brute_force_matching(alpha: AlphaMatrix) -> float:
    """Largest sum of 1/alpha over all matchings of size min(K, N)."""
    weights = 1.0 / alpha.alpha
    num_users, num_subchannels = weights.shape
    if num_users > num_subchannels:
        weights = weights.T
        num_users, num_subchannels = num_subchannels, num_users
    columns = np.array(list(itertools.permutations(range(num_subchannels), num_users)), dtype=int)
    return float(weights[np.arange(num_users), columns].sum(axis=1).max())


def lp_minmax_allocation(alphas: Sequence[float], demand: float,
                         caps: Optional[Sequence[float]] = None) -> Optional[Tuple[float, np.ndarray]]:
    """
    Solve min t s.t. alpha_k z_k <= t, sum z_k = DEMAND, 0 <= z_k <= cap_k.

    Returns (t, z) or None when the caps cannot cover the demand. The program
    is solved over fractions of the demand with completion times scaled by
    the fastest user, so the coefficients stay near 1.
    """
    alpha_array = np.asarray(alphas, dtype=float)
    size = alpha_array.size
    scale = float(alpha_array.min() * demand)
    coefficients = alpha_array * demand / scale

    objective = np.zeros(size + 1)
    objective[-1] = 1.0
    a_ub = np.hstack([np.diag(coefficients), -np.ones((size, 1))])
    a_eq = np.hstack([np.ones((1, size)), np.zeros((1, 1))])
    upper = [None] * size if caps is None else [min(1.0, c / demand) for c in caps]
    bounds = [(0.0, u) for u in upper] + [(0.0, None)]

    result = linprog(objective, A_ub=a_ub, b_ub=np.zeros(size), A_eq=a_eq, b_eq=[1.0], bounds=bounds,
                     method='highs')
    if result.status != 0:
        return None
    return float(result.x[-1] * scale), result.x[:-1] * demand


def exhaustive_min_posterior_eviction(entries: Mapping[int, CacheEntry], frequencies: Mapping[int, float],
                                      capacity: float) -> Tuple[FrozenSet[int], float]:
    """
    Among the eviction sets that bring ENTRIES within CAPACITY, the one
    discarding the least posterior mass (fewest entries on ties).
    """
    scores = posterior_scores_for(entries, frequencies)
    ids = sorted(entries)
    best = None  # type: Optional[Tuple[float, int, FrozenSet[int]]]
    for count in range(len(ids) + 1):
        for subset in itertools.combinations(ids, count):
            kept = math.fsum(entries[i].size for i in ids if i not in subset)
            if kept > capacity:
                continue
            mass = math.fsum(scores[i].posterior for i in subset)
            candidate = (mass, count, frozenset(subset))
            if best is None or candidate[:2] < best[:2]:
                best = candidate
    if best is None:
        raise ValueError('no eviction set fits capacity %r' % (capacity,))
    return best[2], best[0]


@dataclass
class OracleCheck:
    name: str
    instances: int = 0
    failures: int = 0
    worst_error: float = 0.0
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def record(self, error: float, tolerance: float):
        self.instances += 1
        self.worst_error = max(self.worst_error, error)
        if error > tolerance:
            self.failures += 1


@dataclass
class OracleReport:
    checks: Dict[str, OracleCheck] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def format(self) -> str:
        lines = []
        for check in self.checks.values():
            lines.append('%-20s %-4s instances=%d failures=%d worst=%.3g time=%.2fs' % (
                check.name, 'ok' if check.passed else 'FAIL', check.instances, check.failures,
                check.worst_error, check.seconds))
        return '\n'.join(lines) + '\n'


def _random_users(rng, config, count):
    distances = rng.uniform(*config.distance_range, size=count)
    return draw_user_parameters(rng, config, distances)


def _solved_slot(rng, config, num_users, num_subchannels):
    users = _random_users(rng, config, num_users)
    channels = draw_channels(users, num_subchannels, rng)
    alpha = build_alpha(users, channels, config.bandwidth, config.noise_density_w_hz)
    return users, alpha, solve_matching(alpha)


def check_matching(instances: int, rng: np.random.Generator, max_side: int = 6) -> OracleCheck:
    check = OracleCheck('matching')
    started = time.perf_counter()
    for _ in range(instances):
        shape = rng.integers(1, max_side + 1, size=2)
        alpha = AlphaMatrix.from_alpha(rng.uniform(0.1, 10.0, size=shape))
        expected = brute_force_matching(alpha)
        check.record(relative_difference(solve_matching(alpha).objective_weight_sum, expected), MATCHING_RTOL)
    check.seconds = time.perf_counter() - started
    return check


def check_uncapped_allocation(instances: int, rng: np.random.Generator, config: ScenarioConfig,
                              max_users: int = 8) -> OracleCheck:
    check = OracleCheck('allocation_uncapped')
    started = time.perf_counter()
    uncapped = config.replace(energy_budget_range=(1e9, 1e9))
    for _ in range(instances):
        k = int(rng.integers(1, max_users + 1))
        users, _, assignment = _solved_slot(rng, uncapped, k, int(rng.integers(k, 2 * k + 1)))
        demand = float(rng.uniform(*config.task_size_range))
        allocation = allocate(assignment, users, demand)
        times = list(allocation.completion_times.values())
        spread = relative_difference(max(times), min(times))
        reference = lp_minmax_allocation([assignment.per_user_alpha[u] for u, _ in assignment.matching], demand)
        if reference is None or spread > EQUAL_TIME_RTOL:
            check.record(np.inf, UNCAPPED_RTOL)
            continue
        check.record(relative_difference(allocation.system_latency, reference[0]), UNCAPPED_RTOL)
    check.seconds = time.perf_counter() - started
    return check


def check_capped_allocation(instances: int, rng: np.random.Generator, config: ScenarioConfig,
                            max_users: int = 4) -> OracleCheck:
    check = OracleCheck('allocation_capped')
    started = time.perf_counter()
    for _ in range(instances):
        k = int(rng.integers(1, max_users + 1))
        users, _, assignment = _solved_slot(rng, config, k, k)
        demand = float(rng.uniform(*config.task_size_range))
        caps = energy_caps(assignment, users)
        order = [u for u, _ in assignment.matching]
        allocation = allocate(assignment, users, demand)
        reference = lp_minmax_allocation([assignment.per_user_alpha[u] for u in order], demand,
                                         [caps[u] for u in order])
        if reference is None:
            # both must agree the caps cannot cover the demand
            check.record(0.0 if not allocation.feasible else np.inf, CAPPED_RTOL)
            continue
        if not allocation.feasible:
            check.record(np.inf, CAPPED_RTOL)
            continue
        check.record(relative_difference(allocation.system_latency, reference[0]), CAPPED_RTOL)
    check.seconds = time.perf_counter() - started
    return check


def check_eviction(instances: int, rng: np.random.Generator, max_entries: int = 6,
                   unit_size: float = 1e7) -> OracleCheck:
    """Equal-size results, so the greedy prefix is the minimal-mass eviction set."""
    check = OracleCheck('eviction')
    started = time.perf_counter()
    for _ in range(instances):
        count = int(rng.integers(1, max_entries))
        capacity = count * unit_size
        entries = {i: CacheEntry(i, unit_size, float(rng.uniform(0.0, 49.0))) for i in range(1, count + 1)}
        frequencies = {i: int(rng.integers(0, 20)) for i in range(1, count + 2)}
        cache = CacheState(capacity, 50.0, entries)
        incoming = TaskType(count + 1, unit_size)

        candidates = dict(cache.entries)
        candidates[incoming.task_id] = CacheEntry(incoming.task_id, unit_size, 0.0)
        _, expected_mass = exhaustive_min_posterior_eviction(candidates, frequencies, capacity)
        scores = posterior_scores_for(candidates, frequencies)

        result = cache.commit_sensing_result(incoming, frequencies)
        mass = math.fsum(scores[i].posterior for i in result.evicted)
        error = abs(mass - expected_mass)
        if cache.used > capacity:
            error = np.inf
        check.record(error, POSTERIOR_MASS_ATOL)
    check.seconds = time.perf_counter() - started
    return check


def run_oracle_suite(instances: int, seed: int, config: Optional[ScenarioConfig] = None,
                     logger=None) -> OracleReport:
    """
    Every check on INSTANCES random instances (allocation checks on a tenth
    of them, they solve a linear program each).
    """
    logger = logger or get_logger(__name__)
    config = config or ScenarioConfig()
    rng = np.random.default_rng(seed)
    report = OracleReport()
    lp_instances = max(1, instances // 10)
    for check in (
        check_matching(instances, rng),
        check_uncapped_allocation(lp_instances, rng, config),
        check_capped_allocation(lp_instances, rng, config),
        check_eviction(instances, rng),
    ):
        logger.info('Oracle %s: %d instances, %d failures, worst error %.3g', check.name, check.instances,
                    check.failures, check.worst_error)
        report.checks[check.name] = check
    return report


@dataclass(frozen=True)
class ScalingResult:
    """Median runtime (seconds) per size and the log-log slope across sizes."""
    medians: Dict[int, float]
    slope: float


def measure_complexity(num_users: int, subchannel_values: Sequence[int], repeats: int = 20, seed: int = 0,
                       config: Optional[ScenarioConfig] = None) -> ScalingResult:
    """Median runtime of one latency sub-problem (matching + allocation) per N at fixed K."""
    config = config or ScenarioConfig()
    rng = np.random.default_rng(seed)
    medians = {}
    for n in subchannel_values:
        sized = config.replace(num_users=num_users, num_subchannels=int(n))
        simulator = Simulator(sized, 'proposed')
        scenario = generate_scenario(sized.replace(num_slots=1))
        state = next(slot_states(scenario))
        samples = []
        for _ in range(repeats):
            started = time.perf_counter()
            simulator.solve_latency(state, rng)
            samples.append(time.perf_counter() - started)
        medians[int(n)] = float(np.median(samples))
    return ScalingResult(medians, loglog_slope(list(medians), list(medians.values())))


def measure_horizon_scaling(slot_values: Sequence[int], seed: int = 0,
                            config: Optional[ScenarioConfig] = None, policy: str = 'proposed') -> ScalingResult:
    """Runtime of a whole horizon per T."""
    config = config or ScenarioConfig()
    runtimes = {}
    for t in slot_values:
        scenario = generate_scenario(config.replace(num_slots=int(t), rng_seed=seed))
        started = time.perf_counter()
        run_horizon(scenario, policy=policy)
        runtimes[int(t)] = time.perf_counter() - started
    return ScalingResult(runtimes, loglog_slope(list(runtimes), list(runtimes.values())))
